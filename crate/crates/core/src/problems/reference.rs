//! Long-run reference solutions with an on-disk cache.
//!
//! Cache layout: a text header of `key=value` lines terminated by `end`,
//! followed by the coordinates as little-endian `f64`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::engine::{iterate, SolverConfig, SolverState};
use crate::error::{Error, Result};
use crate::oracle::CompositeProblem;
use crate::schedules::ToleranceSchedule;
use crate::vector::VectorState;

const MAGIC: &str = "ufgm-reference v1";

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x: VectorState,
    pub energy: f64,
    pub iterations: usize,
    pub fingerprint: String,
    /// True when loaded from disk rather than recomputed.
    pub cached: bool,
}

/// Configuration used for reference runs: no strong convexity, constant
/// tolerance `eps`, starting guess `L0 = 1`.
pub fn reference_config(eps: f64) -> Result<SolverConfig> {
    let tolerance = if eps == 0.0 {
        ToleranceSchedule::Zero
    } else {
        ToleranceSchedule::constant(eps, false)?
    };
    Ok(SolverConfig::new(2.0, 0.0, 1.0, tolerance))
}

fn cache_key(problem: &CompositeProblem, config: &SolverConfig, iterations: usize) -> String {
    format!(
        "{};iterations={};L0={};schedule={:?}",
        problem.fingerprint(),
        iterations,
        config.l0,
        config.tolerance
    )
}

/// Returns the cached reference for `problem` if the fingerprint matches,
/// otherwise runs `iterations` steps of `config` from `x0` and stores the result.
pub fn reference_solution(
    problem: &CompositeProblem,
    config: &SolverConfig,
    x0: VectorState,
    iterations: usize,
    cache_path: &Path,
) -> Result<ReferenceSolution> {
    reference_solution_with_progress(problem, config, x0, iterations, cache_path, &mut |_, _| {})
}

/// As [`reference_solution`], calling `progress(n, F(x_n))` every 10^4 steps of a fresh run.
pub fn reference_solution_with_progress(
    problem: &CompositeProblem,
    config: &SolverConfig,
    x0: VectorState,
    iterations: usize,
    cache_path: &Path,
    progress: &mut dyn FnMut(usize, f64),
) -> Result<ReferenceSolution> {
    let key = cache_key(problem, config, iterations);
    if cache_path.exists() {
        match load(cache_path) {
            Ok(found) if found.fingerprint == key && found.x.dim() == problem.dim() => return Ok(found),
            // stale or unreadable caches are rebuilt
            _ => {}
        }
    }
    let mut state = SolverState::new(problem, config, x0)?;
    while state.n < iterations {
        iterate(&mut state, problem, config)?;
        if state.n % 10_000 == 0 {
            progress(state.n, state.best_f);
        }
    }
    let solution = ReferenceSolution {
        energy: state.best_f,
        x: state.x,
        iterations,
        fingerprint: key,
        cached: false,
    };
    store(cache_path, &solution)?;
    Ok(solution)
}

/// Atomically writes `solution` to `path` (temp file then rename).
pub fn store(path: &Path, solution: &ReferenceSolution) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = PathBuf::from(path);
    tmp.set_extension(format!("tmp{}", std::process::id()));
    {
        let mut file = fs::File::create(&tmp)?;
        let mut header = String::new();
        header.push_str(MAGIC);
        header.push('\n');
        header.push_str(&format!("fingerprint={}\n", solution.fingerprint));
        header.push_str(&format!("dim={}\n", solution.x.dim()));
        header.push_str(&format!("iterations={}\n", solution.iterations));
        header.push_str(&format!("energy={:e}\n", solution.energy));
        header.push_str("end\n");
        file.write_all(header.as_bytes())?;
        let mut bytes = Vec::with_capacity(8 * solution.x.dim());
        for v in solution.x.iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        file.write_all(&bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ReferenceSolution> {
    let bad = |reason: &str| Error::CacheFormat {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut reader = BufReader::new(fs::File::open(path)?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(bad("missing magic line"));
    }
    let (mut fingerprint, mut dim, mut iterations, mut energy) = (None, None, None, None);
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(bad("header not terminated"));
        }
        let text = line.trim_end();
        if text == "end" {
            break;
        }
        let (k, v) = text.split_once('=').ok_or_else(|| bad("malformed header line"))?;
        match k {
            "fingerprint" => fingerprint = Some(v.to_string()),
            "dim" => dim = Some(v.parse::<usize>().map_err(|_| bad("bad dim"))?),
            "iterations" => iterations = Some(v.parse::<usize>().map_err(|_| bad("bad iterations"))?),
            "energy" => energy = Some(v.parse::<f64>().map_err(|_| bad("bad energy"))?),
            _ => {}
        }
    }
    let dim = dim.ok_or_else(|| bad("missing dim"))?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * dim {
        return Err(bad("payload length does not match dim"));
    }
    let x = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect::<Vec<_>>();
    Ok(ReferenceSolution {
        x: VectorState::from(x),
        energy: energy.ok_or_else(|| bad("missing energy"))?,
        iterations: iterations.ok_or_else(|| bad("missing iterations"))?,
        fingerprint: fingerprint.ok_or_else(|| bad("missing fingerprint"))?,
        cached: true,
    })
}
