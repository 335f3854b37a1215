//! The CLI verbs as library functions.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use ufgm_core::problems::reference::{reference_config, reference_solution_with_progress, ReferenceSolution};
use ufgm_core::recurrence::{claim_target_slope, fit_loglog_slope, generate_claim_sequence};
use ufgm_core::{
    run_with, CompositeProblem, ConvergenceTrace, InvariantChecks, Reporter, RunOptions, SolverState, TraceRow,
    VectorState,
};

use crate::config::{ExperimentConfig, ReferencePolicy};
use crate::error::CliError;
use crate::trace_csv::{real, write_trace};

/// `F*` and, when known, a minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub energy: f64,
    pub x: Option<VectorState>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub trace: ConvergenceTrace,
    pub reference: Option<Reference>,
    pub path: Option<PathBuf>,
}

/// File name of the reference cache for this problem.
pub fn reference_path(cfg: &ExperimentConfig, problem: &CompositeProblem) -> PathBuf {
    let fp = problem.fingerprint();
    let mut name = fp.kind.clone();
    for (k, v) in &fp.params {
        name.push_str(&format!("_{k}{v}"));
    }
    cfg.cache_dir.join(format!("{name}.ref"))
}

/// Loads or builds the reference for `problem`, regardless of policy.
pub fn build_reference(cfg: &ExperimentConfig, problem: &CompositeProblem) -> Result<ReferenceSolution, CliError> {
    let path = reference_path(cfg, problem);
    let solver = reference_config(cfg.reference_eps)?;
    let started = std::time::Instant::now();
    let sol = reference_solution_with_progress(
        problem,
        &solver,
        VectorState::zeros(problem.dim()),
        cfg.reference_iterations,
        &path,
        &mut |n, f| {
            if n % 100_000 == 0 {
                log::info!(
                    "reference {}: n = {n}, F = {f:.12e}, {:.0?}",
                    path.display(),
                    started.elapsed()
                );
            }
        },
    )?;
    Ok(sol)
}

/// Reference according to the configured policy.
pub fn resolve_reference(cfg: &ExperimentConfig, problem: &CompositeProblem) -> Result<Option<Reference>, CliError> {
    if cfg.reference == ReferencePolicy::None {
        return Ok(None);
    }
    if let Some(energy) = cfg.problem.known_minimum() {
        return Ok(Some(Reference { energy, x: None }));
    }
    let path = reference_path(cfg, problem);
    let cached = path.exists() || cfg.reference == ReferencePolicy::Build;
    if !cached {
        return Ok(None);
    }
    let sol = build_reference(cfg, problem)?;
    Ok(Some(Reference {
        energy: sol.energy,
        x: Some(sol.x),
    }))
}

fn trace_path(cfg: &ExperimentConfig) -> Option<PathBuf> {
    cfg.out.as_ref().map(|dir| dir.join(format!("{}.csv", cfg.name)))
}

fn write_to(path: &Path, trace: &ConvergenceTrace) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let file = fs::File::create(path)?;
    write_trace(std::io::BufWriter::new(file), trace)
}

/// Runs one configuration, calling `reporter` on every row, and writes the trace
/// to `<out>/<name>.csv` when an output directory is set.
pub fn solve_with(cfg: &ExperimentConfig, reporter: &mut dyn Reporter) -> Result<RunResult, CliError> {
    let problem = cfg.build_problem()?;
    let reference = resolve_reference(cfg, &problem)?;
    let x0 = VectorState::zeros(problem.dim());
    let gap = reference
        .as_ref()
        .map(|r| ufgm_core::eval_composite(&problem, &x0).map(|f0| f0 - r.energy))
        .transpose()?;
    let solver = cfg.solver_config(&problem, gap)?;
    let options = RunOptions {
        reference_energy: reference.as_ref().map(|r| r.energy),
        checks: cfg
            .check_every
            .filter(|&k| k > 0)
            .map(|k| InvariantChecks::new(k, cfg.seed)),
        skip_timing: !cfg.record_time,
    };
    let trace = run_with(&problem, &solver, x0, reporter, &options)?;
    let path = trace_path(cfg);
    if let Some(path) = &path {
        // a zero budget produces a header-only file; the in-memory trace keeps its start row
        if cfg.budget == 0 {
            write_to(path, &ConvergenceTrace::default())?;
        } else {
            write_to(path, &trace)?;
        }
    }
    Ok(RunResult {
        config: cfg.clone(),
        trace,
        reference,
        path,
    })
}

pub fn solve(cfg: &ExperimentConfig) -> Result<RunResult, CliError> {
    solve_with(cfg, &mut |_: &TraceRow, _: &SolverState| {})
}

/// One run per value of `axis`, executed in parallel; writes
/// `<out>/<name>_<axis>=<value>.csv` and `<out>/<name>_summary.csv`.
pub fn sweep(cfg: &ExperimentConfig, axis: &str, values: &[f64]) -> Result<Vec<RunResult>, CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let configs = values
        .iter()
        .map(|&v| {
            let mut c = cfg.with_value(axis, v)?;
            c.name = format!("{}_{axis}={v:e}", cfg.name);
            Ok(c)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    // build a shared reference once so parallel runs never race on the cache
    if cfg.reference == ReferencePolicy::Build && cfg.problem.known_minimum().is_none() {
        let axis_changes_problem = matches!(axis, "h" | "s" | "b" | "lam" | "dim");
        if !axis_changes_problem {
            build_reference(cfg, &cfg.build_problem()?)?;
        }
    }
    let results = configs.par_iter().map(solve).collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join(format!("{}_summary.csv", cfg.name)))?;
        w.write_record([axis, "iterations", "final_f", "final_energy_error"])?;
        for (v, r) in values.iter().zip(&results) {
            let last = r.trace.last().expect("trace has an initial row");
            w.write_record([
                real(*v),
                last.n.to_string(),
                real(last.f_value),
                last.energy_error.map(real).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }
    Ok(results)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRow {
    pub p: f64,
    pub q: f64,
    pub len: usize,
    pub slope: f64,
    pub target: f64,
    pub pass: bool,
}

/// The nine exponent pairs of the growth study.
pub fn default_pairs() -> Vec<(f64, f64)> {
    let mut pairs = Vec::new();
    for p in [10.0, 100.0, 1000.0] {
        for q in [1.0, 1.5, 2.0] {
            pairs.push((p, q));
        }
    }
    pairs
}

/// Claim-sequence growth study: per-pair `(n, A_n)` files and a slope report.
/// Invalid pairs are skipped with a warning.
pub fn recurrence(
    pairs: &[(f64, f64)],
    len: usize,
    window: (usize, usize),
    out: Option<&Path>,
) -> Result<Vec<SlopeRow>, CliError> {
    let mut rows = Vec::new();
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    for &(p, q) in pairs {
        let seq = match generate_claim_sequence(p, q, len) {
            Ok(seq) => seq,
            Err(e) => {
                log::warn!("skipping (p, q) = ({p}, {q}): {e}");
                continue;
            }
        };
        if seq.truncated {
            log::warn!("(p, q) = ({p}, {q}): overflow after {} terms", seq.len());
        }
        let slope = fit_loglog_slope(&seq, window.0..=window.1)?;
        let target = claim_target_slope(p, q);
        if let Some(dir) = out {
            let mut w = csv::Writer::from_path(dir.join(format!("claim_p{p}_q{q}.csv")))?;
            w.write_record(["n", "a"])?;
            for (k, a) in seq.values.iter().enumerate() {
                w.write_record([(k + 1).to_string(), real(*a)])?;
            }
            w.flush()?;
        }
        rows.push(SlopeRow {
            p,
            q,
            len: seq.len(),
            slope,
            target,
            pass: slope >= target - 0.02,
        });
    }
    if rows.is_empty() {
        return Err(CliError::Usage(
            "no valid (p, q) pair; each needs p > 2 >= q >= 1".into(),
        ));
    }
    if let Some(dir) = out {
        let mut w = csv::Writer::from_path(dir.join("recurrence_report.csv"))?;
        w.write_record([
            "p",
            "q",
            "length",
            "window_start",
            "window_end",
            "slope",
            "target",
            "pass",
        ])?;
        for r in &rows {
            w.write_record([
                r.p.to_string(),
                r.q.to_string(),
                r.len.to_string(),
                window.0.to_string(),
                window.1.to_string(),
                real(r.slope),
                real(r.target),
                r.pass.to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(rows)
}

/// Runs with the estimating-sequence checks every `every` iterations.
pub fn check_invariants(cfg: &ExperimentConfig, every: usize) -> Result<RunResult, CliError> {
    if every == 0 {
        return Err(CliError::Usage("--check-every must be positive".into()));
    }
    let mut cfg = cfg.clone();
    cfg.check_every = Some(every);
    solve(&cfg)
}
