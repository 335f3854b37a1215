use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ufgm_cli::commands;
use ufgm_cli::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "ufgm", version, about = "Run universal fast gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Experiment configuration (flat key = value file).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for traces.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Iteration budget (overrides the config).
    #[arg(long)]
    budget: Option<usize>,
    /// Seed for sampled invariant probes.
    #[arg(long)]
    seed: Option<u64>,
    /// Check the estimating-sequence inequalities every K iterations.
    #[arg(long)]
    check_every: Option<usize>,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its trace.
    Solve(Common),
    /// Run one configuration per value of a numeric key.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Config key to vary (defaults to `sweep_axis` from the config).
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values (defaults to `sweep_values` from the config).
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Growth study of the claim recurrence.
    Recurrence {
        /// Pairs as `p:q`, comma separated; defaults to the nine-pair grid.
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<String>,
        /// Sequence length.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Fit window as `start:end`.
        #[arg(long, default_value = "100:10000")]
        window: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build (or load) the cached reference solution.
    Reference(Common),
    /// Run with periodic estimating-sequence checks; exits 3 on a violation.
    CheckInvariants(Common),
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    if let Some(b) = common.budget {
        cfg.budget = b;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(k) = common.check_every {
        cfg.check_every = Some(k);
    }
    Ok(cfg)
}

fn pair(text: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("pair `{text}` is not `p:q`"));
    let (p, q) = text.split_once(':').ok_or_else(bad)?;
    Ok((
        p.trim().parse().map_err(|_| bad())?,
        q.trim().parse().map_err(|_| bad())?,
    ))
}

fn window(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("window `{text}` is not `start:end`"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(common) => {
            let result = commands::solve(&load(&common)?)?;
            let last = result.trace.last().expect("initial row");
            match &result.path {
                Some(p) => println!("{} ({} iterations, F = {:.12e})", p.display(), last.n, last.f_value),
                None => println!("{} iterations, F = {:.12e}", last.n, last.f_value),
            }
        }
        Command::Sweep { common, axis, values } => {
            let cfg = load(&common)?;
            let axis = axis
                .or_else(|| cfg.sweep_axis.clone())
                .ok_or_else(|| CliError::Usage("sweep needs --axis or sweep_axis".into()))?;
            let values = if values.is_empty() {
                cfg.sweep_values.clone()
            } else {
                values
            };
            for r in commands::sweep(&cfg, &axis, &values)? {
                let last = r.trace.last().expect("initial row");
                println!("{}: F = {:.12e}", r.config.name, last.f_value);
            }
        }
        Command::Recurrence {
            pairs,
            n,
            window: w,
            out,
        } => {
            let pairs = if pairs.is_empty() {
                commands::default_pairs()
            } else {
                pairs.iter().map(|s| pair(s)).collect::<Result<_, _>>()?
            };
            for r in commands::recurrence(&pairs, n, window(&w)?, out.as_deref())? {
                println!(
                    "p = {}, q = {}: slope {:.4} (target {:.4}) {}",
                    r.p,
                    r.q,
                    r.slope,
                    r.target,
                    if r.pass { "ok" } else { "below target" }
                );
            }
        }
        Command::Reference(common) => {
            let cfg = load(&common)?;
            let problem = cfg.build_problem()?;
            let sol = commands::build_reference(&cfg, &problem)?;
            println!(
                "{}: F* = {:.16e} after {} iterations{}",
                commands::reference_path(&cfg, &problem).display(),
                sol.energy,
                sol.iterations,
                if sol.cached { " (cached)" } else { "" }
            );
        }
        Command::CheckInvariants(common) => {
            let cfg = load(&common)?;
            let every = cfg.check_every.unwrap_or(50);
            let r = commands::check_invariants(&cfg, every)?;
            println!(
                "invariants held at every {every}th iteration up to n = {}",
                r.trace.last().expect("initial row").n
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
