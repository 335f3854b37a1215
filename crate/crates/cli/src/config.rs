//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use ufgm_core::problems::{
    make_fem_problem, make_holder_problem, make_l1_problem, make_power_problem, make_quadratic_problem,
};
use ufgm_core::schedules::RestartSchedule;
use ufgm_core::{CompositeProblem, SolverConfig, ToleranceSchedule};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Fem { h: f64, s: f64, b: f64 },
    Quadratic { dim: usize, mu: f64, lipschitz: f64 },
    Power { dim: usize, p: f64 },
    Holder { dim: usize, q: f64, mu: f64, radius: f64 },
    L1 { dim: usize, lam: f64 },
}

impl ProblemSpec {
    pub fn build(&self, mu: Option<f64>) -> Result<CompositeProblem, CliError> {
        let problem = match *self {
            Self::Fem { h, s, b } => make_fem_problem(h, s, b, mu.or_else(|| default_fem_mu(s)))?,
            Self::Quadratic { dim, mu, lipschitz } => make_quadratic_problem(dim, mu, lipschitz)?,
            Self::Power { dim, p } => make_power_problem(dim, p)?,
            Self::Holder { dim, q, mu, radius } => make_holder_problem(dim, q, mu, radius)?,
            Self::L1 { dim, lam } => make_l1_problem(dim, lam)?,
        };
        Ok(problem)
    }

    /// `(p, q)` implied by the problem.
    pub fn exponents(&self) -> (f64, f64) {
        match *self {
            Self::Fem { s, .. } => (s.max(2.0), s.min(2.0)),
            Self::Quadratic { .. } | Self::L1 { .. } => (2.0, 2.0),
            Self::Power { p, .. } => (p, 2.0),
            Self::Holder { q, .. } => (2.0, q),
        }
    }

    /// Minimum value when it is known in closed form.
    pub fn known_minimum(&self) -> Option<f64> {
        match self {
            Self::Quadratic { .. } | Self::Power { .. } | Self::Holder { .. } => Some(0.0),
            Self::Fem { .. } | Self::L1 { .. } => None,
        }
    }
}

/// Moduli used in the published FEM runs.
pub fn default_fem_mu(s: f64) -> Option<f64> {
    if s == 1.5 {
        Some(0.046)
    } else if s == 4.0 {
        Some(0.124)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    Universal,
    ScheduledRestart,
    StrongConst,
    StrongPower,
    StrongAdaptive,
    UniformConst,
    UniformPower,
    UniformAdaptive,
}

impl AlgorithmKind {
    pub const ALL: [Self; 8] = [
        Self::Universal,
        Self::ScheduledRestart,
        Self::StrongConst,
        Self::StrongPower,
        Self::StrongAdaptive,
        Self::UniformConst,
        Self::UniformPower,
        Self::UniformAdaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Universal => "universal",
            Self::ScheduledRestart => "scheduled_restart",
            Self::StrongConst => "strong_const",
            Self::StrongPower => "strong_power",
            Self::StrongAdaptive => "strong_adaptive",
            Self::UniformConst => "uniform_const",
            Self::UniformPower => "uniform_power",
            Self::UniformAdaptive => "uniform_adaptive",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == text)
    }

    fn uses_mu(self) -> bool {
        !matches!(self, Self::Universal | Self::ScheduledRestart)
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Starting tolerance for scheduled restarts; `Auto` means `e^{-gamma} (F(x0) - F*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eps0 {
    Value(f64),
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferencePolicy {
    /// Use an existing cache or a closed-form minimum.
    Cached,
    /// As `Cached`, building the cache when missing.
    Build,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemSpec,
    pub algorithm: AlgorithmKind,
    pub l0: f64,
    pub mu: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub eps: f64,
    pub c: Option<f64>,
    pub c_eps: f64,
    pub c_delta: f64,
    pub eps0: Option<Eps0>,
    pub delta0: Option<f64>,
    pub gamma: Option<f64>,
    pub budget: usize,
    pub max_backtracks: usize,
    pub out: Option<PathBuf>,
    pub check_every: Option<usize>,
    pub seed: u64,
    pub record_time: bool,
    pub reference: ReferencePolicy,
    pub reference_iterations: usize,
    pub reference_eps: f64,
    pub cache_dir: PathBuf,
    pub sweep_axis: Option<String>,
    pub sweep_values: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "run".into(),
            problem: ProblemSpec::Fem {
                h: 1.0 / 32.0,
                s: 1.5,
                b: 1.0,
            },
            algorithm: AlgorithmKind::Universal,
            l0: 1.0,
            mu: None,
            p: None,
            q: None,
            eps: 1e-10,
            c: None,
            c_eps: 0.0,
            c_delta: 1.0,
            eps0: None,
            delta0: None,
            gamma: None,
            budget: 10_000,
            max_backtracks: ufgm_core::engine::DEFAULT_MAX_BACKTRACKS,
            out: None,
            check_every: None,
            seed: 0,
            record_time: false,
            reference: ReferencePolicy::Cached,
            reference_iterations: 1_000_000,
            reference_eps: 1e-24,
            cache_dir: PathBuf::from("reference-cache"),
            sweep_axis: None,
            sweep_values: Vec::new(),
        }
    }
}

/// Keys a sweep may vary.
pub const NUMERIC_KEYS: &[&str] = &[
    "L0",
    "mu",
    "p",
    "q",
    "eps",
    "C",
    "restart_C",
    "C_eps",
    "C_delta",
    "eps0",
    "delta0",
    "gamma",
    "h",
    "s",
    "b",
    "lam",
    "dim",
    "budget",
];

fn number(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::Usage(format!("key `{key}`: `{value}` is not a number")))
}

fn count(key: &str, value: &str) -> Result<usize, CliError> {
    let x = number(key, value)?;
    if x < 0.0 || x.fract() != 0.0 || x > 1e15 {
        return Err(CliError::Usage(format!(
            "key `{key}`: `{value}` is not a nonnegative integer"
        )));
    }
    Ok(x as usize)
}

fn flag(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Usage(format!("key `{key}`: `{value}` is not a boolean"))),
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        // the problem kind decides how the shape keys are read
        let mut cfg = Self::default();
        let kind = pairs
            .iter()
            .rev()
            .find(|(k, _)| k == "kind")
            .map(|(_, v)| v.clone())
            .unwrap_or_else(|| "fem".into());
        cfg.problem = match kind.as_str() {
            "fem" => ProblemSpec::Fem {
                h: 1.0 / 32.0,
                s: 1.5,
                b: 1.0,
            },
            "quadratic" => ProblemSpec::Quadratic {
                dim: 10,
                mu: 0.01,
                lipschitz: 1.0,
            },
            "power" => ProblemSpec::Power { dim: 10, p: 4.0 },
            "holder" => ProblemSpec::Holder {
                dim: 10,
                q: 1.5,
                mu: 0.01,
                radius: 4.0,
            },
            "l1" => ProblemSpec::L1 { dim: 20, lam: 0.1 },
            other => return Err(CliError::Usage(format!("unknown problem kind `{other}`"))),
        };
        for (k, v) in &pairs {
            if k != "kind" {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let shape_key = |k: &str| CliError::Usage(format!("key `{k}` does not apply to this problem kind"));
        match key {
            "name" => self.name = value.to_string(),
            "algorithm" => {
                self.algorithm = AlgorithmKind::parse(value)
                    .ok_or_else(|| CliError::Usage(format!("unknown algorithm `{value}`")))?
            }
            "L0" => self.l0 = number(key, value)?,
            "mu" => {
                let mu = number(key, value)?;
                match &mut self.problem {
                    ProblemSpec::Quadratic { mu: m, .. } | ProblemSpec::Holder { mu: m, .. } => *m = mu,
                    _ => {}
                }
                self.mu = Some(mu);
            }
            "p" => self.p = Some(number(key, value)?),
            "q" => {
                let q = number(key, value)?;
                if let ProblemSpec::Holder { q: hq, .. } = &mut self.problem {
                    *hq = q;
                }
                self.q = Some(q);
            }
            "eps" => self.eps = number(key, value)?,
            "C" | "restart_C" => self.c = Some(number(key, value)?),
            "C_eps" => self.c_eps = number(key, value)?,
            "C_delta" => self.c_delta = number(key, value)?,
            "eps0" => {
                self.eps0 = Some(if value == "auto" {
                    Eps0::Auto
                } else {
                    Eps0::Value(number(key, value)?)
                })
            }
            "delta0" => self.delta0 = Some(number(key, value)?),
            "gamma" => self.gamma = Some(number(key, value)?),
            "budget" => self.budget = count(key, value)?,
            "max_backtracks" => self.max_backtracks = count(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "check_every" => self.check_every = Some(count(key, value)?),
            "seed" => self.seed = count(key, value)? as u64,
            "record_time" => self.record_time = flag(key, value)?,
            "reference" => {
                self.reference = match value {
                    "cached" => ReferencePolicy::Cached,
                    "build" => ReferencePolicy::Build,
                    "none" => ReferencePolicy::None,
                    _ => return Err(CliError::Usage(format!("key `reference`: unknown policy `{value}`"))),
                }
            }
            "reference_iterations" => self.reference_iterations = count(key, value)?,
            "reference_eps" => self.reference_eps = number(key, value)?,
            "cache_dir" => self.cache_dir = PathBuf::from(value),
            "sweep_axis" => self.sweep_axis = Some(value.to_string()),
            "sweep_values" => self.sweep_values = value.split(',').map(|v| number(key, v)).collect::<Result<_, _>>()?,
            "h" | "s" | "b" => {
                let x = number(key, value)?;
                match &mut self.problem {
                    ProblemSpec::Fem { h, s, b } => {
                        *match key {
                            "h" => h,
                            "s" => s,
                            _ => b,
                        } = x
                    }
                    _ => return Err(shape_key(key)),
                }
            }
            "dim" => {
                let n = count(key, value)?;
                match &mut self.problem {
                    ProblemSpec::Quadratic { dim, .. }
                    | ProblemSpec::Power { dim, .. }
                    | ProblemSpec::Holder { dim, .. }
                    | ProblemSpec::L1 { dim, .. } => *dim = n,
                    ProblemSpec::Fem { .. } => return Err(shape_key(key)),
                }
            }
            "L" => match &mut self.problem {
                ProblemSpec::Quadratic { lipschitz, .. } => *lipschitz = number(key, value)?,
                _ => return Err(shape_key(key)),
            },
            "p_exp" => match &mut self.problem {
                ProblemSpec::Power { p, .. } => *p = number(key, value)?,
                _ => return Err(shape_key(key)),
            },
            "radius" => match &mut self.problem {
                ProblemSpec::Holder { radius, .. } => *radius = number(key, value)?,
                _ => return Err(shape_key(key)),
            },
            "lam" => match &mut self.problem {
                ProblemSpec::L1 { lam, .. } => *lam = number(key, value)?,
                _ => return Err(shape_key(key)),
            },
            _ => return Err(CliError::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Copy with a numeric key overridden, as used by sweeps.
    pub fn with_value(&self, key: &str, value: f64) -> Result<Self, CliError> {
        if !NUMERIC_KEYS.contains(&key) {
            return Err(CliError::Usage(format!(
                "sweep axis `{key}` is not a numeric config key"
            )));
        }
        let mut cfg = self.clone();
        cfg.set(key, &format!("{value:e}"))?;
        Ok(cfg)
    }

    /// `(p, q)` used by the solver: explicit keys override the problem's.
    pub fn exponents(&self) -> (f64, f64) {
        let (p, q) = self.problem.exponents();
        (self.p.unwrap_or(p), self.q.unwrap_or(q))
    }

    pub fn build_problem(&self) -> Result<CompositeProblem, CliError> {
        self.problem.build(self.mu)
    }

    pub fn gamma(&self) -> f64 {
        let (_, q) = self.exponents();
        self.gamma.unwrap_or(0.5 * (3.0 * q - 2.0))
    }

    /// Whether the solver configuration depends on `F*`.
    pub fn needs_minimum(&self) -> bool {
        self.algorithm == AlgorithmKind::ScheduledRestart && matches!(self.eps0.unwrap_or(Eps0::Auto), Eps0::Auto)
    }

    /// Engine parameterization for this algorithm. `gap` is `F(x0) - F*`,
    /// needed only for scheduled restarts with `eps0 = auto`.
    pub fn solver_config(&self, problem: &CompositeProblem, gap: Option<f64>) -> Result<SolverConfig, CliError> {
        let (p, q) = self.exponents();
        let mu = if self.algorithm.uses_mu() {
            self.mu
                .or(problem.regularity().mu)
                .ok_or_else(|| CliError::Usage(format!("algorithm `{}` needs `mu` for this problem", self.algorithm)))?
        } else {
            0.0
        };
        use AlgorithmKind::*;
        let schedule = match self.algorithm {
            Universal | StrongConst => ToleranceSchedule::constant(self.eps, false)?,
            UniformConst => ToleranceSchedule::constant(self.eps, true)?,
            ScheduledRestart => {
                let eps0 = match self.eps0.unwrap_or(Eps0::Auto) {
                    Eps0::Value(v) => v,
                    Eps0::Auto => {
                        let gap = gap.ok_or_else(|| {
                            CliError::Usage("eps0 = auto needs a reference solution (run `ufgm reference` or set reference = build)".into())
                        })?;
                        (-self.gamma()).exp() * gap
                    }
                };
                ToleranceSchedule::constant(eps0, false)?
            }
            StrongPower => ToleranceSchedule::power(self.c.unwrap_or(1e-4), 0.0, 2.0, q)?,
            UniformPower => ToleranceSchedule::power(self.c_eps, self.c_delta, p, q)?,
            StrongAdaptive => ToleranceSchedule::adaptive(self.eps0_value(1e-2)?, 0.0)?,
            UniformAdaptive => ToleranceSchedule::adaptive(self.eps0_value(0.0)?, self.delta0.unwrap_or(1e-2))?,
        };
        let engine_p = match self.algorithm {
            StrongConst | StrongPower | StrongAdaptive | Universal => 2.0,
            _ => p,
        };
        let mut cfg = SolverConfig::new(engine_p, mu, self.l0, schedule);
        cfg.max_backtracks = self.max_backtracks;
        if self.algorithm == ScheduledRestart {
            cfg = cfg.with_restart(RestartSchedule::new(p, q, self.c.unwrap_or(2.0), self.gamma())?);
        }
        cfg.validate()?;
        Ok(cfg.with_budget(ufgm_core::Budget::iterations(self.budget)))
    }

    fn eps0_value(&self, default: f64) -> Result<f64, CliError> {
        match self.eps0 {
            None => Ok(default),
            Some(Eps0::Value(v)) => Ok(v),
            Some(Eps0::Auto) => Err(CliError::Usage(format!(
                "eps0 = auto is only meaningful for scheduled_restart, not `{}`",
                self.algorithm
            ))),
        }
    }
}
