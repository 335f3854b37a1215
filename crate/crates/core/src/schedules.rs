//! Tolerance-sequence policies and scheduled restarts.
//!
//! Tolerance schedules are pure functions of a [`ToleranceContext`]; they never
//! see the problem. The engine may query them several times per iteration
//! because `eps_n` depends on the trial weight `a_{n+1}`, which changes on
//! every backtracking doubling.

use crate::error::{Error, Result};

/// Everything a schedule may look at when choosing `(eps_n, delta_n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceContext {
    pub n: usize,
    /// Trial weight `a_{n+1}`.
    pub a_next: f64,
    /// `A_n`.
    pub a_prev: f64,
    /// Whether `F(x~_n) <= F(x_{n-1})` held on the previous iteration.
    pub energy_improved: bool,
    pub prev_eps: f64,
    pub prev_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tolerances {
    pub eps: f64,
    pub delta: f64,
}

impl Tolerances {
    pub fn new(eps: f64, delta: f64) -> Self {
        Self { eps, delta }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            eps: self.eps * factor,
            delta: self.delta * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ToleranceSchedule {
    /// `eps_n = delta_n = 0`; only meaningful for `q = 2` / `p = 2`.
    Zero,
    /// `split`: `eps_n = delta_n = eps/2`. Otherwise `eps_n = eps`, `delta_n = 0`.
    Constant { eps: f64, split: bool },
    /// `eps_n = C_eps / (a_{n+1} (A_n + a_{n+1})^exponent)`, `delta_n` alike with `C_delta`.
    Power { c_eps: f64, c_delta: f64, exponent: f64 },
    /// Keep the previous tolerances while the energy decreases, halve both otherwise.
    Adaptive { eps0: f64, delta0: f64 },
}

impl ToleranceSchedule {
    pub fn constant(eps: f64, split: bool) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "constant tolerance must be positive, got {eps}"
            )));
        }
        Ok(Self::Constant { eps, split })
    }

    /// Power-law schedule with exponent `2(p - q) / (p (3q - 2))`.
    pub fn power(c_eps: f64, c_delta: f64, p: f64, q: f64) -> Result<Self> {
        if !(c_eps >= 0.0 && c_delta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "power schedule constants must be nonnegative, got C_eps = {c_eps}, C_delta = {c_delta}"
            )));
        }
        Ok(Self::Power {
            c_eps,
            c_delta,
            exponent: power_exponent(p, q)?,
        })
    }

    pub fn adaptive(eps0: f64, delta0: f64) -> Result<Self> {
        if !(eps0 >= 0.0 && delta0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "adaptive schedule needs nonnegative start values, got eps0 = {eps0}, delta0 = {delta0}"
            )));
        }
        Ok(Self::Adaptive { eps0, delta0 })
    }

    pub fn tolerances(&self, ctx: &ToleranceContext) -> Tolerances {
        match *self {
            Self::Zero => Tolerances::default(),
            Self::Constant { eps, split: true } => Tolerances::new(0.5 * eps, 0.5 * eps),
            Self::Constant { eps, split: false } => Tolerances::new(eps, 0.0),
            Self::Power {
                c_eps,
                c_delta,
                exponent,
            } => {
                let denom = ctx.a_next * (ctx.a_prev + ctx.a_next).powf(exponent);
                Tolerances::new(c_eps / denom, c_delta / denom)
            }
            Self::Adaptive { eps0, delta0 } => {
                if ctx.n == 0 {
                    Tolerances::new(eps0, delta0)
                } else if ctx.energy_improved {
                    Tolerances::new(ctx.prev_eps, ctx.prev_delta)
                } else {
                    Tolerances::new(0.5 * ctx.prev_eps, 0.5 * ctx.prev_delta)
                }
            }
        }
    }
}

/// `2(p - q) / (p (3q - 2))`; reduces to `(2 - q)/(3q - 2)` at `p = 2`.
pub fn power_exponent(p: f64, q: f64) -> Result<f64> {
    if !(3.0 * q - 2.0 > 0.0) || !(p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "power schedule needs 3q - 2 > 0 and p > 0, got p = {p}, q = {q}"
        )));
    }
    Ok(2.0 * (p - q) / (p * (3.0 * q - 2.0)))
}

/// Restart lengths `t_k = C e^{(1 - q/p) k}`; a restart fires after
/// `sum_{k<=r} ceil(t_k)` iterations for every `r >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartSchedule {
    pub c: f64,
    pub gamma: f64,
    pub ratio: f64,
}

impl RestartSchedule {
    pub fn new(p: f64, q: f64, c: f64, gamma: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "restart constant C must be positive, got {c}"
            )));
        }
        if !(gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "restart gamma must be nonnegative, got {gamma}"
            )));
        }
        if !(p >= q) {
            return Err(Error::InvalidParameter(format!(
                "restart schedule needs p >= q, got p = {p}, q = {q}"
            )));
        }
        Ok(Self {
            c,
            gamma,
            ratio: 1.0 - q / p,
        })
    }

    /// `t_k` for `k >= 1`.
    pub fn length(&self, k: usize) -> f64 {
        self.c * (self.ratio * k as f64).exp()
    }

    /// Multiplier applied to the tolerance at each restart, `e^{-gamma}`.
    pub fn tolerance_factor(&self) -> f64 {
        (-self.gamma).exp()
    }

    pub fn fire_points(&self) -> FirePoints {
        FirePoints {
            schedule: *self,
            k: 0,
            cumulative: 0,
        }
    }
}

/// Iterator over cumulative restart points; ends once they no longer fit in `usize`.
#[derive(Debug, Clone)]
pub struct FirePoints {
    schedule: RestartSchedule,
    k: usize,
    cumulative: usize,
}

impl Iterator for FirePoints {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        self.k += 1;
        let t = self.schedule.length(self.k).ceil();
        if !(t < (usize::MAX - self.cumulative) as f64) {
            return None;
        }
        self.cumulative += (t as usize).max(1);
        Some(self.cumulative)
    }
}

/// The first `count` fire points, or fewer if the lengths outgrow `limit`.
pub fn restart_points(p: f64, q: f64, c: f64, gamma: f64, limit: usize) -> Result<Vec<usize>> {
    let schedule = RestartSchedule::new(p, q, c, gamma)?;
    Ok(schedule.fire_points().take_while(|&n| n <= limit).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartConstants {
    pub eps0: f64,
    pub gamma: f64,
    pub c: f64,
}

/// Constants of the scheduled-restart guarantee:
/// `gamma = (3q - 2)/2`, `eps0 = e^{-gamma} * gap`, and
/// `C = e^{q/p} (8 e^{2/e} kappa)^{q/(3q-2)} (e^gamma eps0)^{-2(p-q)/(p(3q-2))}`.
pub fn theoretical_restart_constants(p: f64, q: f64, kappa: f64, energy_gap: f64) -> Result<RestartConstants> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "condition number must be positive, got {kappa}"
        )));
    }
    let gamma = (3.0 * q - 2.0) / 2.0;
    let eps0 = (-gamma).exp() * energy_gap;
    let e = std::f64::consts::E;
    let c = (q / p).exp()
        * (8.0 * (2.0 / e).exp() * kappa).powf(q / (3.0 * q - 2.0))
        * (gamma.exp() * eps0).powf(-power_exponent(p, q)?);
    Ok(RestartConstants { eps0, gamma, c })
}
