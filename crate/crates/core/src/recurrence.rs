//! Growth recurrences for the weights `A_n`: generators that satisfy the
//! premises with equality, checks against the closed-form lower bounds, and
//! log-log slope fitting.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};

/// Which recurrence produced a [`GrowthSequence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SequenceKind {
    /// `(A_{n+1} - A_n)^gamma = C A_n A_{n+1}^(gamma-1)`, `1 <= gamma <= 2`.
    Linear { gamma: f64, c: f64 },
    /// `A_{n+1} - A_n = C A_n^gamma`, `0 <= gamma < 1`.
    Sublinear { gamma: f64, c: f64 },
    /// The two-exponent recurrence with a running sum, see [`ClaimExponents`].
    Claim { p: f64, q: f64 },
}

/// `values[k]` is `A_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthSequence {
    pub values: Vec<f64>,
    pub kind: SequenceKind,
    /// Generation stopped before the requested length because of overflow.
    pub truncated: bool,
}

impl GrowthSequence {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `A_n` for `n >= 1`.
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|k| self.values.get(k).copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqualityKind {
    Linear,
    Sublinear,
}

/// Solves `t^gamma = C (1 + t)^(gamma - 1)` for `t > 0`.
///
/// The log-residual is strictly increasing, so bracketing plus bisection with
/// Newton acceleration always converges.
fn linear_ratio(gamma: f64, c: f64, n: usize) -> Result<f64> {
    let h = |t: f64| gamma * t.ln() - c.ln() - (gamma - 1.0) * t.ln_1p();
    let dh = |t: f64| gamma / t - (gamma - 1.0) / (1.0 + t);
    let (mut lo, mut hi) = (1e-300_f64.max(c.min(1.0) * 1e-3), 1.0_f64);
    while h(lo) > 0.0 {
        lo *= 1e-3;
        if lo == 0.0 {
            return Err(Error::RootFinding {
                n,
                reason: "lower bracket underflow".into(),
            });
        }
    }
    while h(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::RootFinding {
                n,
                reason: "upper bracket overflow".into(),
            });
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = h(t);
        if v == 0.0 {
            return Ok(t);
        }
        if v < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - v / dh(t);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - t).abs() <= 4.0 * f64::EPSILON * t || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        t = next;
    }
    Err(Error::RootFinding {
        n,
        reason: "no convergence in 200 steps".into(),
    })
}

/// Generates `A_1, ..., A_len` meeting the linear or sublinear premise with equality.
pub fn generate_equality_sequence(
    kind: EqualityKind,
    gamma: f64,
    c: f64,
    a1: f64,
    len: usize,
) -> Result<GrowthSequence> {
    let ok = match kind {
        EqualityKind::Linear => (1.0..=2.0).contains(&gamma),
        EqualityKind::Sublinear => (0.0..1.0).contains(&gamma),
    };
    if !ok || !(c > 0.0) || !(a1 > 0.0) || !c.is_finite() || !a1.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bad recurrence parameters: {kind:?}, gamma = {gamma}, C = {c}, A1 = {a1}"
        )));
    }
    let mut values = Vec::with_capacity(len);
    let mut truncated = false;
    if len > 0 {
        values.push(a1);
    }
    // the linear step ratio does not depend on A_n, but the solve is kept per step
    while values.len() < len {
        let a = *values.last().expect("nonempty");
        let next = match kind {
            EqualityKind::Linear => a * (1.0 + linear_ratio(gamma, c, values.len())?),
            EqualityKind::Sublinear => a + c * a.powf(gamma),
        };
        if !next.is_finite() {
            truncated = true;
            break;
        }
        values.push(next);
    }
    let kind = match kind {
        EqualityKind::Linear => SequenceKind::Linear { gamma, c },
        EqualityKind::Sublinear => SequenceKind::Sublinear { gamma, c },
    };
    Ok(GrowthSequence {
        values,
        kind,
        truncated,
    })
}

/// Relative residual of the premise at step `n -> n+1`.
pub fn premise_residual(seq: &GrowthSequence, n: usize) -> Option<f64> {
    let (a, b) = (seq.get(n)?, seq.get(n + 1)?);
    let d = b - a;
    match seq.kind {
        SequenceKind::Linear { gamma, c } => {
            // compare in log form to stay finite for large A_n
            let lhs = gamma * d.ln();
            let rhs = c.ln() + a.ln() + (gamma - 1.0) * b.ln();
            Some((lhs - rhs).abs())
        }
        SequenceKind::Sublinear { gamma, c } => {
            let rhs = c * a.powf(gamma);
            Some((d - rhs).abs() / rhs)
        }
        SequenceKind::Claim { .. } => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// `min_n A_n / bound_n`.
    pub min_slack: f64,
    pub argmin: usize,
    /// Indices where the slack falls below `1 - 1e-10`.
    pub violations: Vec<usize>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `ln` of the closed-form lower bound at index `n`, or `None` for claim sequences.
pub fn log_lower_bound(kind: SequenceKind, a1: f64, n: usize) -> Option<f64> {
    let nf = n as f64;
    match kind {
        SequenceKind::Linear { gamma, c } => Some(a1.ln() + gamma * (nf - 1.0) * (0.5 * c.powf(1.0 / gamma)).ln_1p()),
        SequenceKind::Sublinear { gamma, c } => {
            let r = 1.0 / (1.0 - gamma);
            let base = (c / (2.0 * (2f64.powf(r) - 1.0))).powf(r);
            Some(a1.min(base).ln() + r * nf.ln())
        }
        SequenceKind::Claim { .. } => None,
    }
}

/// Checks the lemma lower bound at every index of `seq`.
pub fn check_lemma_bounds(seq: &GrowthSequence) -> Result<BoundReport> {
    let a1 = seq
        .get(1)
        .ok_or_else(|| Error::InvalidParameter("empty sequence".into()))?;
    let mut report = BoundReport {
        min_slack: f64::INFINITY,
        argmin: 1,
        violations: Vec::new(),
    };
    for (k, &a) in seq.values.iter().enumerate() {
        let n = k + 1;
        let log_bound = log_lower_bound(seq.kind, a1, n)
            .ok_or_else(|| Error::InvalidParameter("no closed-form bound for this kind".into()))?;
        let slack = (a.ln() - log_bound).exp();
        if slack < report.min_slack {
            report.min_slack = slack;
            report.argmin = n;
        }
        if slack < 1.0 - 1e-10 {
            report.violations.push(n);
        }
    }
    Ok(report)
}

/// Exponents of `(A_{n+1} - A_n)^2 = A_n^e1 sum_{j<=n} (A_j - A_{j-1})^(2/p) / A_j^e2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaimExponents {
    pub e1: f64,
    pub e2: f64,
    pub increment_power: f64,
}

impl ClaimExponents {
    /// Formal exponents for any `p >= 2`, `q` with `3q - 2 > 0`.
    pub fn new(p: f64, q: f64) -> Self {
        let r = 2.0 * (p - q) / (p * (3.0 * q - 2.0));
        Self {
            e1: 1.0 - ((2.0 - q) / q) * (1.0 + r),
            e2: ((p - 2.0) / p) * r,
            increment_power: 2.0 / p,
        }
    }

    /// When `e2 = 0` and the increments enter linearly the sum telescopes to
    /// `A_n`, leaving `A_{n+1} - A_n = A_n^gamma`; returns that `gamma`.
    pub fn reduced_gamma(&self) -> Option<f64> {
        (self.e2 == 0.0 && self.increment_power == 1.0).then_some(0.5 * (self.e1 + 1.0))
    }

    /// Runs the recurrence from `A_0 = 0`, `A_1 = 1`.
    pub fn generate(&self, len: usize, kind: SequenceKind) -> GrowthSequence {
        let mut values = Vec::with_capacity(len);
        let mut truncated = false;
        if len > 0 {
            values.push(1.0);
        }
        // j = 1 summand: (A_1 - A_0)^(2/p) / A_1^e2 = 1
        let mut sum: f64 = 1.0;
        while values.len() < len {
            let a: f64 = *values.last().expect("nonempty");
            let next = a + (a.powf(self.e1) * sum).sqrt();
            if !next.is_finite() {
                truncated = true;
                break;
            }
            sum += (next - a).powf(self.increment_power) / next.powf(self.e2);
            if !sum.is_finite() {
                truncated = true;
                values.push(next);
                break;
            }
            values.push(next);
        }
        GrowthSequence {
            values,
            kind,
            truncated,
        }
    }

    /// Relative residual of the recurrence at step `n -> n+1` (`O(n)`, for checks).
    pub fn residual(&self, seq: &GrowthSequence, n: usize) -> Option<f64> {
        let next = seq.get(n + 1)?;
        let a = seq.get(n)?;
        let mut sum = 0.0;
        let mut prev = 0.0;
        for j in 1..=n {
            let aj = seq.get(j)?;
            sum += (aj - prev).powf(self.increment_power) / aj.powf(self.e2);
            prev = aj;
        }
        let lhs = (next - a) * (next - a);
        let rhs = a.powf(self.e1) * sum;
        Some((lhs - rhs).abs() / rhs)
    }
}

/// The growth exponent `p(3q - 2) / (2(p - q))` the claim sequence should beat.
pub fn claim_target_slope(p: f64, q: f64) -> f64 {
    p * (3.0 * q - 2.0) / (2.0 * (p - q))
}

/// Generates the claim sequence of length `len` (shorter if it overflows).
pub fn generate_claim_sequence(p: f64, q: f64, len: usize) -> Result<GrowthSequence> {
    if !(p > 2.0) || !p.is_finite() || !(1.0..=2.0).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "claim sequence needs p > 2 >= q >= 1, got p = {p}, q = {q}"
        )));
    }
    Ok(ClaimExponents::new(p, q).generate(len, SequenceKind::Claim { p, q }))
}

/// Least-squares slope of `ln A_n` against `ln n` for `n` in `window` (1-based).
pub fn fit_loglog_slope(seq: &GrowthSequence, window: RangeInclusive<usize>) -> Result<f64> {
    let (lo, hi) = (*window.start(), (*window.end()).min(seq.len()));
    if lo == 0 || hi < lo || hi - lo + 1 < 2 {
        return Err(Error::WindowTooShort(hi.saturating_sub(lo) + 1));
    }
    let count = (hi - lo + 1) as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for n in lo..=hi {
        sx += (n as f64).ln();
        sy += seq.values[n - 1].ln();
    }
    let (mx, my) = (sx / count, sy / count);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for n in lo..=hi {
        let dx = (n as f64).ln() - mx;
        sxx += dx * dx;
        sxy += dx * (seq.values[n - 1].ln() - my);
    }
    Ok(sxy / sxx)
}
