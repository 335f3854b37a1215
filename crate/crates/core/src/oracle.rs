//! Composite problems `F = f + g`: a first-order oracle for the smooth part,
//! a proximal oracle for the nonsmooth part, and optional regularity metadata.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vector::VectorState;

/// Smooth (or at least subdifferentiable) convex part `f`.
///
/// Evaluation must not mutate shared state: a problem may be evaluated from
/// several solver runs at once.
pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes one (sub)gradient of `f` at `x` into `out`.
    fn gradient(&self, x: &[f64], out: &mut [f64]);

    fn value_and_gradient(&self, x: &[f64], out: &mut [f64]) -> f64 {
        self.gradient(x, out);
        self.value(x)
    }
}

/// Nonsmooth convex part `g` with a proximal oracle.
///
/// The prox convention is `prox(c, tau) = argmin_x { tau * g(x) + 0.5 * |x - c|^2 }`.
pub trait ProxFunction: Send + Sync {
    /// `g(x)`, possibly `+inf`.
    fn value(&self, x: &[f64]) -> f64;

    fn prox(&self, center: &[f64], weight: f64, out: &mut [f64]);

    /// `true` when `g` is identically zero; lets callers skip the prox.
    fn is_zero(&self) -> bool {
        false
    }
}

/// `g = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl ProxFunction for Zero {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn prox(&self, center: &[f64], _weight: f64, out: &mut [f64]) {
        out.copy_from_slice(center);
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `g = lambda * |x|_1`, prox is soft thresholding at `lambda * tau`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub lambda: f64,
}

impl ProxFunction for L1Norm {
    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, center: &[f64], weight: f64, out: &mut [f64]) {
        let level = self.lambda * weight;
        for (o, &c) in out.iter_mut().zip(center) {
            *o = soft_threshold(c, level);
        }
    }
}

pub fn soft_threshold(c: f64, level: f64) -> f64 {
    if c > level {
        c - level
    } else if c < -level {
        c + level
    } else {
        0.0
    }
}

/// Indicator of the nonnegative orthant; the prox is the projection.
#[derive(Debug, Clone, Copy, Default)]
pub struct NonnegativeOrthant;

impl ProxFunction for NonnegativeOrthant {
    fn value(&self, x: &[f64]) -> f64 {
        if x.iter().all(|&v| v >= 0.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, center: &[f64], _weight: f64, out: &mut [f64]) {
        for (o, &c) in out.iter_mut().zip(center) {
            *o = c.max(0.0);
        }
    }
}

/// Known (or assumed) regularity constants of `f`.
///
/// `p`, `mu`: uniform convexity `f(x) >= f(y) + <g, x-y> + mu/p |x-y|^p`.
/// `q`, `lipschitz`: weak smoothness `f(x) <= f(y) + <g, x-y> + L/q |x-y|^q`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RegularityInfo {
    pub p: Option<f64>,
    pub mu: Option<f64>,
    pub q: Option<f64>,
    pub lipschitz: Option<f64>,
}

impl RegularityInfo {
    pub fn new(p: f64, mu: f64, q: f64, lipschitz: f64) -> Self {
        Self {
            p: Some(p),
            mu: Some(mu),
            q: Some(q),
            lipschitz: Some(lipschitz),
        }
    }

    /// Generalized condition number `L^(2/q) / mu^(2/p)`.
    pub fn kappa(&self) -> Option<f64> {
        let (p, mu, q, l) = (self.p?, self.mu?, self.q?, self.lipschitz?);
        let k = l.powf(2.0 / q) / mu.powf(2.0 / p);
        (k.is_finite() && k > 0.0).then_some(k)
    }
}

/// Identifies a problem instance for reference caching.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub kind: String,
    pub params: Vec<(String, String)>,
}

impl Fingerprint {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            params: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kind={}", self.kind)?;
        for (k, v) in &self.params {
            write!(f, ";{k}={v}")?;
        }
        Ok(())
    }
}

/// Oracle bundle for `F = f + g`.
#[derive(Clone)]
pub struct CompositeProblem {
    smooth: Arc<dyn SmoothFunction>,
    nonsmooth: Arc<dyn ProxFunction>,
    regularity: RegularityInfo,
    fingerprint: Fingerprint,
}

impl fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("dim", &self.dim())
            .field("regularity", &self.regularity)
            .field("fingerprint", &self.fingerprint.to_string())
            .finish()
    }
}

impl CompositeProblem {
    pub fn new(
        smooth: impl SmoothFunction + 'static,
        nonsmooth: impl ProxFunction + 'static,
        fingerprint: Fingerprint,
    ) -> Self {
        Self {
            smooth: Arc::new(smooth),
            nonsmooth: Arc::new(nonsmooth),
            regularity: RegularityInfo::default(),
            fingerprint,
        }
    }

    pub fn with_regularity(mut self, regularity: RegularityInfo) -> Self {
        self.regularity = regularity;
        self
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn regularity(&self) -> &RegularityInfo {
        &self.regularity
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    pub fn smooth(&self) -> &dyn SmoothFunction {
        self.smooth.as_ref()
    }

    pub fn nonsmooth(&self) -> &dyn ProxFunction {
        self.nonsmooth.as_ref()
    }

    pub fn smooth_value(&self, x: &VectorState) -> f64 {
        self.smooth.value(x.as_slice())
    }

    pub fn smooth_gradient(&self, x: &VectorState) -> VectorState {
        let mut out = VectorState::zeros(self.dim());
        self.smooth.gradient(x.as_slice(), out.as_mut_slice());
        out
    }

    pub fn smooth_value_and_gradient(&self, x: &VectorState) -> (f64, VectorState) {
        let mut out = VectorState::zeros(self.dim());
        let v = self.smooth.value_and_gradient(x.as_slice(), out.as_mut_slice());
        (v, out)
    }

    pub fn nonsmooth_value(&self, x: &VectorState) -> f64 {
        self.nonsmooth.value(x.as_slice())
    }

    /// Unchecked prox; `weight` must be nonnegative.
    pub fn nonsmooth_prox(&self, center: &VectorState, weight: f64) -> VectorState {
        if self.nonsmooth.is_zero() || weight == 0.0 {
            return center.clone();
        }
        let mut out = VectorState::zeros(center.dim());
        self.nonsmooth.prox(center.as_slice(), weight, out.as_mut_slice());
        out
    }

    pub fn has_zero_nonsmooth(&self) -> bool {
        self.nonsmooth.is_zero()
    }

    /// `F(x)` without the dimension check.
    pub(crate) fn value_unchecked(&self, x: &VectorState) -> f64 {
        let g = if self.nonsmooth.is_zero() {
            0.0
        } else {
            self.nonsmooth.value(x.as_slice())
        };
        self.smooth.value(x.as_slice()) + g
    }
}

/// `F(x) = f(x) + g(x)`; `+inf` when `g(x) = +inf`.
pub fn eval_composite(problem: &CompositeProblem, x: &VectorState) -> Result<f64> {
    x.check_dim(problem.dim())?;
    Ok(problem.value_unchecked(x))
}

/// `l_F(x; y) = f(y) + <grad f(y), x - y> + g(x)`.
pub fn partial_linearization(problem: &CompositeProblem, x: &VectorState, y: &VectorState) -> Result<f64> {
    x.check_dim(problem.dim())?;
    y.check_dim(problem.dim())?;
    let (fy, gy) = problem.smooth_value_and_gradient(y);
    Ok(fy + gy.dot(&x.sub(y)) + problem.nonsmooth_value(x))
}

/// `argmin_x { weight * g(x) + 0.5 * |x - center|^2 }`.
pub fn prox(problem: &CompositeProblem, center: &VectorState, weight: f64) -> Result<VectorState> {
    center.check_dim(problem.dim())?;
    if !(weight >= 0.0) {
        return Err(Error::NegativeProxWeight(weight));
    }
    Ok(problem.nonsmooth_prox(center, weight))
}

/// Where [`estimate_regularity`] draws its sample points.
#[derive(Debug, Clone)]
pub enum SamplingRegion {
    /// Axis-aligned box, coordinates drawn uniformly per axis.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `center + sum_i c_i * directions[i]` with `c_i` uniform in `[-radius, radius]`.
    Subspace {
        center: VectorState,
        directions: Vec<VectorState>,
        radius: f64,
    },
}

impl SamplingRegion {
    pub fn cube(dim: usize, lower: f64, upper: f64) -> Self {
        Self::Box {
            lower: vec![lower; dim],
            upper: vec![upper; dim],
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> VectorState {
        match self {
            Self::Box { lower, upper } => VectorState::from_fn(lower.len(), |i| {
                if upper[i] > lower[i] {
                    rng.gen_range(lower[i]..upper[i])
                } else {
                    lower[i]
                }
            }),
            Self::Subspace {
                center,
                directions,
                radius,
            } => {
                let mut x = center.clone();
                for d in directions {
                    x.axpy(rng.gen_range(-radius..=*radius), d);
                }
                x
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            Self::Box { lower, .. } => lower.len(),
            Self::Subspace { center, .. } => center.dim(),
        }
    }
}

/// Empirical uniform-convexity and weak-smoothness moduli of `f` for fixed
/// exponents `p` and `q`.
///
/// Over all ordered pairs of sampled points, `mu` is the infimum of
/// `p * D(x, y) / |x - y|^p` and `L` the supremum of `q * D(x, y) / |x - y|^q`
/// with `D(x, y) = f(x) - f(y) - <grad f(y), x - y>`. Sampling can only miss
/// the extreme pairs, so the result bounds the true `mu` from above and the
/// true `L` from below. Advisory: solvers never consume it.
pub fn estimate_regularity(
    problem: &CompositeProblem,
    p: f64,
    q: f64,
    samples: usize,
    region: &SamplingRegion,
    seed: u64,
) -> Result<RegularityInfo> {
    if region.dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: region.dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<VectorState> = (0..samples).map(|_| region.sample(&mut rng)).collect();
    let evals: Vec<(f64, VectorState)> = points.iter().map(|x| problem.smooth_value_and_gradient(x)).collect();

    let mut mu = f64::INFINITY;
    let mut lip: f64 = 0.0;
    let mut pairs = 0usize;
    for (i, x) in points.iter().enumerate() {
        for (j, y) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let dist = x.dist(y);
            if dist == 0.0 {
                continue;
            }
            let (fy, gy) = &evals[j];
            let bregman = evals[i].0 - fy - gy.dot(&x.sub(y));
            mu = mu.min(p * bregman / dist.powf(p));
            lip = lip.max(q * bregman / dist.powf(q));
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::InsufficientSamples(if samples == 0 { 0 } else { 1 }));
    }
    Ok(RegularityInfo {
        p: Some(p),
        mu: Some(mu.max(0.0)),
        q: Some(q),
        lipschitz: Some(lip),
    })
}
