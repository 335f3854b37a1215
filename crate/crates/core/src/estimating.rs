//! Estimating functions in center form.
//!
//! `phi(x) = min_value + (quad/2) |x - center|^2 + g_weight * g(x)`.
//! Storing the coefficients instead of the list of linearizations keeps the
//! memory at O(dim) regardless of the iteration count. Expanding around the
//! center rather than the origin avoids the cancellation that an expanded
//! `constant + <linear, x> + quad/2 |x|^2` suffers once `quad` gets large.

use crate::error::{Error, Result};
use crate::oracle::CompositeProblem;
use crate::vector::VectorState;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatingFunction {
    quad: f64,
    center: VectorState,
    min_value: f64,
    g_weight: f64,
    strong_mass: f64,
}

impl EstimatingFunction {
    /// `phi_0(x) = 0.5 |x - x0|^2`.
    pub fn init(x0: &VectorState) -> Self {
        Self {
            quad: 1.0,
            center: x0.clone(),
            min_value: 0.0,
            g_weight: 0.0,
            strong_mass: 0.0,
        }
    }

    pub fn quad(&self) -> f64 {
        self.quad
    }

    /// Minimizer of the quadratic part.
    pub fn center(&self) -> &VectorState {
        &self.center
    }

    /// Value of the quadratic part at its center.
    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    /// Total weight on `g`; tracks the engine's `A_n`.
    pub fn g_weight(&self) -> f64 {
        self.g_weight
    }

    /// Accumulated `sum_j sigma_{j-1} a_j`.
    pub fn strong_mass(&self) -> f64 {
        self.strong_mass
    }

    /// Adds `a * (l_F(x; y) + sigma/2 |x - y|^2 - delta/2)`.
    ///
    /// `sigma = delta^((p-2)/p) mu^(2/p)` is computed by the caller.
    pub fn accumulate(
        &mut self,
        a: f64,
        y: &VectorState,
        f_y: f64,
        grad_y: &VectorState,
        sigma: f64,
        delta: f64,
    ) -> Result<()> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "estimating-function weight must be positive and finite, got {a}"
            )));
        }
        // Q/2 |x-w|^2 + a sigma/2 |x-y|^2 + a <g, x-y> = S/2 |x-w'|^2 + shift
        let q = self.quad;
        let s = q + a * sigma;
        let w_minus_y = self.center.sub(y);
        let shift = (a * q / s) * (0.5 * sigma * w_minus_y.norm_sq() + grad_y.dot(&w_minus_y))
            - a * a * grad_y.norm_sq() / (2.0 * s);
        self.center.axpy(-a * sigma / s, &w_minus_y);
        self.center.axpy(-a / s, grad_y);
        self.min_value += a * (f_y - 0.5 * delta) + shift;
        self.quad = s;
        self.g_weight += a;
        self.strong_mass += a * sigma;
        Ok(())
    }

    /// `argmin phi = prox(center, g_weight/quad)`.
    pub fn minimize(&self, problem: &CompositeProblem) -> VectorState {
        problem.nonsmooth_prox(&self.center, self.g_weight / self.quad)
    }

    pub fn evaluate(&self, problem: &CompositeProblem, x: &VectorState) -> f64 {
        let smooth_part = self.min_value + 0.5 * self.quad * x.dist_sq(&self.center);
        if self.g_weight == 0.0 || problem.has_zero_nonsmooth() {
            return smooth_part;
        }
        smooth_part + self.g_weight * problem.nonsmooth_value(x)
    }
}
