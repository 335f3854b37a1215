//! Small problems whose regularity constants are known in closed form.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::oracle::{CompositeProblem, Fingerprint, L1Norm, RegularityInfo, SmoothFunction, Zero};

fn default_center(dim: usize) -> Vec<f64> {
    (0..dim).map(|i| 1.0 / (i as f64 + 1.0)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `f(x) = 1/2 sum_i d_i (x_i - c_i)^2`.
#[derive(Debug, Clone)]
pub struct DiagonalQuadratic {
    pub diag: Vec<f64>,
    pub center: Vec<f64>,
}

impl SmoothFunction for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((d, c), xi) in self.diag.iter().zip(&self.center).zip(x) {
            let r = xi - c;
            s += d * r * r;
        }
        0.5 * s
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (((o, d), c), xi) in out.iter_mut().zip(&self.diag).zip(&self.center).zip(x) {
            *o = d * (xi - c);
        }
    }
}

/// Diagonal quadratic with spectrum spread evenly over `[mu, lipschitz]`.
///
/// Minimizer is `c_i = 1/(i+1)` with value 0; `p = q = 2`.
pub fn make_quadratic_problem(dim: usize, mu: f64, lipschitz: f64) -> Result<CompositeProblem> {
    if dim == 0 || !(mu > 0.0) || !(lipschitz >= mu) {
        return Err(Error::InvalidParameter(format!(
            "quadratic needs dim > 0 and 0 < mu <= L (dim={dim}, mu={mu}, L={lipschitz})"
        )));
    }
    let diag = (0..dim)
        .map(|i| {
            if dim == 1 {
                lipschitz
            } else {
                mu + (lipschitz - mu) * i as f64 / (dim - 1) as f64
            }
        })
        .collect::<Vec<_>>();
    let f = DiagonalQuadratic {
        diag,
        center: default_center(dim),
    };
    let fp = Fingerprint::new("quadratic")
        .with("dim", dim)
        .with("mu", mu)
        .with("L", lipschitz);
    Ok(CompositeProblem::new(f, Zero, fp).with_regularity(RegularityInfo::new(2.0, mu, 2.0, lipschitz)))
}

/// `f(x) = (1/p) |x - c|^p`.
#[derive(Debug, Clone)]
pub struct PowerNorm {
    pub p: f64,
    pub center: Vec<f64>,
}

impl PowerNorm {
    /// Uniform convexity constant of degree `p`.
    pub fn mu(&self) -> f64 {
        2f64.powf(2.0 - self.p)
    }

    /// Lipschitz constant of the gradient on the ball of radius `radius` about `c`.
    pub fn lipschitz_on_ball(&self, radius: f64) -> f64 {
        if self.p == 2.0 {
            1.0
        } else {
            (self.p - 1.0) * radius.powf(self.p - 2.0)
        }
    }
}

impl SmoothFunction for PowerNorm {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        r2.powf(0.5 * self.p) / self.p
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        let w = if r2 == 0.0 { 0.0 } else { r2.powf(0.5 * (self.p - 2.0)) };
        for ((o, a), c) in out.iter_mut().zip(x).zip(&self.center) {
            *o = w * (a - c);
        }
    }
}

/// `(1/p)|x - c|^p` with `c_i = 1/(i+1)`; `F* = 0`.
///
/// Regularity: `mu = 2^(2-p)` of degree `p`, and `q = 2` with `L` taken on the
/// ball of radius `2|c|` about `c` (which contains the sublevel set of `x0 = 0`).
/// For `p = 2` this is `mu = L = 1`.
pub fn make_power_problem(dim: usize, p_exp: f64) -> Result<CompositeProblem> {
    if dim == 0 || !(p_exp >= 2.0) || !p_exp.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "power problem needs dim > 0 and p >= 2 (dim={dim}, p={p_exp})"
        )));
    }
    let f = PowerNorm {
        p: p_exp,
        center: default_center(dim),
    };
    let radius = 2.0 * norm(&f.center);
    let reg = RegularityInfo::new(p_exp, f.mu(), 2.0, f.lipschitz_on_ball(radius));
    let fp = Fingerprint::new("power").with("dim", dim).with("p", p_exp);
    Ok(CompositeProblem::new(f, Zero, fp).with_regularity(reg))
}

/// `f(x) = sum_i (1/q)|x_i - c_i|^q + (mu/2)|x - c|^2` with `1 < q < 2`.
#[derive(Debug, Clone)]
pub struct HolderSum {
    pub q: f64,
    pub mu: f64,
    pub center: Vec<f64>,
}

impl HolderSum {
    /// Weak smoothness constant of degree `q` valid for pairs within the ball
    /// of radius `radius` about `c`.
    pub fn lipschitz_on_ball(&self, radius: f64) -> f64 {
        let d = self.center.len() as f64;
        let q = self.q;
        2f64.powf(2.0 - q) * d.powf(1.0 - 0.5 * q) + 0.5 * q * self.mu * (2.0 * radius).powf(2.0 - q)
    }
}

impl SmoothFunction for HolderSum {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        let mut r2 = 0.0;
        for (a, c) in x.iter().zip(&self.center) {
            let r = a - c;
            s += r.abs().powf(self.q);
            r2 += r * r;
        }
        s / self.q + 0.5 * self.mu * r2
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, a), c) in out.iter_mut().zip(x).zip(&self.center) {
            let r: f64 = a - c;
            let h = if r == 0.0 {
                0.0
            } else {
                r.signum() * r.abs().powf(self.q - 1.0)
            };
            *o = h + self.mu * r;
        }
    }
}

/// Hölder-smooth, strongly convex problem with minimizer `c_i = 1/(i+1)`, `F* = 0`.
///
/// `p = 2` with the given `mu`; `L` of degree `q` is taken on the ball of
/// radius `radius` about `c`.
pub fn make_holder_problem(dim: usize, q: f64, mu: f64, radius: f64) -> Result<CompositeProblem> {
    if dim == 0 || !(q > 1.0 && q < 2.0) || !(mu > 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "holder problem needs dim > 0, 1 < q < 2, mu > 0, radius > 0 (got {dim}, {q}, {mu}, {radius})"
        )));
    }
    let f = HolderSum {
        q,
        mu,
        center: default_center(dim),
    };
    let reg = RegularityInfo::new(2.0, mu, q, f.lipschitz_on_ball(radius));
    let fp = Fingerprint::new("holder")
        .with("dim", dim)
        .with("q", q)
        .with("mu", mu)
        .with("radius", radius);
    Ok(CompositeProblem::new(f, Zero, fp).with_regularity(reg))
}

/// `f(x) = 1/2 |Ax - b|^2`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl LeastSquares {
    /// Fixed, diagonally dominant square matrix and right-hand side.
    pub fn fixed(dim: usize) -> Self {
        let n = dim as f64;
        let a = DMatrix::from_fn(dim, dim, |i, j| {
            let off = 0.3 * ((7 * i + 3 * j) as f64).sin() / n.sqrt();
            if i == j {
                1.0 + i as f64 / n + off
            } else {
                off
            }
        });
        let b = DVector::from_fn(dim, |i, _| ((i + 1) as f64).cos());
        Self { a, b }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    /// Extreme eigenvalues of `A^T A`.
    pub fn spectrum_bounds(&self) -> (f64, f64) {
        let gram = self.a.transpose() * &self.a;
        let eig = gram.symmetric_eigenvalues();
        (eig.min(), eig.max())
    }

    fn residual(&self, x: &[f64]) -> DVector<f64> {
        &self.a * DVector::from_column_slice(x) - &self.b
    }
}

impl SmoothFunction for LeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.residual(x).norm_squared()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let g = self.a.tr_mul(&self.residual(x));
        out.copy_from_slice(g.as_slice());
    }

    fn value_and_gradient(&self, x: &[f64], out: &mut [f64]) -> f64 {
        let r = self.residual(x);
        out.copy_from_slice(self.a.tr_mul(&r).as_slice());
        0.5 * r.norm_squared()
    }
}

/// `1/2 |Ax - b|^2 + lam |x|_1` with the fixed `A`, `b` of [`LeastSquares::fixed`].
pub fn make_l1_problem(dim: usize, lam: f64) -> Result<CompositeProblem> {
    if dim == 0 || !(lam >= 0.0) || !lam.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "l1 problem needs dim > 0 and lam >= 0 (dim={dim}, lam={lam})"
        )));
    }
    let f = LeastSquares::fixed(dim);
    let (mu, lipschitz) = f.spectrum_bounds();
    let fp = Fingerprint::new("l1").with("dim", dim).with("lam", lam);
    Ok(CompositeProblem::new(f, L1Norm { lambda: lam }, fp)
        .with_regularity(RegularityInfo::new(2.0, mu, 2.0, lipschitz)))
}
