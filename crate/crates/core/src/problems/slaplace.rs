//! P1 finite-element discretization of the s-Laplacian energy
//! `F(u) = (1/s) int |grad u|^s dx - int b u dx` on the unit square with
//! homogeneous Dirichlet boundary conditions.
//!
//! The unknown vector holds interior vertex values only. The load term uses
//! vertex (mass-lumped) quadrature, which is exact for constant `b`.

use crate::engine::CompensatedSum;
use crate::error::{Error, Result};
use crate::oracle::{CompositeProblem, Fingerprint, RegularityInfo, SmoothFunction, Zero};
use crate::problems::mesh::{TriangulationMesh, BOUNDARY};

#[derive(Debug, Clone, PartialEq)]
pub enum Load {
    Constant(f64),
    /// One value per mesh vertex (boundary entries are ignored).
    PerVertex(Vec<f64>),
}

/// `|g|^s` and `|g|^(s-2)` from `|g|^2`, with cheap paths for common exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PowerLaw {
    Two,
    ThreeHalves,
    Three,
    Four,
    General(f64),
}

impl PowerLaw {
    fn new(s: f64) -> Self {
        match s {
            _ if s == 2.0 => Self::Two,
            _ if s == 1.5 => Self::ThreeHalves,
            _ if s == 3.0 => Self::Three,
            _ if s == 4.0 => Self::Four,
            _ => Self::General(s),
        }
    }

    /// Returns `(|g|^s, |g|^(s-2))`. At `g = 0` the second entry is 0 for `s != 2`.
    #[inline(always)]
    fn eval(self, r2: f64) -> (f64, f64) {
        match self {
            Self::Two => (r2, 1.0),
            Self::Four => (r2 * r2, r2),
            Self::Three => {
                let r = r2.sqrt();
                (r2 * r, r)
            }
            Self::ThreeHalves => {
                if r2 == 0.0 {
                    return (0.0, 0.0);
                }
                let sr = r2.sqrt().sqrt();
                (r2 / sr, 1.0 / sr)
            }
            Self::General(s) => {
                if r2 == 0.0 {
                    return (0.0, 0.0);
                }
                let w = r2.powf(0.5 * (s - 2.0));
                (w * r2, w)
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    /// Unknown indices; boundary vertices point at the padding slot.
    dofs: [usize; 3],
    grads: [[f64; 2]; 3],
    area: f64,
}

#[derive(Debug, Clone)]
pub struct SLaplacianProblem {
    mesh: TriangulationMesh,
    s: f64,
    law: PowerLaw,
    load: Load,
    load_vector: Vec<f64>,
    elements: Vec<Element>,
    dim: usize,
}

impl SLaplacianProblem {
    pub fn new(mesh: TriangulationMesh, s: f64, load: Load) -> Result<Self> {
        if !(s >= 1.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!("s must be >= 1, got {s}")));
        }
        if let Load::PerVertex(values) = &load {
            if values.len() != mesh.vertices.len() {
                return Err(Error::DimensionMismatch {
                    expected: mesh.vertices.len(),
                    found: values.len(),
                });
            }
        }
        let dim = mesh.num_unknowns();
        let pad = dim;
        let mut load_vector = vec![0.0; dim];
        let mut elements = Vec::with_capacity(mesh.triangles.len());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let area = mesh.signed_area(t);
            let dofs = tri.map(|v| match mesh.unknown_index[v] {
                BOUNDARY => pad,
                k => k,
            });
            for (&v, &k) in tri.iter().zip(&dofs) {
                if k != pad {
                    let b = match &load {
                        Load::Constant(b) => *b,
                        Load::PerVertex(values) => values[v],
                    };
                    load_vector[k] += b * area / 3.0;
                }
            }
            elements.push(Element {
                dofs,
                grads: mesh.hat_gradients(t),
                area,
            });
        }
        Ok(Self {
            mesh,
            s,
            law: PowerLaw::new(s),
            load,
            load_vector,
            elements,
            dim,
        })
    }

    pub fn mesh(&self) -> &TriangulationMesh {
        &self.mesh
    }

    pub fn num_unknowns(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn load(&self) -> &Load {
        &self.load
    }

    /// `int b phi_k dx` by vertex quadrature.
    pub fn load_vector(&self) -> &[f64] {
        &self.load_vector
    }

    /// `p = max{2, s}`, `q = min{2, s}`.
    pub fn exponents(&self) -> (f64, f64) {
        (self.s.max(2.0), self.s.min(2.0))
    }

    fn padded(&self, u: &[f64]) -> Vec<f64> {
        let mut ext = Vec::with_capacity(self.dim + 1);
        ext.extend_from_slice(u);
        ext.push(0.0);
        ext
    }

    #[inline(always)]
    fn element_gradient(e: &Element, u: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..3 {
            let val = u[e.dofs[k]];
            g[0] += val * e.grads[k][0];
            g[1] += val * e.grads[k][1];
        }
        g
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        let ext = self.padded(u);
        let mut stored = CompensatedSum::default();
        for e in &self.elements {
            let g = Self::element_gradient(e, &ext);
            let (power, _) = self.law.eval(g[0] * g[0] + g[1] * g[1]);
            stored.add(e.area * power);
        }
        let mut work = CompensatedSum::default();
        for (l, x) in self.load_vector.iter().zip(u) {
            work.add(l * x);
        }
        stored.value() / self.s - work.value()
    }

    pub fn energy_and_gradient(&self, u: &[f64], out: &mut [f64]) -> f64 {
        let ext = self.padded(u);
        let mut acc = vec![0.0; self.dim + 1];
        let mut stored = CompensatedSum::default();
        for e in &self.elements {
            let g = Self::element_gradient(e, &ext);
            let (power, weight) = self.law.eval(g[0] * g[0] + g[1] * g[1]);
            stored.add(e.area * power);
            let scale = e.area * weight;
            for k in 0..3 {
                acc[e.dofs[k]] += scale * (g[0] * e.grads[k][0] + g[1] * e.grads[k][1]);
            }
        }
        let mut work = CompensatedSum::default();
        for k in 0..self.dim {
            out[k] = acc[k] - self.load_vector[k];
            work.add(self.load_vector[k] * u[k]);
        }
        stored.value() / self.s - work.value()
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.energy_and_gradient(u, &mut out);
        out
    }

    /// Wraps the energy as `F = f + 0` with the implied exponents; `mu` is
    /// whatever the caller assumes (it is not computed here).
    pub fn into_composite(self, mu: Option<f64>) -> CompositeProblem {
        let (p, q) = self.exponents();
        let b = match &self.load {
            Load::Constant(b) => b.to_string(),
            Load::PerVertex(_) => "per-vertex".to_string(),
        };
        let fingerprint = Fingerprint::new("fem")
            .with("h", self.mesh.h)
            .with("s", self.s)
            .with("b", b)
            .with("dim", self.dim);
        let regularity = RegularityInfo {
            p: Some(p),
            mu,
            q: Some(q),
            lipschitz: None,
        };
        CompositeProblem::new(self, Zero, fingerprint).with_regularity(regularity)
    }
}

impl SmoothFunction for SLaplacianProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.energy(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.energy_and_gradient(x, out);
    }

    fn value_and_gradient(&self, x: &[f64], out: &mut [f64]) -> f64 {
        self.energy_and_gradient(x, out)
    }
}

/// The finite-element s-Laplacian with constant load `b` on mesh size `h`.
pub fn make_fem_problem(h: f64, s: f64, b: f64, mu: Option<f64>) -> Result<CompositeProblem> {
    let mesh = TriangulationMesh::build(h)?;
    Ok(SLaplacianProblem::new(mesh, s, Load::Constant(b))?.into_composite(mu))
}
