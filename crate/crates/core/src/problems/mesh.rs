//! Uniform right-triangle meshes of the unit square.

use crate::error::{Error, Result};

/// Marks a boundary vertex in [`TriangulationMesh::unknown_index`].
pub const BOUNDARY: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangulationMesh {
    pub h: f64,
    /// Subdivisions per side, `1/h`.
    pub divisions: usize,
    /// Row-major: vertex `(i, j)` at `(i h, j h)` has index `j (N+1) + i`.
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub interior_mask: Vec<bool>,
    /// Position of each vertex in the unknown vector, or [`BOUNDARY`].
    pub unknown_index: Vec<usize>,
}

impl TriangulationMesh {
    /// Splits each grid square `[i, i+1] x [j, j+1]` along the diagonal from
    /// `(i, j)` to `(i+1, j+1)`.
    pub fn build(h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidParameter(format!("mesh size must be in (0, 1], got {h}")));
        }
        let inv = 1.0 / h;
        let divisions = inv.round();
        if (inv - divisions).abs() > 1e-9 * inv {
            return Err(Error::InvalidParameter(format!("1/h must be an integer, got h = {h}")));
        }
        let n = divisions as usize;
        let side = n + 1;
        let h = 1.0 / n as f64;

        let mut vertices = Vec::with_capacity(side * side);
        let mut interior_mask = Vec::with_capacity(side * side);
        let mut unknown_index = Vec::with_capacity(side * side);
        let mut unknowns = 0;
        for j in 0..side {
            for i in 0..side {
                vertices.push([i as f64 * h, j as f64 * h]);
                let interior = i > 0 && j > 0 && i < n && j < n;
                interior_mask.push(interior);
                if interior {
                    unknown_index.push(unknowns);
                    unknowns += 1;
                } else {
                    unknown_index.push(BOUNDARY);
                }
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = j * side + i;
                let v10 = v00 + 1;
                let v01 = v00 + side;
                let v11 = v01 + 1;
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }

        Ok(Self {
            h,
            divisions: n,
            vertices,
            triangles,
            interior_mask,
            unknown_index,
        })
    }

    pub fn num_unknowns(&self) -> usize {
        self.interior_mask.iter().filter(|&&m| m).count()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Gradients of the three barycentric (hat) functions on triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        let two_area = 2.0 * self.signed_area(t);
        // grad lambda_k = rot90(opposite edge) / (2 area)
        let grad = |p: [f64; 2], q: [f64; 2]| [(p[1] - q[1]) / two_area, (q[0] - p[0]) / two_area];
        [grad(b, c), grad(c, a), grad(a, b)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_for_coarse_and_fine_meshes() {
        let m = TriangulationMesh::build(0.125).unwrap();
        assert_eq!(m.triangles.len(), 128);
        assert_eq!(m.vertices.len(), 81);
        assert_eq!(m.num_unknowns(), 49);

        let m = TriangulationMesh::build(1.0 / 32.0).unwrap();
        assert_eq!(m.triangles.len(), 2048);
        assert_eq!(m.num_unknowns(), 961);
    }

    #[test]
    fn areas_are_uniform_and_positive() {
        let m = TriangulationMesh::build(0.25).unwrap();
        for t in 0..m.triangles.len() {
            let area = m.signed_area(t);
            assert!(area > 0.0);
            assert!((area - m.h * m.h / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_is_masked() {
        let m = TriangulationMesh::build(0.25).unwrap();
        for (v, p) in m.vertices.iter().enumerate() {
            let on_boundary = p.iter().any(|&c| c == 0.0 || c == 1.0);
            assert_eq!(m.interior_mask[v], !on_boundary);
            assert_eq!(m.unknown_index[v] == BOUNDARY, on_boundary);
        }
    }

    #[test]
    fn hat_gradients_sum_to_zero() {
        let m = TriangulationMesh::build(0.5).unwrap();
        for t in 0..m.triangles.len() {
            let g = m.hat_gradients(t);
            let sum = [g[0][0] + g[1][0] + g[2][0], g[0][1] + g[1][1] + g[2][1]];
            assert!(sum.iter().all(|s| s.abs() < 1e-14));
        }
    }

    #[test]
    fn rejects_non_integral_inverse() {
        assert!(TriangulationMesh::build(0.3).is_err());
        assert!(TriangulationMesh::build(0.0).is_err());
    }
}
