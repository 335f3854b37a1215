//! Benchmark problems.

pub mod mesh;
pub mod reference;
pub mod slaplace;
pub mod synthetic;

pub use mesh::TriangulationMesh;
pub use reference::{reference_config, reference_solution, ReferenceSolution};
pub use slaplace::{make_fem_problem, Load, SLaplacianProblem};
pub use synthetic::{make_holder_problem, make_l1_problem, make_power_problem, make_quadratic_problem};
