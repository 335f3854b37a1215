//! Fixtures shared by the benchmarks.

use ufgm_core::problems::make_fem_problem;
use ufgm_core::{Budget, CompositeProblem, SolverConfig, ToleranceSchedule, VectorState};

/// FEM problem on the default mesh (`h = 1/32`) with the default modulus for `s`.
pub fn fem(s: f64) -> CompositeProblem {
    make_fem_problem(0.03125, s, 1.0, None).expect("default FEM problem")
}

/// A point away from the origin so that the gradient kernel does real work.
pub fn probe(problem: &CompositeProblem) -> VectorState {
    VectorState::from_fn(problem.dim(), |i| 1e-3 * ((i % 17) as f64 - 8.0))
}

/// Uniformly convex solver with the power schedule, `n` iterations.
pub fn power_solver(problem: &CompositeProblem, n: usize) -> SolverConfig {
    let reg = problem.regularity();
    let p = reg.p.unwrap_or(2.0);
    let q = reg.q.unwrap_or(2.0);
    let mu = reg.mu.unwrap_or(0.0);
    let schedule = if p > 2.0 {
        ToleranceSchedule::Power {
            c_eps: 0.0,
            c_delta: 1.0,
            exponent: p,
        }
    } else {
        ToleranceSchedule::Power {
            c_eps: 1e-4,
            c_delta: 0.0,
            exponent: q,
        }
    };
    SolverConfig::new(p, mu, 1.0, schedule).with_budget(Budget::iterations(n))
}
