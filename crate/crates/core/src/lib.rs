//! Universal fast gradient methods for composite problems `F = f + g` whose
//! smooth part is weakly smooth and possibly uniformly convex.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod estimating;
pub mod oracle;
pub mod problems;
pub mod recurrence;
pub mod schedules;
pub mod vector;

pub use engine::{
    iterate, run, run_with, Budget, ConvergenceTrace, InvariantChecks, NoReport, ProbeStrategy, Reporter, RunOptions,
    SolverConfig, SolverState, StepOutcome, TraceRow,
};
pub use error::{Error, Result};
pub use estimating::EstimatingFunction;
pub use oracle::{
    estimate_regularity, eval_composite, partial_linearization, prox, CompositeProblem, Fingerprint, L1Norm,
    NonnegativeOrthant, ProxFunction, RegularityInfo, SamplingRegion, SmoothFunction, Zero,
};
pub use schedules::{RestartSchedule, ToleranceSchedule, Tolerances};
pub use vector::VectorState;
