//! The unified accelerated iteration.
//!
//! One iteration: start the smoothness guess at `L_n / 2`, solve the momentum
//! equation for the trial weight, take a prox-gradient step from the
//! estimating-function minimizer, and double the guess until the inexact
//! descent condition holds. The next iterate is the better of the candidate
//! and the current point, and the estimating function absorbs the new
//! linearization (plus the strong-convexity surrogate when `mu > 0`).
//!
//! Parameterizations:
//! * `mu = 0`, zero `delta`: the universal fast gradient method;
//! * `p = 2`, zero `delta`, constant `eps`: strongly convex variant with fixed tolerance;
//! * `p = 2`, zero `delta`, variable `eps`: strongly convex variant with a schedule;
//! * `p > 2` with `delta_n > 0`: the uniformly convex variant.
//!
//! Adding a [`RestartSchedule`] gives scheduled restarts on top of any of them.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimating::EstimatingFunction;
use crate::oracle::CompositeProblem;
use crate::schedules::{FirePoints, RestartSchedule, ToleranceContext, ToleranceSchedule, Tolerances};
use crate::vector::VectorState;

pub const DEFAULT_MAX_BACKTRACKS: usize = 200;

/// Iteration and/or wall-clock limit for [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Budget {
    pub max_iterations: Option<usize>,
    pub max_seconds: Option<f64>,
}

impl Budget {
    pub fn iterations(n: usize) -> Self {
        Self {
            max_iterations: Some(n),
            max_seconds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Uniform-convexity exponent, `p >= 2`.
    pub p: f64,
    /// Uniform-convexity modulus; `0` disables the strong-convexity mass.
    pub mu: f64,
    /// Initial smoothness guess `L_0`.
    pub l0: f64,
    pub tolerance: ToleranceSchedule,
    pub restart: Option<RestartSchedule>,
    pub max_backtracks: usize,
    pub budget: Budget,
}

impl SolverConfig {
    pub fn new(p: f64, mu: f64, l0: f64, tolerance: ToleranceSchedule) -> Self {
        Self {
            p,
            mu,
            l0,
            tolerance,
            restart: None,
            max_backtracks: DEFAULT_MAX_BACKTRACKS,
            budget: Budget::default(),
        }
    }

    pub fn with_restart(mut self, restart: RestartSchedule) -> Self {
        self.restart = Some(restart);
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 2.0) || !self.p.is_finite() {
            return Err(Error::InvalidParameter(format!("p must be >= 2, got {}", self.p)));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !(self.l0 > 0.0) || !self.l0.is_finite() {
            return Err(Error::InvalidParameter(format!("L0 must be > 0, got {}", self.l0)));
        }
        if self.max_backtracks == 0 {
            return Err(Error::InvalidParameter("max_backtracks must be positive".into()));
        }
        Ok(())
    }

    /// `sigma = delta^((p-2)/p) mu^(2/p)` with `0^0 = 1`, so `p = 2` gives `mu`.
    pub fn sigma(&self, delta: f64) -> f64 {
        if self.mu == 0.0 {
            return 0.0;
        }
        if self.p == 2.0 {
            return self.mu;
        }
        if delta == 0.0 {
            return 0.0;
        }
        delta.powf((self.p - 2.0) / self.p) * self.mu.powf(2.0 / self.p)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Full per-iteration solver state.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub n: usize,
    pub x: VectorState,
    /// `F(x_n)`; nonincreasing thanks to the monotone pick.
    pub best_f: f64,
    a_total: CompensatedSum,
    pub l: f64,
    pub phi: EstimatingFunction,
    eps_mass: CompensatedSum,
    delta_mass: CompensatedSum,
    /// Center of `phi_0`: the starting point, or the point of the last restart.
    pub anchor: VectorState,
    /// Product of the restart factors applied so far.
    pub tolerance_scale: f64,
    /// Raw schedule output of the last accepted step (before scaling).
    pub last_raw: Tolerances,
    /// Tolerances actually used by the last accepted step.
    pub last_used: Tolerances,
    /// `F(x~_n) <= F(x_{n-1})` for the last accepted step.
    pub energy_improved: bool,
    pub restarts: usize,
    next_restart: Option<usize>,
    fire_points: Option<FirePoints>,
}

impl SolverState {
    pub fn new(problem: &CompositeProblem, config: &SolverConfig, x0: VectorState) -> Result<Self> {
        config.validate()?;
        x0.check_dim(problem.dim())?;
        let best_f = problem.value_unchecked(&x0);
        if !best_f.is_finite() {
            return Err(Error::NonFinite("F(x0)"));
        }
        let mut fire_points = config.restart.map(|r| r.fire_points());
        let next_restart = fire_points.as_mut().and_then(Iterator::next);
        Ok(Self {
            n: 0,
            phi: EstimatingFunction::init(&x0),
            anchor: x0.clone(),
            x: x0,
            best_f,
            a_total: CompensatedSum::default(),
            l: config.l0,
            eps_mass: CompensatedSum::default(),
            delta_mass: CompensatedSum::default(),
            tolerance_scale: 1.0,
            last_raw: Tolerances::default(),
            last_used: Tolerances::default(),
            energy_improved: true,
            restarts: 0,
            next_restart,
            fire_points,
        })
    }

    /// `A_n`.
    pub fn a(&self) -> f64 {
        self.a_total.value()
    }

    /// `sum_j a_j eps_{j-1}`, i.e. `A_n * eps_bar_n`.
    pub fn eps_mass(&self) -> f64 {
        self.eps_mass.value()
    }

    /// `sum_j a_j delta_{j-1}`, i.e. `A_n * delta_bar_n`.
    pub fn delta_mass(&self) -> f64 {
        self.delta_mass.value()
    }

    /// Weighted average tolerance `eps_bar_n` (0 while `A_n = 0`).
    pub fn eps_bar(&self) -> f64 {
        let a = self.a();
        if a > 0.0 {
            self.eps_mass() / a
        } else {
            0.0
        }
    }

    pub fn delta_bar(&self) -> f64 {
        let a = self.a();
        if a > 0.0 {
            self.delta_mass() / a
        } else {
            0.0
        }
    }

    pub fn next_restart(&self) -> Option<usize> {
        self.next_restart
    }
}

/// One trial of the backtracking loop.
#[derive(Debug, Clone)]
pub struct StepCandidate {
    pub lhat: f64,
    /// Trial weight `a_{n+1}`.
    pub a: f64,
    /// `a / (A_n + a)`.
    pub theta: f64,
    pub v: VectorState,
    pub y: VectorState,
    pub f_y: f64,
    pub grad_y: VectorState,
    pub z: VectorState,
    pub x_tilde: VectorState,
    /// Tolerances used by this trial, after restart scaling.
    pub tolerances: Tolerances,
    /// Raw schedule output.
    pub raw_tolerances: Tolerances,
}

/// Positive root of `a^2 / (A + a) = M / lhat`, i.e. `a = (r + sqrt(r^2 + 4 r A)) / 2`
/// with `r = M / lhat`.
pub fn solve_momentum(a_total: f64, mass: f64, lhat: f64) -> Result<f64> {
    if !(a_total.is_finite() && mass.is_finite() && lhat.is_finite()) {
        return Err(Error::NonFinite("momentum equation"));
    }
    if !(a_total >= 0.0 && mass > 0.0 && lhat > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "momentum equation needs A >= 0, M > 0, L > 0; got A = {a_total}, M = {mass}, L = {lhat}"
        )));
    }
    let r = mass / lhat;
    let a = 0.5 * (r + (r * r + 4.0 * r * a_total).sqrt());
    if !a.is_finite() {
        return Err(Error::NonFinite("momentum weight"));
    }
    Ok(a)
}

/// `F_tilde <= lin + (lhat/2) diff_sq + theta * eps / 2`.
///
/// Both sides may be shifted by the same constant; the engine passes
/// `f(x~) - f(y)` and `<grad f(y), x~ - y>` so that `g(x~)` cancels exactly.
pub fn accept_test(f_tilde: f64, lin: f64, lhat: f64, diff_sq: f64, theta: f64, eps: f64) -> bool {
    f_tilde <= lin + 0.5 * lhat * diff_sq + 0.5 * theta * eps
}

/// Builds the trial point for a given `lhat`.
pub fn trial_step(
    state: &SolverState,
    problem: &CompositeProblem,
    lhat: f64,
    schedule: &ToleranceSchedule,
) -> Result<StepCandidate> {
    let v = state.phi.minimize(problem);
    trial_step_from(state, problem, lhat, schedule, v)
}

fn trial_step_from(
    state: &SolverState,
    problem: &CompositeProblem,
    lhat: f64,
    schedule: &ToleranceSchedule,
    v: VectorState,
) -> Result<StepCandidate> {
    let a_total = state.a();
    let a = solve_momentum(a_total, 1.0 + state.phi.strong_mass(), lhat).map_err(|e| match e {
        Error::NonFinite(_) => Error::WeightOverflow(state.n),
        other => other,
    })?;
    let theta = if a_total == 0.0 { 1.0 } else { a / (a_total + a) };

    let raw = schedule.tolerances(&ToleranceContext {
        n: state.n,
        a_next: a,
        a_prev: a_total,
        energy_improved: state.energy_improved,
        prev_eps: state.last_raw.eps,
        prev_delta: state.last_raw.delta,
    });
    let tolerances = raw.scaled(state.tolerance_scale);

    let y = VectorState::lincomb(1.0 - theta, &state.x, theta, &v);
    let (f_y, grad_y) = problem.smooth_value_and_gradient(&y);
    if !f_y.is_finite() {
        return Err(Error::NonFinite("f(y)"));
    }
    let step = 1.0 / (theta * lhat);
    let center = VectorState::lincomb(1.0, &v, -step, &grad_y);
    let z = problem.nonsmooth_prox(&center, step);
    let x_tilde = VectorState::lincomb(1.0 - theta, &state.x, theta, &z);

    Ok(StepCandidate {
        lhat,
        a,
        theta,
        v,
        y,
        f_y,
        grad_y,
        z,
        x_tilde,
        tolerances,
        raw_tolerances: raw,
    })
}

/// What one accepted iteration produced.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub candidate: StepCandidate,
    /// `F(x~_{n+1})`.
    pub f_tilde: f64,
    /// Number of doublings before acceptance.
    pub backtracks: usize,
    /// Whether the monotone pick kept the candidate.
    pub took_candidate: bool,
    pub restarted: bool,
}

/// Advances `state` by one iteration.
pub fn iterate(state: &mut SolverState, problem: &CompositeProblem, config: &SolverConfig) -> Result<StepOutcome> {
    let v = state.phi.minimize(problem);
    let mut lhat = 0.5 * state.l;
    let mut backtracks = 0;
    let (candidate, f_tilde) = loop {
        let candidate = trial_step_from(state, problem, lhat, &config.tolerance, v.clone())?;
        let f_smooth = problem.smooth_value(&candidate.x_tilde);
        let lin = candidate.grad_y.dot(&candidate.x_tilde.sub(&candidate.y));
        let accepted = accept_test(
            f_smooth - candidate.f_y,
            lin,
            lhat,
            candidate.x_tilde.dist_sq(&candidate.y),
            candidate.theta,
            candidate.tolerances.eps,
        );
        if accepted {
            let g = if problem.has_zero_nonsmooth() {
                0.0
            } else {
                problem.nonsmooth_value(&candidate.x_tilde)
            };
            break (candidate, f_smooth + g);
        }
        backtracks += 1;
        if backtracks >= config.max_backtracks {
            return Err(Error::BacktrackingExhausted {
                iteration: state.n,
                attempts: backtracks,
                last_lhat: lhat,
            });
        }
        lhat *= 2.0;
    };

    let took_candidate = f_tilde <= state.best_f;
    state.energy_improved = took_candidate;
    if took_candidate {
        state.x = candidate.x_tilde.clone();
        state.best_f = f_tilde;
    }

    let a = candidate.a;
    if !(state.a() + a).is_finite() {
        return Err(Error::WeightOverflow(state.n));
    }
    let Tolerances { eps, delta } = candidate.tolerances;
    state.a_total.add(a);
    state.eps_mass.add(a * eps);
    state.delta_mass.add(a * delta);
    let sigma = config.sigma(delta);
    state
        .phi
        .accumulate(a, &candidate.y, candidate.f_y, &candidate.grad_y, sigma, delta)?;
    state.l = candidate.lhat;
    state.last_raw = candidate.raw_tolerances;
    state.last_used = candidate.tolerances;
    state.n += 1;

    let restarted = state.next_restart == Some(state.n);
    if restarted {
        restart(state, config);
    }

    Ok(StepOutcome {
        candidate,
        f_tilde,
        backtracks,
        took_candidate,
        restarted,
    })
}

/// Resets `A`, the tolerance masses and `phi` at the current iterate and scales
/// the tolerances by `e^{-gamma}`. `L` carries over.
pub fn restart(state: &mut SolverState, config: &SolverConfig) {
    state.a_total = CompensatedSum::default();
    state.eps_mass = CompensatedSum::default();
    state.delta_mass = CompensatedSum::default();
    state.phi = EstimatingFunction::init(&state.x);
    state.anchor = state.x.clone();
    if let Some(schedule) = config.restart {
        state.tolerance_scale *= schedule.tolerance_factor();
    }
    state.restarts += 1;
    state.next_restart = state.fire_points.as_mut().and_then(Iterator::next);
}

/// One line of a convergence trace. `eps`/`delta` are the tolerances of the
/// step that produced the row (zero for the initial row).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub f_value: f64,
    pub energy_error: Option<f64>,
    pub a: f64,
    pub l: f64,
    pub eps: f64,
    pub delta: f64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].f_value <= w[0].f_value)
    }
}

/// Receives every trace row, in order, together with the solver state.
pub trait Reporter {
    fn report(&mut self, row: &TraceRow, state: &SolverState);
}

impl<F: FnMut(&TraceRow, &SolverState)> Reporter for F {
    fn report(&mut self, row: &TraceRow, state: &SolverState) {
        self(row, state)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoReport;

impl Reporter for NoReport {
    fn report(&mut self, _row: &TraceRow, _state: &SolverState) {}
}

/// How probe points for the lower-bound check are drawn.
#[derive(Debug, Clone)]
pub enum ProbeStrategy {
    /// Random convex combinations of the anchor, the current iterate and the
    /// given extra points. With the anchor and iterate both in the initial
    /// level set, the hull stays inside it.
    Hull(Vec<VectorState>),
    /// Uniform in the cube of half-width `radius` around the current iterate.
    Cube(f64),
}

/// Periodic checks of the two estimating-sequence inequalities:
/// `phi_n(x) <= A_n F(x) + |x - x0|^2 / 2` at probe points, and
/// `A_n (F(x_n) - (eps_bar + delta_bar)/2) <= phi_n(v_n)`.
#[derive(Debug, Clone)]
pub struct InvariantChecks {
    pub every: usize,
    pub probes: usize,
    pub seed: u64,
    pub relative_slack: f64,
    pub strategy: ProbeStrategy,
}

impl InvariantChecks {
    pub fn new(every: usize, seed: u64) -> Self {
        Self {
            every,
            probes: 10,
            seed,
            relative_slack: 1e-8,
            strategy: ProbeStrategy::Hull(Vec::new()),
        }
    }

    pub fn with_strategy(mut self, strategy: ProbeStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn check(&self, state: &SolverState, problem: &CompositeProblem, rng: &mut ChaCha8Rng) -> Result<()> {
        let a = state.a();
        let v = state.phi.minimize(problem);
        let phi_v = state.phi.evaluate(problem, &v);
        let lhs = a * state.best_f - 0.5 * (state.eps_mass() + state.delta_mass());
        let tol = self.relative_slack * (1.0 + (a * state.best_f).abs() + phi_v.abs());
        if !(lhs <= phi_v + tol) {
            return Err(Error::InvariantViolation {
                iteration: state.n,
                detail: format!("A_n (F(x_n) - (eps_bar + delta_bar)/2) = {lhs:e} exceeds phi_n(v_n) = {phi_v:e}"),
            });
        }

        for _ in 0..self.probes {
            let x = self.probe(state, rng);
            let fx = problem.value_unchecked(&x);
            if !fx.is_finite() {
                continue;
            }
            let phi_x = state.phi.evaluate(problem, &x);
            let bound = a * fx + 0.5 * x.dist_sq(&state.anchor);
            let tol = self.relative_slack * (1.0 + (a * fx).abs() + bound.abs());
            if !(phi_x <= bound + tol) {
                return Err(Error::InvariantViolation {
                    iteration: state.n,
                    detail: format!(
                        "phi_n(x) = {phi_x:e} exceeds A_n F(x) + |x - x0|^2/2 = {bound:e} at a probe point"
                    ),
                });
            }
        }
        Ok(())
    }

    fn probe(&self, state: &SolverState, rng: &mut ChaCha8Rng) -> VectorState {
        match &self.strategy {
            ProbeStrategy::Hull(extra) => {
                let mut weights: Vec<f64> = (0..2 + extra.len()).map(|_| rng.gen::<f64>()).collect();
                let total: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|w| *w /= total);
                let mut x = state.anchor.scaled(weights[0]);
                x.axpy(weights[1], &state.x);
                for (w, e) in weights[2..].iter().zip(extra) {
                    x.axpy(*w, e);
                }
                x
            }
            ProbeStrategy::Cube(radius) => {
                let mut x = state.x.clone();
                for c in x.as_mut_slice() {
                    *c += rng.gen_range(-radius..=*radius);
                }
                x
            }
        }
    }
}

/// Extra knobs for [`run_with`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// `F(x*)`; when set, rows carry `F(x_n) - F(x*)`.
    pub reference_energy: Option<f64>,
    pub checks: Option<InvariantChecks>,
    /// Leave the elapsed column at zero so reruns are bit-identical.
    pub skip_timing: bool,
}

/// Iterates until the budget is spent. A run also ends, without error, when
/// `A_n` would overflow.
pub fn run(
    problem: &CompositeProblem,
    config: &SolverConfig,
    x0: VectorState,
    reporter: &mut dyn Reporter,
) -> Result<ConvergenceTrace> {
    run_with(problem, config, x0, reporter, &RunOptions::default())
}

pub fn run_with(
    problem: &CompositeProblem,
    config: &SolverConfig,
    x0: VectorState,
    reporter: &mut dyn Reporter,
    options: &RunOptions,
) -> Result<ConvergenceTrace> {
    let start = Instant::now();
    let mut state = SolverState::new(problem, config, x0)?;
    let mut rng = options.checks.as_ref().map(|c| ChaCha8Rng::seed_from_u64(c.seed));
    let mut trace = ConvergenceTrace::default();

    let make_row = |state: &SolverState| TraceRow {
        n: state.n,
        f_value: state.best_f,
        energy_error: options.reference_energy.map(|f_star| state.best_f - f_star),
        a: state.a(),
        l: state.l,
        eps: state.last_used.eps,
        delta: state.last_used.delta,
        elapsed: if options.skip_timing {
            0.0
        } else {
            start.elapsed().as_secs_f64()
        },
    };

    let row = make_row(&state);
    reporter.report(&row, &state);
    trace.rows.push(row);

    loop {
        if let Some(max) = config.budget.max_iterations {
            if state.n >= max {
                break;
            }
        }
        if let Some(max) = config.budget.max_seconds {
            if start.elapsed().as_secs_f64() >= max {
                break;
            }
        }
        if config.budget.max_iterations.is_none() && config.budget.max_seconds.is_none() {
            break;
        }
        match iterate(&mut state, problem, config) {
            Ok(_) => {}
            // A_n left the floating-point range: the certificate is already at
            // rounding level, so the run simply ends here.
            Err(Error::WeightOverflow(_)) => break,
            Err(e) => return Err(e),
        }
        if let (Some(checks), Some(rng)) = (options.checks.as_ref(), rng.as_mut()) {
            if checks.every > 0 && state.n % checks.every == 0 {
                checks.check(&state, problem, rng)?;
            }
        }
        let row = make_row(&state);
        reporter.report(&row, &state);
        trace.rows.push(row);
    }
    Ok(trace)
}
