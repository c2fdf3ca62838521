//! Grey wolf optimizer: solution update, leader bookkeeping and the run loop.
//!
//! Each agent moves to the mean of three candidates built around the current
//! leaders,
//!
//! ```text
//! x'_kj = p_kj + A_kj * |C_kj * p_kj - x_ij|,   A ~ U[-a, a],  C ~ U[0, 2]
//! x_ij  <- (x'_1j + x'_2j + x'_3j) / 3
//! ```
//!
//! and every new solution is offered to the leader cascade immediately, so
//! later agents in the same iteration already see the updated leaders.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{self, TrialRng};
use crate::target::{ObjectiveFn, TargetSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AMode {
    /// `a(t) = 2 (1 - t / T)`
    Scheduled,
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundsPolicy {
    Clamp,
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwoParams {
    pub agents: usize,
    /// Total iterations `T`; also the horizon of the scheduled `a`.
    pub iterations: usize,
    pub seed: u64,
    pub a_mode: AMode,
    pub bounds_policy: BoundsPolicy,
}

impl GwoParams {
    pub fn new(agents: usize, iterations: usize, seed: u64) -> Result<Self> {
        let params = GwoParams {
            agents,
            iterations,
            seed,
            a_mode: AMode::Scheduled,
            bounds_policy: BoundsPolicy::Clamp,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_a_mode(mut self, mode: AMode) -> Result<Self> {
        self.a_mode = mode;
        self.validate()?;
        Ok(self)
    }

    pub fn with_bounds_policy(mut self, policy: BoundsPolicy) -> Self {
        self.bounds_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents == 0 {
            return domain("agent count must be at least 1");
        }
        check_a_mode(self.a_mode)
    }
}

pub(crate) fn check_a_mode(mode: AMode) -> Result<()> {
    match mode {
        AMode::Constant(a) if !(0.0..=2.0).contains(&a) => {
            domain(format!("constant a must lie in [0, 2], got {a}"))
        }
        _ => Ok(()),
    }
}

/// Value of `a` at iteration `t` for horizon `horizon`.
pub fn a_value(mode: AMode, t: usize, horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return domain("horizon T must be at least 1");
    }
    if t > horizon {
        return domain(format!("iteration {t} exceeds horizon {horizon}"));
    }
    Ok(match mode {
        AMode::Scheduled => 2.0 * (1.0 - t as f64 / horizon as f64),
        AMode::Constant(a) => a,
    })
}

pub fn a_schedule(t: usize, params: &GwoParams) -> Result<f64> {
    a_value(params.a_mode, t, params.iterations)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return domain("lower bound exceeds upper bound");
        }
        Ok(Bounds { lower, upper })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Bounds::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_finite(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng::uniform(rng, *lo, *hi))
            .collect()
    }
}

/// A minimization problem: objective, feasible box and (optionally) the
/// known global optima used for distance reporting.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub bounds: Bounds,
    pub objective: ObjectiveFn,
    pub optima: Vec<Vec<f64>>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("bounds", &self.bounds)
            .field("optima", &self.optima)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(name: impl Into<String>, bounds: Bounds, objective: ObjectiveFn) -> Self {
        Problem {
            name: name.into(),
            bounds,
            objective,
            optima: Vec::new(),
        }
    }

    pub fn with_optima(mut self, optima: Vec<Vec<f64>>) -> Self {
        self.optima = optima;
        self
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    /// Euclidean distance to the nearest listed optimum.
    pub fn distance_to_optimum(&self, x: &[f64]) -> Option<f64> {
        self.optima
            .iter()
            .map(|g| {
                g.iter()
                    .zip(x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .min_by(f64::total_cmp)
    }
}

/// The random coefficients for one agent update: `A_kj` and `C_kj` for
/// `k = 1..3`, `j = 1..D`, stored row-major by leader.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateDraws {
    dim: usize,
    a: Vec<f64>,
    c: Vec<f64>,
}

impl UpdateDraws {
    pub fn zeros(dim: usize) -> Self {
        UpdateDraws {
            dim,
            a: vec![0.0; 3 * dim],
            c: vec![0.0; 3 * dim],
        }
    }

    /// Builds draws from explicit coefficients, validating their ranges.
    pub fn from_parts(a_param: f64, a: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if a.len() != c.len() || !a.len().is_multiple_of(3) {
            return domain("draw arrays must both hold 3*D entries");
        }
        if a.iter().any(|v| v.abs() > a_param) {
            return domain(format!("A draw outside [-{a_param}, {a_param}]"));
        }
        if c.iter().any(|v| !(0.0..=2.0).contains(v)) {
            return domain("C draw outside [0, 2]");
        }
        Ok(UpdateDraws {
            dim: a.len() / 3,
            a,
            c,
        })
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R, a_param: f64, dim: usize) -> Self {
        let mut draws = UpdateDraws::zeros(dim);
        draws.resample(rng, a_param);
        draws
    }

    /// Redraws in place: all `A` first, then all `C`.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R, a_param: f64) {
        for v in &mut self.a {
            *v = rng::uniform(rng, -a_param, a_param);
        }
        for v in &mut self.c {
            *v = rng::uniform(rng, 0.0, 2.0);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(A_kj, C_kj)` for leader `k` in `0..3`.
    pub fn get(&self, k: usize, j: usize) -> (f64, f64) {
        let idx = k * self.dim + j;
        (self.a[idx], self.c[idx])
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a
    }

    pub fn c_values(&self) -> &[f64] {
        &self.c
    }
}

#[inline]
pub fn candidate_component(p: f64, x: f64, a: f64, c: f64) -> f64 {
    p + a * (c * p - x).abs()
}

/// Writes the new position of one agent into `out`.
pub fn new_solution_into(
    leaders: [&[f64]; 3],
    x: &[f64],
    draws: &UpdateDraws,
    clamp: Option<&Bounds>,
    out: &mut [f64],
) -> Result<()> {
    let dim = x.len();
    for len in leaders.iter().map(|p| p.len()).chain([draws.dim, out.len()]) {
        if len != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: len,
            });
        }
    }
    for j in 0..dim {
        let mut sum = 0.0;
        for (k, p) in leaders.iter().enumerate() {
            let (a, c) = draws.get(k, j);
            sum += candidate_component(p[j], x[j], a, c);
        }
        out[j] = sum / 3.0;
    }
    if let Some(bounds) = clamp {
        if bounds.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: bounds.dim(),
            });
        }
        bounds.clamp(out);
    }
    Ok(())
}

pub fn new_solution(
    leaders: [&[f64]; 3],
    x: &[f64],
    draws: &UpdateDraws,
    clamp: Option<&Bounds>,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.len()];
    new_solution_into(leaders, x, draws, clamp, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leader {
    pub position: Vec<f64>,
    pub fitness: f64,
}

/// The three best records, ordered `f(p_1) <= f(p_2) <= f(p_3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaders {
    slots: [Leader; 3],
}

impl Leaders {
    pub fn new(p1: Leader, p2: Leader, p3: Leader) -> Result<Self> {
        if !(p1.fitness <= p2.fitness && p2.fitness <= p3.fitness) {
            return domain("leaders must be ordered by fitness");
        }
        Ok(Leaders { slots: [p1, p2, p3] })
    }

    /// Best three of a population. With fewer than three agents the worst
    /// available record fills the remaining slots.
    pub fn from_population(positions: &[Vec<f64>], fitness: &[f64]) -> Result<Self> {
        if positions.is_empty() || positions.len() != fitness.len() {
            return domain("population must be non-empty with one fitness per agent");
        }
        let mut order: Vec<usize> = (0..positions.len()).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
        let pick = |rank: usize| {
            let i = order[rank.min(order.len() - 1)];
            Leader {
                position: positions[i].clone(),
                fitness: fitness[i],
            }
        };
        Ok(Leaders {
            slots: [pick(0), pick(1), pick(2)],
        })
    }

    pub fn get(&self, k: usize) -> &Leader {
        &self.slots[k]
    }

    pub fn best(&self) -> &Leader {
        &self.slots[0]
    }

    pub fn positions(&self) -> [&[f64]; 3] {
        [
            &self.slots[0].position,
            &self.slots[1].position,
            &self.slots[2].position,
        ]
    }

    pub fn fitnesses(&self) -> [f64; 3] {
        [
            self.slots[0].fitness,
            self.slots[1].fitness,
            self.slots[2].fitness,
        ]
    }

    pub fn is_ordered(&self) -> bool {
        let f = self.fitnesses();
        f[0] <= f[1] && f[1] <= f[2]
    }
}

/// Offers a candidate to the leader cascade. Returns the replaced slot.
///
/// A new best demotes the old `p_1` to `p_2` and the old `p_2` to `p_3`.
/// Replacing `p_2` or `p_3` leaves the other slots untouched. Ties never
/// replace.
pub fn update_leaders(leaders: &mut Leaders, candidate: &[f64], f_candidate: f64) -> Option<usize> {
    let [f1, f2, f3] = leaders.fitnesses();
    let fresh = || Leader {
        position: candidate.to_vec(),
        fitness: f_candidate,
    };
    let slots = &mut leaders.slots;
    if f_candidate < f1 {
        slots.rotate_right(1);
        slots[0] = fresh();
        Some(0)
    } else if f1 <= f_candidate && f_candidate < f2 {
        slots[1] = fresh();
        Some(1)
    } else if f2 <= f_candidate && f_candidate < f3 {
        slots[2] = fresh();
        Some(2)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub positions: Vec<Vec<f64>>,
    pub leaders: Leaders,
    /// Completed iterations.
    pub t: usize,
}

impl SwarmState {
    /// Agents uniform in the problem box; leaders are the best three of them.
    pub fn initialize<R: Rng + ?Sized>(problem: &Problem, agents: usize, rng: &mut R) -> Result<Self> {
        if !problem.bounds.is_finite() {
            return domain("initialization requires finite bounds");
        }
        let positions: Vec<Vec<f64>> = (0..agents).map(|_| problem.bounds.sample(rng)).collect();
        SwarmState::from_positions(problem, positions)
    }

    pub fn from_positions(problem: &Problem, positions: Vec<Vec<f64>>) -> Result<Self> {
        let fitness = positions
            .iter()
            .map(|x| evaluate_checked(problem, x))
            .collect::<Result<Vec<_>>>()?;
        let leaders = Leaders::from_population(&positions, &fitness)?;
        Ok(SwarmState {
            positions,
            leaders,
            t: 0,
        })
    }
}

pub(crate) fn evaluate_checked(problem: &Problem, x: &[f64]) -> Result<f64> {
    if x.len() != problem.dim() {
        return Err(Error::Dimension {
            expected: problem.dim(),
            got: x.len(),
        });
    }
    let f = problem.eval(x);
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NonFinite {
            value: f,
            position: x.to_vec(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Lowest fitness among the new solutions generated this iteration.
    pub best_candidate: f64,
    /// Whether the observer asked to stop.
    pub stopped: bool,
}

/// One iteration. `observe` sees every new solution and its fitness right
/// after evaluation; returning `true` ends the iteration early.
pub fn step_observed<R, F>(
    state: &mut SwarmState,
    params: &GwoParams,
    problem: &Problem,
    rng: &mut R,
    mut observe: F,
) -> Result<StepReport>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64], f64) -> bool,
{
    if state.t >= params.iterations {
        return domain(format!(
            "iteration {} has reached the horizon {}",
            state.t, params.iterations
        ));
    }
    let a = a_schedule(state.t, params)?;
    let dim = problem.dim();
    let clamp = match params.bounds_policy {
        BoundsPolicy::Clamp => Some(&problem.bounds),
        BoundsPolicy::Unconstrained => None,
    };
    let mut draws = UpdateDraws::zeros(dim);
    let mut next = vec![0.0; dim];
    let mut report = StepReport {
        best_candidate: f64::INFINITY,
        stopped: false,
    };
    for i in 0..state.positions.len() {
        draws.resample(rng, a);
        new_solution_into(state.leaders.positions(), &state.positions[i], &draws, clamp, &mut next)?;
        state.positions[i].copy_from_slice(&next);
        let f = evaluate_checked(problem, &next)?;
        report.best_candidate = report.best_candidate.min(f);
        update_leaders(&mut state.leaders, &next, f);
        if observe(&next, f) {
            report.stopped = true;
            break;
        }
    }
    state.t += 1;
    Ok(report)
}

pub fn step<R: Rng + ?Sized>(
    state: &mut SwarmState,
    params: &GwoParams,
    problem: &Problem,
    rng: &mut R,
) -> Result<StepReport> {
    step_observed(state, params, problem, rng, |_, _| false)
}

pub enum StopRule {
    MaxIterations,
    Target(TargetSet),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub best_fitness: f64,
    /// Best fitness among this iteration's new solutions (the initial
    /// population for `t = 0`).
    pub candidate_fitness: f64,
    pub dist_to_optimum: Option<f64>,
    pub best_position: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub hit: bool,
    pub iterations_used: usize,
    /// Reference fitness of a relative target, if one was used.
    pub initial_best: Option<f64>,
}

impl RunTrace {
    pub fn best_fitness(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_fitness).collect()
    }

    pub fn final_record(&self) -> &TraceRecord {
        self.records.last().expect("trace always holds the initial record")
    }
}

fn record(state: &SwarmState, problem: &Problem, candidate_fitness: f64) -> TraceRecord {
    let best = state.leaders.best();
    TraceRecord {
        t: state.t,
        best_fitness: best.fitness,
        candidate_fitness,
        dist_to_optimum: problem.distance_to_optimum(&best.position),
        best_position: best.position.clone(),
    }
}

pub fn run(problem: &Problem, params: &GwoParams, stop: &StopRule) -> Result<RunTrace> {
    run_trial(problem, params, stop, 0)
}

/// A full run on the random stream of `trial`.
pub fn run_trial(problem: &Problem, params: &GwoParams, stop: &StopRule, trial: u64) -> Result<RunTrace> {
    params.validate()?;
    if params.bounds_policy == BoundsPolicy::Clamp && !problem.bounds.is_finite() {
        return domain("clamping requires finite bounds");
    }
    let mut rng: TrialRng = rng::trial_rng(params.seed, trial);
    let mut state = SwarmState::initialize(problem, params.agents, &mut rng)?;
    let initial_min = state.leaders.best().fitness;

    let armed = match stop {
        StopRule::MaxIterations => None,
        StopRule::Target(target) => Some(target.arm(&state.positions)?),
    };
    let mut trace = RunTrace {
        records: vec![record(&state, problem, initial_min)],
        hit: false,
        iterations_used: 0,
        initial_best: armed.and_then(|a| a.initial_best()),
    };

    while state.t < params.iterations {
        let report = step_observed(&mut state, params, problem, &mut rng, |x, f| {
            armed.is_some_and(|target| target.contains_with(x, Some(f)))
        })?;
        trace.records.push(record(&state, problem, report.best_candidate));
        trace.iterations_used = state.t;
        if report.stopped {
            trace.hit = true;
            break;
        }
    }
    Ok(trace)
}
