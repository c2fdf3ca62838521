//! The ten-function test suite and the success-rate experiment comparing the
//! original GWO with its frozen-leader variant.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gwo::{self, AMode, Bounds, GwoParams, Leaders, Problem, RunTrace, StopRule};
use crate::rng;
use crate::stagnation;
use crate::target::{level_contains, EpsMode, TargetSet};

type Objective = fn(&[f64]) -> f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modality {
    SinglePeak,
    MultiPeak,
}

#[derive(Clone)]
pub struct TestProblem {
    pub id: u8,
    pub name: &'static str,
    pub dim: usize,
    pub lower: f64,
    pub upper: f64,
    pub optima: Vec<Vec<f64>>,
    pub f_opt: f64,
    pub modality: Modality,
    objective: Objective,
}

impl fmt::Debug for TestProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestProblem")
            .field("id", &self.id)
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("f_opt", &self.f_opt)
            .finish_non_exhaustive()
    }
}

pub const PROBLEM_IDS: std::ops::RangeInclusive<u8> = 1..=10;

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn different_powers(x: &[f64]) -> f64 {
    let d = x.len();
    x.iter()
        .enumerate()
        .map(|(i, v)| v.abs().powf(2.0 + 4.0 * i as f64 / (d - 1) as f64))
        .sum::<f64>()
        .sqrt()
}

fn schwefel_222(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum::<f64>() + x.iter().map(|v| v.abs()).product::<f64>()
}

fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[0] * w[0] - w[1]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

fn griewank(x: &[f64]) -> f64 {
    let s = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let p: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    s - p + 1.0
}

fn rastrigin(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0).sum()
}

fn schwefel(x: &[f64]) -> f64 {
    -x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
}

fn happy_cat(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq: f64 = x.iter().map(|v| v * v).sum();
    let s: f64 = x.iter().sum();
    (sq - d).abs().powf(0.25) + (0.5 * sq + s) / d + 0.5
}

fn branin(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    (x2 - 5.1 / (4.0 * PI * PI) * x1 * x1 + 5.0 / PI * x1 - 6.0).powi(2) + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x1.cos()
        + 10.0
}

fn six_hump_camel(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    (4.0 - 2.1 * x1 * x1 + x1.powi(4) / 3.0) * x1 * x1 + x1 * x2 + (-4.0 + 4.0 * x2 * x2) * x2 * x2
}

fn branin_valley(x1: f64) -> f64 {
    5.1 / (4.0 * PI * PI) * x1 * x1 - 5.0 / PI * x1 + 6.0
}

impl TestProblem {
    /// Problem `id` at its tabulated dimension.
    pub fn get(id: u8) -> Result<Self> {
        let dim = match id {
            9 | 10 => 2,
            _ => 3,
        };
        Self::with_dim(id, dim)
    }

    /// Problems 1-8 accept any dimension (problem 2 needs `D >= 2`);
    /// problems 9 and 10 are two-dimensional only.
    pub fn with_dim(id: u8, dim: usize) -> Result<Self> {
        if dim == 0 {
            return domain("dimension must be positive");
        }
        let d = dim as f64;
        let (name, lo, hi, optimum, f_opt, modality, objective): (_, _, _, Vec<Vec<f64>>, _, _, Objective) =
            match id {
                1 => ("sphere", -3.0, 3.0, vec![vec![0.0; dim]], 0.0, Modality::SinglePeak, sphere),
                2 => {
                    if dim < 2 {
                        return domain("problem 2 is undefined for D = 1");
                    }
                    let f: Objective = different_powers;
                    ("different-powers", -3.0, 3.0, vec![vec![0.0; dim]], 0.0, Modality::SinglePeak, f)
                }
                3 => ("schwefel-2.22", -3.0, 3.0, vec![vec![0.0; dim]], 0.0, Modality::SinglePeak, schwefel_222),
                4 => ("rosenbrock", -3.0, 3.0, vec![vec![1.0; dim]], 0.0, Modality::SinglePeak, rosenbrock),
                5 => ("griewank", -10.0, 10.0, vec![vec![0.0; dim]], 0.0, Modality::MultiPeak, griewank),
                6 => ("rastrigin", -10.0, 10.0, vec![vec![0.0; dim]], 0.0, Modality::MultiPeak, rastrigin),
                7 => (
                    "schwefel",
                    -500.0,
                    500.0,
                    vec![vec![420.97; dim]],
                    -418.9829 * d,
                    Modality::MultiPeak,
                    schwefel,
                ),
                8 => ("happy-cat", -3.0, 3.0, vec![vec![-1.0; dim]], 0.0, Modality::MultiPeak, happy_cat),
                9 | 10 if dim != 2 => return domain(format!("problem {id} is two-dimensional")),
                9 => {
                    // every x1 = (2k + 1) pi whose valley point lies in the box
                    let optima = (-3..=2)
                        .map(|k| (2 * k + 1) as f64 * PI)
                        .map(|x1| vec![x1, branin_valley(x1)])
                        .filter(|p| p.iter().all(|v| (-20.0..=20.0).contains(v)))
                        .collect();
                    ("branin", -20.0, 20.0, optima, 0.3979, Modality::MultiPeak, branin)
                }
                10 => (
                    "six-hump-camel",
                    -3.0,
                    3.0,
                    vec![vec![0.09, -0.71], vec![-0.09, 0.71]],
                    -1.0316,
                    Modality::MultiPeak,
                    six_hump_camel,
                ),
                other => return domain(format!("unknown problem id {other}; expected 1..=10")),
            };
        Ok(TestProblem {
            id,
            name,
            dim,
            lower: lo,
            upper: hi,
            optima: optimum,
            f_opt,
            modality,
            objective,
        })
    }

    pub fn suite() -> Vec<TestProblem> {
        PROBLEM_IDS.map(|id| Self::get(id).expect("tabulated ids")).collect()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok((self.objective)(x))
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::cube(self.dim, self.lower, self.upper).expect("tabulated boxes are valid")
    }

    pub fn to_problem(&self) -> Problem {
        let f = self.objective;
        Problem::new(format!("f{}", self.id), self.bounds(), Arc::new(move |x: &[f64]| f(x)))
            .with_optima(self.optima.clone())
    }

    pub fn level_target(&self, eps: f64, mode: EpsMode) -> Result<TargetSet> {
        let f = self.objective;
        TargetSet::new_level(Arc::new(move |x: &[f64]| f(x)), self.f_opt, eps, mode)
    }
}

pub fn in_neighborhood(
    problem: &TestProblem,
    x: &[f64],
    eps: f64,
    mode: EpsMode,
    initial_best: Option<f64>,
) -> Result<bool> {
    let fx = problem.evaluate(x)?;
    level_contains(fx, problem.f_opt, eps, mode, initial_best)
}

/// `x1^2 + 2 x2^2`, the two-dimensional quadratic used to illustrate `S_0`.
pub fn demo_quadratic(x: &[f64]) -> f64 {
    x[0] * x[0] + 2.0 * x[1] * x[1]
}

/// The box `|x1| <= sqrt(eps)/sqrt(2)`, `|x2| <= sqrt(eps)/2` inscribed in
/// `{x : x1^2 + 2 x2^2 <= eps}`.
pub fn box_inscribed_in_s_eps(eps: f64) -> Result<TargetSet> {
    if !(eps > 0.0) {
        return domain(format!("epsilon must be positive, got {eps}"));
    }
    let h1 = eps.sqrt() / 2f64.sqrt();
    let h2 = eps.sqrt() / 2.0;
    TargetSet::new_box(vec![-h1, -h2], vec![h1, h2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Original,
    Stagnation,
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "original" => Ok(Variant::Original),
            "stagnation" => Ok(Variant::Stagnation),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Original => "original",
            Variant::Stagnation => "stagnation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessExperiment {
    pub problem: u8,
    pub variant: Variant,
    pub eps: f64,
    pub mode: EpsMode,
    pub trials: usize,
    pub agents: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Keep per-trial traces (original variant only).
    pub keep_traces: bool,
}

impl SuccessExperiment {
    /// `N = 10`, `T = 50000`, relative `eps = 0.1`, 10 trials.
    pub fn new(problem: u8, variant: Variant, seed: u64) -> Self {
        SuccessExperiment {
            problem,
            variant,
            eps: 0.1,
            mode: EpsMode::Relative,
            trials: 10,
            agents: 10,
            iterations: 50_000,
            seed,
            keep_traces: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub hit: bool,
    pub iterations_used: usize,
    #[serde(skip)]
    pub trace: Option<RunTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessSummary {
    pub problem: u8,
    pub variant: Variant,
    pub eps: f64,
    pub mode: EpsMode,
    pub trials: usize,
    pub success_count: usize,
    /// Mean first-hit iteration over successful trials only.
    pub mean_iterations: Option<f64>,
    pub censored: usize,
}

impl SuccessSummary {
    pub fn from_outcomes(exp: &SuccessExperiment, outcomes: &[TrialOutcome]) -> Self {
        let hits: Vec<usize> = outcomes.iter().filter(|o| o.hit).map(|o| o.iterations_used).collect();
        let mean_iterations = (!hits.is_empty()).then(|| hits.iter().sum::<usize>() as f64 / hits.len() as f64);
        SuccessSummary {
            problem: exp.problem,
            variant: exp.variant,
            eps: exp.eps,
            mode: exp.mode,
            trials: outcomes.len(),
            success_count: hits.len(),
            mean_iterations,
            censored: outcomes.len() - hits.len(),
        }
    }
}

pub fn run_success_experiment(exp: &SuccessExperiment) -> Result<(SuccessSummary, Vec<TrialOutcome>)> {
    if exp.trials == 0 {
        return domain("trials must be at least 1");
    }
    let problem = TestProblem::get(exp.problem)?;
    let target = problem.level_target(exp.eps, exp.mode)?;
    let compiled = problem.to_problem();
    let params = GwoParams::new(exp.agents, exp.iterations, exp.seed)?;
    let outcomes = (0..exp.trials)
        .into_par_iter()
        .map(|trial| match exp.variant {
            Variant::Original => {
                let stop = StopRule::Target(target.clone());
                let trace = gwo::run_trial(&compiled, &params, &stop, trial as u64)?;
                Ok(TrialOutcome {
                    trial,
                    hit: trace.hit,
                    iterations_used: trace.iterations_used,
                    trace: exp.keep_traces.then_some(trace),
                })
            }
            Variant::Stagnation => stagnation_trial(&compiled, &target, &params, trial),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((SuccessSummary::from_outcomes(exp, &outcomes), outcomes))
}

/// Leaders frozen at the best three initial agents; agents stay clamped to
/// the feasible box.
fn stagnation_trial(problem: &Problem, target: &TargetSet, params: &GwoParams, trial: usize) -> Result<TrialOutcome> {
    let mut r = rng::trial_rng(params.seed, trial as u64);
    let mut positions: Vec<Vec<f64>> = (0..params.agents).map(|_| problem.bounds.sample(&mut r)).collect();
    let fitness = positions
        .iter()
        .map(|x| gwo::evaluate_checked(problem, x))
        .collect::<Result<Vec<_>>>()?;
    let leaders = Leaders::from_population(&positions, &fitness)?;
    let frozen: [Vec<f64>; 3] = leaders.positions().map(<[f64]>::to_vec);
    let armed = target.arm(&positions)?;
    let outcome = stagnation::pursue(
        [&frozen[0], &frozen[1], &frozen[2]],
        &mut positions,
        &armed,
        AMode::Scheduled,
        params.iterations,
        Some(&problem.bounds),
        params.iterations,
        &mut r,
    )?;
    Ok(TrialOutcome {
        trial,
        hit: outcome.hit,
        iterations_used: outcome.iterations_used,
        trace: None,
    })
}
