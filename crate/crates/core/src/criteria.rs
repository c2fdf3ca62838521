//! Algorithm-condition validation on traces and the failure-probability
//! product with its exponential bound.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::gwo::RunTrace;
use crate::montecarlo::HitProbSeries;

/// `(f(z(t)), f(xi(t)), f(z(t + 1)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Triple {
    pub best: f64,
    pub candidate: f64,
    pub next_best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriteriaTrace {
    triples: Vec<Triple>,
}

impl CriteriaTrace {
    pub fn new(triples: Vec<Triple>) -> Result<Self> {
        if triples.is_empty() {
            return domain("criteria trace is empty");
        }
        if let Some(i) = triples
            .iter()
            .position(|t| !(t.best.is_finite() && t.candidate.is_finite() && t.next_best.is_finite()))
        {
            return domain(format!("non-finite value in triple {i}"));
        }
        Ok(CriteriaTrace { triples })
    }

    /// Uses the recorded best new-solution fitness of each iteration as
    /// `xi(t)`.
    pub fn from_run_trace(trace: &RunTrace) -> Result<Self> {
        let triples = trace
            .records
            .windows(2)
            .map(|w| Triple {
                best: w[0].best_fitness,
                candidate: w[1].candidate_fitness,
                next_best: w[1].best_fitness,
            })
            .collect();
        Self::new(triples)
    }

    /// Only a best-so-far sequence is known: `xi(t)` is taken as the next
    /// best value, which reduces the check to monotonicity.
    pub fn from_best_sequence(best: &[f64]) -> Result<Self> {
        let triples = best
            .windows(2)
            .map(|w| Triple {
                best: w[0],
                candidate: w[1],
                next_best: w[1],
            })
            .collect();
        Self::new(triples)
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ConditionReport {
    Pass,
    Violation { index: usize, triple: Triple },
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        matches!(self, ConditionReport::Pass)
    }
}

/// `f(z(t + 1)) <= min(f(z(t)), f(xi(t)))` with exact comparison.
pub fn check_algorithm_condition(trace: &CriteriaTrace) -> ConditionReport {
    for (index, t) in trace.triples.iter().enumerate() {
        if t.next_best > t.best.min(t.candidate) {
            return ConditionReport::Violation { index, triple: *t };
        }
    }
    ConditionReport::Pass
}

/// `P[t][i][j]`, row-major, all entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitProbabilityMatrix {
    t_obs: usize,
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl HitProbabilityMatrix {
    pub fn new(t_obs: usize, n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if t_obs == 0 || n == 0 || d == 0 {
            return domain("matrix dimensions must be positive");
        }
        if data.len() != t_obs * n * d {
            return domain(format!("expected {} entries, got {}", t_obs * n * d, data.len()));
        }
        if let Some(p) = data.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return domain(format!("probability {p} outside [0, 1]"));
        }
        Ok(HitProbabilityMatrix { t_obs, n, d, data })
    }

    pub fn filled(t_obs: usize, n: usize, d: usize, p: f64) -> Result<Self> {
        Self::new(t_obs, n, d, vec![p; t_obs * n * d])
    }

    /// One series per dimension, shared by `n` agents; row `t` holds the
    /// probability for `x(t + 1)`.
    pub fn from_series(series: &[HitProbSeries], n: usize) -> Result<Self> {
        let Some(first) = series.first() else {
            return domain("need at least one series");
        };
        let len = first.p_hat.len();
        if len < 2 || series.iter().any(|s| s.p_hat.len() != len) {
            return domain("series must share a length of at least 2");
        }
        let d = series.len();
        let mut data = Vec::with_capacity((len - 1) * n * d);
        for t in 1..len {
            for _ in 0..n {
                data.extend(series.iter().map(|s| s.p_hat[t]));
            }
        }
        Self::new(len - 1, n, d, data)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.t_obs, self.n, self.d)
    }

    /// Zero-based indices.
    pub fn get(&self, t: usize, i: usize, j: usize) -> f64 {
        self.data[(t * self.n + i) * self.d + j]
    }

    pub fn set(&mut self, t: usize, i: usize, j: usize, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("probability {p} outside [0, 1]"));
        }
        self.data[(t * self.n + i) * self.d + j] = p;
        Ok(())
    }

    /// `prod_j P[t][i][j]` for every `(t, i)`.
    fn joint(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.chunks(self.d).map(|row| row.iter().product())
    }
}

const TINY: f64 = 1e-300;

/// `prod_t prod_i (1 - prod_j P[t][i][j])`.
pub fn failure_product(p: &HitProbabilityMatrix) -> f64 {
    let factors: Vec<f64> = p.joint().map(|q| 1.0 - q).collect();
    if factors.iter().all(|f| *f >= TINY) {
        let mut prod = 1.0;
        for f in &factors {
            prod *= f;
            if prod < TINY {
                return log_product(p);
            }
        }
        prod
    } else {
        log_product(p)
    }
}

fn log_product(p: &HitProbabilityMatrix) -> f64 {
    let mut log = 0.0;
    for q in p.joint() {
        if q >= 1.0 {
            return 0.0;
        }
        log += (-q).ln_1p();
    }
    log.exp()
}

/// `exp(-sum_t sum_i prod_j P[t][i][j])`.
pub fn failure_upper_bound(p: &HitProbabilityMatrix) -> f64 {
    (-p.joint().sum::<f64>()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FailureReport {
    pub horizon: usize,
    pub product: f64,
    pub bound: f64,
}

pub fn failure_report(p: &HitProbabilityMatrix) -> FailureReport {
    FailureReport {
        horizon: p.t_obs,
        product: failure_product(p),
        bound: failure_upper_bound(p),
    }
}
