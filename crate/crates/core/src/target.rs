//! Target sets used as the operational "optimum found" event.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub type ObjectiveFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsMode {
    /// `f(x) - f_opt <= eps`
    Absolute,
    /// `(f(x) - f_opt) / (min_i f(x_i(1)) - f_opt) <= eps`
    Relative,
}

impl std::str::FromStr for EpsMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "absolute" | "abs" => Ok(EpsMode::Absolute),
            "relative" | "rel" => Ok(EpsMode::Relative),
            other => Err(format!("unknown epsilon mode `{other}`")),
        }
    }
}

impl fmt::Display for EpsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EpsMode::Absolute => "absolute",
            EpsMode::Relative => "relative",
        })
    }
}

/// Fitness-based membership test for the level set `S_eps`.
///
/// `initial_best` is required in relative mode and must exceed `f_opt`.
pub fn level_contains(
    fx: f64,
    f_opt: f64,
    eps: f64,
    mode: EpsMode,
    initial_best: Option<f64>,
) -> Result<bool> {
    if !(eps > 0.0) {
        return domain(format!("epsilon must be positive, got {eps}"));
    }
    match mode {
        EpsMode::Absolute => Ok(fx - f_opt <= eps),
        EpsMode::Relative => {
            let Some(init) = initial_best else {
                return domain("relative epsilon requires the initial best fitness");
            };
            if !(init > f_opt) {
                return domain(format!(
                    "relative epsilon is degenerate: initial best {init} <= optimum {f_opt}"
                ));
            }
            Ok((fx - f_opt) / (init - f_opt) <= eps)
        }
    }
}

/// Either a positive-volume box `S_0` or a fitness level set `S_eps`.
#[derive(Clone)]
pub enum TargetSet {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Level {
        objective: ObjectiveFn,
        f_opt: f64,
        eps: f64,
        mode: EpsMode,
    },
}

impl fmt::Debug for TargetSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSet::Box { lower, upper } => f
                .debug_struct("Box")
                .field("lower", lower)
                .field("upper", upper)
                .finish(),
            TargetSet::Level { f_opt, eps, mode, .. } => f
                .debug_struct("Level")
                .field("f_opt", f_opt)
                .field("eps", eps)
                .field("mode", mode)
                .finish_non_exhaustive(),
        }
    }
}

impl TargetSet {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return domain("box bounds must be non-empty and of equal length");
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return domain("box must have positive volume (lb_j < ub_j)");
        }
        Ok(TargetSet::Box { lower, upper })
    }

    /// The whole space, as an unbounded box.
    pub fn everywhere(dim: usize) -> Self {
        TargetSet::Box {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn new_level(objective: ObjectiveFn, f_opt: f64, eps: f64, mode: EpsMode) -> Result<Self> {
        if !(eps > 0.0) {
            return domain(format!("epsilon must be positive, got {eps}"));
        }
        Ok(TargetSet::Level {
            objective,
            f_opt,
            eps,
            mode,
        })
    }

    /// Binds the relative-mode denominator from the initial population.
    pub fn arm(&self, initial_positions: &[Vec<f64>]) -> Result<ArmedTarget<'_>> {
        match self {
            TargetSet::Box { .. } => Ok(ArmedTarget {
                set: self,
                initial_best: None,
            }),
            TargetSet::Level {
                objective,
                f_opt,
                mode,
                ..
            } => {
                let initial_best = match mode {
                    EpsMode::Absolute => None,
                    EpsMode::Relative => {
                        let best = initial_positions
                            .iter()
                            .map(|x| objective(x))
                            .fold(f64::INFINITY, f64::min);
                        if !(best > *f_opt) {
                            return domain(format!(
                                "relative epsilon is degenerate: initial best {best} <= optimum {f_opt}"
                            ));
                        }
                        Some(best)
                    }
                };
                Ok(ArmedTarget {
                    set: self,
                    initial_best,
                })
            }
        }
    }
}

/// A target with its relative-mode reference fitness resolved.
#[derive(Debug, Clone, Copy)]
pub struct ArmedTarget<'a> {
    set: &'a TargetSet,
    initial_best: Option<f64>,
}

impl ArmedTarget<'_> {
    pub fn initial_best(&self) -> Option<f64> {
        self.initial_best
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_with(x, None)
    }

    /// Like [`contains`](Self::contains) but reuses an already computed
    /// fitness for level sets.
    pub fn contains_with(&self, x: &[f64], fx: Option<f64>) -> bool {
        match self.set {
            TargetSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u),
            TargetSet::Level {
                objective,
                f_opt,
                eps,
                mode,
            } => {
                let fx = fx.unwrap_or_else(|| objective(x));
                level_contains(fx, *f_opt, *eps, *mode, self.initial_best).unwrap_or(false)
            }
        }
    }
}
