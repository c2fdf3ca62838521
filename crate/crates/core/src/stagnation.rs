//! The optimizer under the stagnation assumption: the three leaders are frozen
//! and only the agents move. A run ends the first time an agent lands in the
//! target set (the frozen best would be replaced by that agent, which is the
//! success event).

use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::gwo::{self, AMode, Bounds, UpdateDraws};
use crate::rng::{self, TrialRng};
use crate::target::{ArmedTarget, TargetSet};

pub use crate::target::EpsMode;

#[derive(Debug, Clone)]
pub struct StagnationConfig {
    pub leaders: [Vec<f64>; 3],
    pub agents: usize,
    /// Per-dimension uniform interval for the initial positions.
    pub init: Vec<(f64, f64)>,
    pub target: TargetSet,
    /// Horizon `T` of the scheduled `a`.
    pub horizon: usize,
    pub a_mode: AMode,
    pub seed: u64,
    /// Clamping box; `None` lets agents roam all of R^D.
    pub clamp: Option<Bounds>,
}

impl StagnationConfig {
    /// Defaults: one agent, initial interval `[-4, 4]` per dimension,
    /// scheduled `a`, unconstrained.
    pub fn new(leaders: [Vec<f64>; 3], target: TargetSet, horizon: usize, seed: u64) -> Result<Self> {
        let dim = leaders[0].len();
        let cfg = StagnationConfig {
            leaders,
            agents: 1,
            init: vec![(-4.0, 4.0); dim],
            target,
            horizon,
            a_mode: AMode::Scheduled,
            seed,
            clamp: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.leaders[0].len()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim == 0 {
            return domain("leaders must have at least one dimension");
        }
        for p in &self.leaders {
            if p.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return domain("leaders must be finite");
            }
        }
        if self.init.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: self.init.len(),
            });
        }
        if self.init.iter().any(|(lo, hi)| !(lo < hi)) {
            return domain("initial interval must be non-degenerate");
        }
        if self.agents == 0 {
            return domain("agent count must be at least 1");
        }
        if self.horizon == 0 {
            return domain("horizon T must be at least 1");
        }
        gwo::check_a_mode(self.a_mode)
    }

    pub fn leader_refs(&self) -> [&[f64]; 3] {
        [&self.leaders[0], &self.leaders[1], &self.leaders[2]]
    }

    /// Mutation center `c_j = (1/3) sum_k p_kj`.
    pub fn center(&self) -> Vec<f64> {
        mutation_center(self.leader_refs())
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        (0..self.agents)
            .map(|_| self.init.iter().map(|&(lo, hi)| rng::uniform(rng, lo, hi)).collect())
            .collect()
    }
}

pub fn mutation_center(leaders: [&[f64]; 3]) -> Vec<f64> {
    (0..leaders[0].len())
        .map(|j| (leaders[0][j] + leaders[1][j] + leaders[2][j]) / 3.0)
        .collect()
}

/// `a` at iteration `t`; constant mode ignores the horizon.
fn a_at(mode: AMode, t: usize, horizon: usize) -> Result<f64> {
    match mode {
        AMode::Constant(a) => Ok(a),
        AMode::Scheduled => gwo::a_value(mode, t, horizon),
    }
}

/// Reachable interval of one update: `|x_ij(t+1) - c_j| <= (1/3) sum_k n_kj`
/// with `n_kj = a (|p_kj| + |x_ij - p_kj|)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeBound {
    pub center: Vec<f64>,
    /// `n_kj`, indexed `[j][k]`.
    pub half_widths: Vec<[f64; 3]>,
    /// `sum_k n_kj`.
    pub aggregate: Vec<f64>,
}

impl EnvelopeBound {
    pub fn new(leaders: [&[f64]; 3], x: &[f64], a: f64) -> Self {
        let center = mutation_center(leaders);
        let half_widths: Vec<[f64; 3]> = x
            .iter()
            .enumerate()
            .map(|(j, &xj)| {
                let n = |k: usize| a * (leaders[k][j].abs() + (xj - leaders[k][j]).abs());
                [n(0), n(1), n(2)]
            })
            .collect();
        let aggregate = half_widths.iter().map(|n| n.iter().sum()).collect();
        EnvelopeBound {
            center,
            half_widths,
            aggregate,
        }
    }

    /// Membership with a few ulps of slack for the rounding of the mean.
    pub fn contains(&self, x_next: &[f64]) -> bool {
        x_next.iter().enumerate().all(|(j, v)| {
            let radius = self.aggregate[j] / 3.0;
            let slack = 4.0 * f64::EPSILON * (radius + self.center[j].abs() + v.abs());
            (v - self.center[j]).abs() <= radius + slack
        })
    }
}

/// Moves every agent once against the frozen leaders. `observe(i, x)` runs
/// right after agent `i` is updated; returning `true` stops the sweep and the
/// index is returned.
#[allow(clippy::too_many_arguments)]
pub fn sweep<R, F>(
    positions: &mut [Vec<f64>],
    leaders: [&[f64]; 3],
    a: f64,
    clamp: Option<&Bounds>,
    rng: &mut R,
    draws: &mut UpdateDraws,
    scratch: &mut [f64],
    mut observe: F,
) -> Result<Option<usize>>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &[f64]) -> bool,
{
    for (i, x) in positions.iter_mut().enumerate() {
        draws.resample(rng, a);
        gwo::new_solution_into(leaders, x, draws, clamp, scratch)?;
        x.copy_from_slice(scratch);
        if observe(i, x) {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// One stagnation iteration `t -> t + 1` (1-based: `t = 1` is the
/// initial population).
pub fn step_stagnation<R: Rng + ?Sized>(
    positions: &mut [Vec<f64>],
    config: &StagnationConfig,
    t: usize,
    rng: &mut R,
) -> Result<()> {
    if config.a_mode == AMode::Scheduled && t >= config.horizon {
        return domain(format!("iteration {t} has reached the horizon {}", config.horizon));
    }
    let a = a_at(config.a_mode, t, config.horizon)?;
    let dim = config.dim();
    let mut draws = UpdateDraws::zeros(dim);
    let mut scratch = vec![0.0; dim];
    sweep(
        positions,
        config.leader_refs(),
        a,
        config.clamp.as_ref(),
        rng,
        &mut draws,
        &mut scratch,
        |_, _| false,
    )?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitOutcome {
    pub hit: bool,
    pub iterations_used: usize,
    pub first_hit_position: Option<Vec<f64>>,
}

/// Iterates frozen-leader updates until an agent enters `target`, the
/// iteration budget runs out, or the scheduled `a` reaches the horizon.
#[allow(clippy::too_many_arguments)]
pub fn pursue<R: Rng + ?Sized>(
    leaders: [&[f64]; 3],
    positions: &mut [Vec<f64>],
    target: &ArmedTarget<'_>,
    a_mode: AMode,
    horizon: usize,
    clamp: Option<&Bounds>,
    max_iterations: usize,
    rng: &mut R,
) -> Result<HitOutcome> {
    if max_iterations == 0 {
        return domain("max_iterations must be at least 1");
    }
    let dim = leaders[0].len();
    let mut draws = UpdateDraws::zeros(dim);
    let mut scratch = vec![0.0; dim];
    let mut used = 0;
    while used < max_iterations {
        let t = used + 1;
        if a_mode == AMode::Scheduled && t >= horizon {
            break;
        }
        let a = a_at(a_mode, t, horizon)?;
        let hit = sweep(positions, leaders, a, clamp, rng, &mut draws, &mut scratch, |_, x| {
            target.contains(x)
        })?;
        used = t;
        if let Some(i) = hit {
            return Ok(HitOutcome {
                hit: true,
                iterations_used: used,
                first_hit_position: Some(positions[i].clone()),
            });
        }
    }
    Ok(HitOutcome {
        hit: false,
        iterations_used: used,
        first_hit_position: None,
    })
}

/// One trial on the random stream `(config.seed, trial)`.
pub fn run_until_hit(config: &StagnationConfig, max_iterations: usize, trial: u64) -> Result<HitOutcome> {
    config.validate()?;
    let mut rng: TrialRng = rng::trial_rng(config.seed, trial);
    let mut positions = config.sample_initial(&mut rng);
    let armed = config.target.arm(&positions)?;
    pursue(
        config.leader_refs(),
        &mut positions,
        &armed,
        config.a_mode,
        config.horizon,
        config.clamp.as_ref(),
        max_iterations,
        &mut rng,
    )
}

/// `d1 * prod_{tau=1}^{t-1} 2 (1 - tau / T)`, valid for `2 <= t <= floor(T/2)`.
pub fn envelope_lower_bound(d1: f64, t: usize, horizon: usize) -> Result<f64> {
    if !(d1 > 0.0) {
        return domain(format!("initial half-width must be positive, got {d1}"));
    }
    if t < 2 || t > horizon / 2 {
        return domain(format!("t = {t} outside [2, floor(T/2) = {}]", horizon / 2));
    }
    let product: f64 = (1..t)
        .map(|tau| 2.0 * (1.0 - tau as f64 / horizon as f64))
        .product();
    Ok(d1 * product)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MinHorizon {
    pub t0: usize,
    pub horizon: usize,
}

/// Smallest `k >= 0` with `1.5^k >= ratio`.
fn growth_steps(ratio: f64) -> usize {
    if ratio <= 1.0 {
        return 0;
    }
    let mut k = (ratio.ln() / 1.5f64.ln()).ceil().max(0.0) as i32;
    while k > 0 && 1.5f64.powi(k - 1) >= ratio {
        k -= 1;
    }
    while 1.5f64.powi(k) < ratio {
        k += 1;
    }
    k as usize
}

/// `t0 = max_j ceil(log_1.5(d0_j / d1_j) + 1)` and `T = 4 t0 + 1`.
pub fn min_horizon(d0: &[f64], d1: &[f64]) -> Result<MinHorizon> {
    if d0.len() != d1.len() {
        return Err(Error::Dimension {
            expected: d1.len(),
            got: d0.len(),
        });
    }
    if d0.is_empty() {
        return domain("at least one dimension required");
    }
    if d1.iter().any(|v| !(*v > 0.0)) {
        return domain("initial half-widths d1_j must be positive");
    }
    if d0.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return domain("target distances d0_j must be finite and non-negative");
    }
    let t0 = d0
        .iter()
        .zip(d1)
        .map(|(a, b)| growth_steps(a / b) + 1)
        .max()
        .unwrap_or(1);
    Ok(MinHorizon {
        t0,
        horizon: 4 * t0 + 1,
    })
}
