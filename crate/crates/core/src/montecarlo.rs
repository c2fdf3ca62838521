//! Ensemble experiments on a single coordinate `x_ij(t)` of one agent under
//! frozen leaders.
//!
//! Coordinates evolve independently once the leaders are fixed, so the lab
//! only simulates the observed dimension. Trial `l` draws from stream
//! `(seed, l)`; trials are processed in fixed-size blocks whose partial
//! results are merged in block order, which keeps every estimate bitwise
//! identical for any number of worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::gwo::{self, AMode};
use crate::rng;
use crate::stats::{self, Histogram, NeumaierSum};

/// Trials per work unit.
const BLOCK: usize = 4096;

const LEADER_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub trials: usize,
    /// Horizon `T` of the scheduled `a`.
    pub horizon: usize,
    /// Last observed iteration; `x(1)` is the initial draw.
    pub t_max: usize,
    /// Leader coordinates `p_1j, p_2j, p_3j` of the observed dimension.
    pub leaders: [f64; 3],
    pub init: (f64, f64),
    pub a_mode: AMode,
    /// Index of the observed dimension (metadata only).
    pub dimension: usize,
    pub seed: u64,
}

impl EnsembleConfig {
    /// `T = 2000`, `t_max = floor(0.05 T) = 100`, `x(1) ~ U[-4, 4]`,
    /// scheduled `a`, leaders drawn from `U[-3, 3]`.
    pub fn new(trials: usize, seed: u64) -> Result<Self> {
        let cfg = EnsembleConfig {
            trials,
            horizon: 2000,
            t_max: 100,
            leaders: draw_leaders(seed, false),
            init: (-4.0, 4.0),
            a_mode: AMode::Scheduled,
            dimension: 0,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return domain(format!("need at least 2 trials, got {}", self.trials));
        }
        if self.t_max == 0 {
            return domain("t_max must be at least 1");
        }
        if self.horizon == 0 || self.t_max > self.horizon {
            return domain(format!(
                "t_max {} must not exceed the horizon {}",
                self.t_max, self.horizon
            ));
        }
        if !(self.init.0 < self.init.1) {
            return domain("initial interval must be non-degenerate");
        }
        if self.leaders.iter().any(|p| !p.is_finite()) {
            return domain("leaders must be finite");
        }
        gwo::check_a_mode(self.a_mode)
    }

    pub fn center(&self) -> f64 {
        (self.leaders[0] + self.leaders[1] + self.leaders[2]) / 3.0
    }

    /// `a` used for the update `x(t) -> x(t + 1)`.
    fn a_at(&self, t: usize) -> f64 {
        match self.a_mode {
            AMode::Constant(a) => a,
            AMode::Scheduled => 2.0 * (1.0 - t as f64 / self.horizon as f64),
        }
    }
}

/// Leader coordinates from `U[-3, 3]` on a stream reserved for them;
/// `center_zero` shifts them so that their mean is exactly representable as 0.
pub fn draw_leaders(seed: u64, center_zero: bool) -> [f64; 3] {
    let mut r = rng::aux_rng(seed, LEADER_STREAM);
    let mut p = [0.0; 3];
    for v in &mut p {
        *v = rng::uniform(&mut r, -3.0, 3.0);
    }
    if center_zero {
        let c = (p[0] + p[1] + p[2]) / 3.0;
        for v in &mut p {
            *v -= c;
        }
        // absorb the rounding residue into the last leader
        p[2] = -(p[0] + p[1]);
    }
    p
}

/// Per-block consumer of trajectory values.
pub trait Sink: Send + Sized {
    fn observe(&mut self, t: usize, x: f64);
    fn merge(&mut self, other: Self);
}

/// Runs the whole ensemble, feeding `x(t)` for `t = 1..=t_max` of every
/// trial into sinks created by `make`.
pub fn simulate<S, F>(cfg: &EnsembleConfig, make: F) -> Result<S>
where
    S: Sink,
    F: Fn() -> S + Sync,
{
    cfg.validate()?;
    let blocks = cfg.trials.div_ceil(BLOCK);
    let partials: Vec<S> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut sink = make();
            let end = ((b + 1) * BLOCK).min(cfg.trials);
            for trial in b * BLOCK..end {
                run_trajectory(cfg, trial as u64, &mut sink);
            }
            sink
        })
        .collect();
    let mut iter = partials.into_iter();
    let mut total = iter.next().unwrap_or_else(&make);
    for part in iter {
        total.merge(part);
    }
    Ok(total)
}

/// One trajectory. Draw order matches `UpdateDraws::resample` for `D = 1`:
/// the three `A`, then the three `C`.
fn run_trajectory<S: Sink>(cfg: &EnsembleConfig, trial: u64, sink: &mut S) {
    let mut r = rng::trial_rng(cfg.seed, trial);
    let [p0, p1, p2] = cfg.leaders;
    let mut x = rng::uniform(&mut r, cfg.init.0, cfg.init.1);
    sink.observe(1, x);
    for t in 1..cfg.t_max {
        let a = cfg.a_at(t);
        let a0 = rng::uniform(&mut r, -a, a);
        let a1 = rng::uniform(&mut r, -a, a);
        let a2 = rng::uniform(&mut r, -a, a);
        let c0 = 2.0 * r.gen::<f64>();
        let c1 = 2.0 * r.gen::<f64>();
        let c2 = 2.0 * r.gen::<f64>();
        let sum = gwo::candidate_component(p0, x, a0, c0)
            + gwo::candidate_component(p1, x, a1, c1)
            + gwo::candidate_component(p2, x, a2, c2);
        x = sum / 3.0;
        sink.observe(t + 1, x);
    }
}

/// Running sums of `(x - shift)^k`, `k = 0..=max_order`, per iteration.
#[derive(Debug, Clone)]
struct PowerSums {
    shift: f64,
    max_order: usize,
    // [t - 1][k]
    sums: Vec<Vec<NeumaierSum>>,
}

impl PowerSums {
    fn new(t_max: usize, max_order: usize, shift: f64) -> Self {
        PowerSums {
            shift,
            max_order,
            sums: vec![vec![NeumaierSum::default(); max_order + 1]; t_max],
        }
    }

    /// `(1 / (L - 1)) sum (x - mean)^r` from the shifted power sums.
    fn central(&self, t: usize, r: usize) -> (f64, usize) {
        let s: Vec<f64> = self.sums[t - 1].iter().map(NeumaierSum::total).collect();
        let n = s[0];
        let delta = s[1] / n;
        let mut acc = NeumaierSum::default();
        let mut binom = 1.0;
        for k in (0..=r).rev() {
            // term C(r, k) S_k (-delta)^(r - k), walking k downward
            acc.add(binom * s[k] * (-delta).powi((r - k) as i32));
            binom = binom * k as f64 / (r - k + 1) as f64;
        }
        (acc.total() / (n - 1.0), n as usize)
    }
}

impl Sink for PowerSums {
    #[inline]
    fn observe(&mut self, t: usize, x: f64) {
        let d = x - self.shift;
        let row = &mut self.sums[t - 1];
        let mut p = 1.0;
        for sum in row.iter_mut().take(self.max_order + 1) {
            sum.add(p);
            p *= d;
        }
    }

    fn merge(&mut self, other: Self) {
        for (mine, theirs) in self.sums.iter_mut().zip(&other.sums) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                a.merge(b);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSeries {
    pub orders: Vec<u32>,
    /// Observed iterations `1..=t_max`.
    pub t: Vec<usize>,
    /// `estimates[order_index][t - 1]`.
    pub estimates: Vec<Vec<f64>>,
    /// Trials contributing to each estimate.
    pub samples_per_t: Vec<usize>,
}

impl MomentSeries {
    pub fn series(&self, order: u32) -> Option<&[f64]> {
        let idx = self.orders.iter().position(|&r| r == order)?;
        Some(&self.estimates[idx])
    }

    pub fn at(&self, order: u32, t: usize) -> Option<f64> {
        self.series(order)?.get(t.checked_sub(1)?).copied()
    }

    /// Natural log of the estimate; `None` where it is not positive.
    pub fn ln_at(&self, order: u32, t: usize) -> Option<f64> {
        self.at(order, t).filter(|v| *v > 0.0).map(f64::ln)
    }

    /// Least-squares slope of `ln estimate` over `t_from..=t_to`.
    pub fn log_slope(&self, order: u32, t_from: usize, t_to: usize) -> Result<f64> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for t in t_from..=t_to {
            match self.ln_at(order, t) {
                Some(y) => {
                    xs.push(t as f64);
                    ys.push(y);
                }
                None => return domain(format!("no positive estimate of order {order} at t = {t}")),
            }
        }
        stats::ols_slope(&xs, &ys)
    }

    /// `m3 / m2^(3/2)` at `t`; requires orders 2 and 3.
    pub fn skewness(&self, t: usize) -> Option<f64> {
        let m2 = self.at(2, t)?;
        let m3 = self.at(3, t)?;
        Some(m3 / m2.powf(1.5))
    }
}

pub fn run_moment_experiment(cfg: &EnsembleConfig, orders: &[u32]) -> Result<MomentSeries> {
    if orders.is_empty() || orders.contains(&0) {
        return domain("orders must be a non-empty list of positive integers");
    }
    let max_order = *orders.iter().max().unwrap() as usize;
    let shift = cfg.center();
    let sums = simulate(cfg, || PowerSums::new(cfg.t_max, max_order, shift))?;
    let t: Vec<usize> = (1..=cfg.t_max).collect();
    let mut estimates = Vec::with_capacity(orders.len());
    let mut samples_per_t = vec![0; cfg.t_max];
    for &r in orders {
        let row = t
            .iter()
            .map(|&ti| {
                let (est, n) = sums.central(ti, r as usize);
                samples_per_t[ti - 1] = n;
                est
            })
            .collect();
        estimates.push(row);
    }
    Ok(MomentSeries {
        orders: orders.to_vec(),
        t,
        estimates,
        samples_per_t,
    })
}

struct SnapshotSamples {
    // index into `values` per t, or usize::MAX if t is not a snapshot
    slot: Vec<usize>,
    values: Vec<Vec<f64>>,
}

impl Sink for SnapshotSamples {
    #[inline]
    fn observe(&mut self, t: usize, x: f64) {
        let s = self.slot[t - 1];
        if s != usize::MAX {
            self.values[s].push(x);
        }
    }

    fn merge(&mut self, other: Self) {
        for (mine, theirs) in self.values.iter_mut().zip(other.values) {
            mine.extend(theirs);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdfSnapshot {
    pub t: usize,
    pub histogram: Histogram,
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

pub const DEFAULT_BINS: usize = 200;

pub fn run_pdf_experiment(cfg: &EnsembleConfig, snapshots: &[usize], bins: usize) -> Result<Vec<PdfSnapshot>> {
    if bins < 2 {
        return domain(format!("bin count must be at least 2, got {bins}"));
    }
    if snapshots.is_empty() || snapshots.iter().any(|&t| t == 0 || t > cfg.t_max) {
        return domain(format!("snapshots must lie in [1, {}]", cfg.t_max));
    }
    let mut slot = vec![usize::MAX; cfg.t_max];
    let mut unique: Vec<usize> = snapshots.to_vec();
    unique.sort_unstable();
    unique.dedup();
    for (i, &t) in unique.iter().enumerate() {
        slot[t - 1] = i;
    }
    let collected = simulate(cfg, || SnapshotSamples {
        slot: slot.clone(),
        values: vec![Vec::new(); unique.len()],
    })?;
    snapshots
        .iter()
        .map(|&t| {
            let xs = &collected.values[slot[t - 1]];
            let histogram = Histogram::from_samples(xs, bins)?;
            let mean = stats::mean(xs);
            let var = stats::central_moment_estimate(xs, 2)?;
            Ok(PdfSnapshot {
                t,
                histogram,
                mean,
                std_error: (var / xs.len() as f64).sqrt(),
                samples: xs.len(),
            })
        })
        .collect()
}

struct HitCounts {
    intervals: Vec<(f64, f64)>,
    // [t - 1][interval]
    counts: Vec<Vec<u64>>,
}

impl Sink for HitCounts {
    #[inline]
    fn observe(&mut self, t: usize, x: f64) {
        let row = &mut self.counts[t - 1];
        for (c, (lb, ub)) in row.iter_mut().zip(&self.intervals) {
            if *lb <= x && x <= *ub {
                *c += 1;
            }
        }
    }

    fn merge(&mut self, other: Self) {
        for (mine, theirs) in self.counts.iter_mut().zip(other.counts) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitProbSeries {
    pub lb: f64,
    pub ub: f64,
    pub trials: usize,
    /// `P(x(t) in [lb, ub])` for `t = 1..=t_max`.
    pub p_hat: Vec<f64>,
}

impl HitProbSeries {
    pub fn at(&self, t: usize) -> f64 {
        self.p_hat[t - 1]
    }

    pub fn log10_at(&self, t: usize) -> Option<f64> {
        let p = self.at(t);
        (p > 0.0).then(|| p.log10())
    }

    /// Binomial standard error at `t`.
    pub fn std_error(&self, t: usize) -> f64 {
        let p = self.at(t);
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

pub fn run_hitprob_experiment(cfg: &EnsembleConfig, intervals: &[(f64, f64)]) -> Result<Vec<HitProbSeries>> {
    if intervals.iter().any(|(lb, ub)| !(lb < ub)) {
        return domain("intervals must satisfy lb < ub");
    }
    let counts = simulate(cfg, || HitCounts {
        intervals: intervals.to_vec(),
        counts: vec![vec![0; intervals.len()]; cfg.t_max],
    })?;
    let n = cfg.trials as f64;
    Ok(intervals
        .iter()
        .enumerate()
        .map(|(i, &(lb, ub))| HitProbSeries {
            lb,
            ub,
            trials: cfg.trials,
            p_hat: counts.counts.iter().map(|row| row[i] as f64 / n).collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stagnation::{self, StagnationConfig};
    use crate::target::TargetSet;

    fn small(trials: usize, seed: u64) -> EnsembleConfig {
        EnsembleConfig::new(trials, seed).unwrap()
    }

    struct Collect(Vec<(usize, f64)>);

    impl Sink for Collect {
        fn observe(&mut self, t: usize, x: f64) {
            self.0.push((t, x));
        }
        fn merge(&mut self, other: Self) {
            self.0.extend(other.0);
        }
    }

    #[test]
    fn trajectory_matches_the_stagnation_step() {
        let mut cfg = small(3, 77);
        cfg.t_max = 30;
        let fast = simulate(&cfg, || Collect(Vec::new())).unwrap();

        let leaders = cfg.leaders.map(|p| vec![p]);
        let scfg = StagnationConfig::new(leaders, TargetSet::everywhere(1), cfg.horizon, cfg.seed).unwrap();
        for trial in 0..3u64 {
            let mut r = rng::trial_rng(cfg.seed, trial);
            let mut pos = scfg.sample_initial(&mut r);
            let mut slow = vec![pos[0][0]];
            for t in 1..cfg.t_max {
                stagnation::step_stagnation(&mut pos, &scfg, t, &mut r).unwrap();
                slow.push(pos[0][0]);
            }
            let start = trial as usize * cfg.t_max;
            let got: Vec<f64> = fast.0[start..start + cfg.t_max].iter().map(|p| p.1).collect();
            assert_eq!(got, slow);
        }
    }

    #[test]
    fn config_validation() {
        assert!(EnsembleConfig::new(1, 0).is_err());
        let mut cfg = small(10, 0);
        cfg.t_max = 2001;
        assert!(cfg.validate().is_err());
        cfg.t_max = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn centered_leaders() {
        let p = draw_leaders(5, true);
        assert_eq!(p[0] + p[1] + p[2], 0.0);
        assert!(p.iter().all(|v| v.abs() <= 6.0));
        let q = draw_leaders(5, false);
        assert!(q.iter().all(|v| (-3.0..=3.0).contains(v)));
    }

    #[test]
    fn power_sums_match_two_pass() {
        let mut cfg = small(5000, 3);
        cfg.t_max = 10;
        let series = run_moment_experiment(&cfg, &[2, 3, 4, 6]).unwrap();
        let snaps = run_pdf_experiment(&cfg, &[1, 5, 10], 10).unwrap();
        let samples = simulate(&cfg, || SnapshotSamples {
            slot: (0..10).map(|t| if t == 9 { 0 } else { usize::MAX }).collect(),
            values: vec![Vec::new()],
        })
        .unwrap();
        for r in [2u32, 3, 4, 6] {
            let direct = stats::central_moment_estimate(&samples.values[0], r).unwrap();
            let streamed = series.at(r, 10).unwrap();
            assert!((direct - streamed).abs() <= 1e-10 * direct.abs().max(1e-3), "r = {r}");
        }
        assert_eq!(series.samples_per_t, vec![5000; 10]);
        assert_eq!(snaps[2].samples, 5000);
    }

    #[test]
    fn initial_variance_is_uniform() {
        let cfg = small(200_000, 8);
        let mut c = cfg.clone();
        c.t_max = 2;
        let series = run_moment_experiment(&c, &[2]).unwrap();
        let v = series.at(2, 1).unwrap();
        // variance of U[-4, 4] is 8^2 / 12
        assert!((v - 64.0 / 12.0).abs() < 0.01 * 64.0 / 12.0, "{v}");
    }

    #[test]
    fn hit_probabilities_are_monotone_in_the_interval() {
        let mut cfg = small(20_000, 4);
        cfg.t_max = 20;
        let c = cfg.center();
        let out = run_hitprob_experiment(&cfg, &[(c - 0.5, c + 0.5), (c - 1.0, c + 1.0), (-1e9, 1e9)]).unwrap();
        for t in 1..=20 {
            assert!(out[0].at(t) <= out[1].at(t));
            assert_eq!(out[2].at(t), 1.0);
            assert!((0.0..=1.0).contains(&out[0].at(t)));
        }
        assert!(run_hitprob_experiment(&cfg, &[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn pdf_argument_checks() {
        let cfg = small(100, 1);
        assert!(run_pdf_experiment(&cfg, &[2], 1).is_err());
        assert!(run_pdf_experiment(&cfg, &[0], 10).is_err());
        assert!(run_pdf_experiment(&cfg, &[101], 10).is_err());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = small(3 * BLOCK + 17, 12);
        cfg.t_max = 15;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_moment_experiment(&cfg, &[2, 4, 12]).unwrap());
        let b = four.install(|| run_moment_experiment(&cfg, &[2, 4, 12]).unwrap());
        assert_eq!(a, b);
        let a = one.install(|| run_hitprob_experiment(&cfg, &[(-0.5, 0.5)]).unwrap());
        let b = four.install(|| run_hitprob_experiment(&cfg, &[(-0.5, 0.5)]).unwrap());
        assert_eq!(a, b);
    }
}
