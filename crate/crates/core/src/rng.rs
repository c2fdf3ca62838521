//! Deterministic random streams.
//!
//! Every trial owns one ChaCha8 stream addressed by `(seed, trial)`. ChaCha is
//! counter based, so the stream of trial `l` does not depend on how many other
//! trials ran before it or on which worker executes it. Inside a trial the
//! draws are consumed in a fixed order (iteration, agent, leader, dimension),
//! which pins every draw to its `(iteration, agent)` slot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Stream reserved for auxiliary draws (leader placement and the like).
const AUX_STREAM_BASE: u64 = 1 << 63;

pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// A stream disjoint from all trial streams, keyed by a small label.
pub fn aux_rng(seed: u64, label: u64) -> TrialRng {
    trial_rng(seed, AUX_STREAM_BASE | label)
}

/// Uniform draw on `[lo, hi)`; returns `lo` when the interval is degenerate.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}
