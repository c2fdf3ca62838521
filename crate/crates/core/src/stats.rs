//! Small numerical helpers: compensated summation, sample central moments,
//! histograms and least-squares slopes.

use serde::Serialize;

use crate::error::{domain, Result};

/// Neumaier's improved Kahan summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().copied().collect::<NeumaierSum>().total() / samples.len() as f64
}

/// `(1 / (L - 1)) * sum_l (x_l - mean)^r`, two-pass.
pub fn central_moment_estimate(samples: &[f64], r: u32) -> Result<f64> {
    if samples.len() < 2 {
        return domain(format!("need at least 2 samples, got {}", samples.len()));
    }
    if r == 0 {
        return domain("moment order must be positive");
    }
    let m = mean(samples);
    let sum: NeumaierSum = samples.iter().map(|x| (x - m).powi(r as i32)).collect();
    Ok(sum.total() / (samples.len() - 1) as f64)
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return domain("slope needs at least two paired points");
    }
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return domain("slope undefined for constant abscissae");
    }
    Ok(sxy / sxx)
}

/// Uniform-bin frequency histogram normalized to a density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
}

impl Histogram {
    /// Bins `[min, max]` of the samples into `bins` equal-width cells.
    pub fn from_samples(samples: &[f64], bins: usize) -> Result<Self> {
        if bins < 2 {
            return domain(format!("bin count must be at least 2, got {bins}"));
        }
        if samples.is_empty() {
            return domain("histogram of an empty sample");
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Histogram::with_range(samples, bins, lo, hi)
    }

    /// Samples outside `[lo, hi]` are dropped; the density then integrates to
    /// the retained fraction.
    pub fn with_range(samples: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins < 2 {
            return domain(format!("bin count must be at least 2, got {bins}"));
        }
        if !(lo < hi) {
            return domain("histogram range must be non-degenerate");
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &x in samples {
            if !(lo..=hi).contains(&x) {
                continue;
            }
            let idx = (((x - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let n = samples.len() as f64;
        let density = counts.iter().map(|&c| c as f64 / (n * width)).collect();
        Ok(Histogram {
            edges,
            counts,
            density,
        })
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn mids(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Upper-side midpoints of the bars: the polyline approximating the PDF.
    pub fn polyline(&self) -> Vec<(f64, f64)> {
        self.mids().into_iter().zip(self.density.iter().copied()).collect()
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width()
    }

    pub fn mode_bin(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }
}
