//! Analytic side of the central-moment recursion
//! `sigma^r(t+1) = f_r sigma^r(t) + g_r(t)` for even `r`.
//!
//! Only the linear coefficient `f_r` is available in closed form; `g_r` is
//! never iterated here and moment trajectories come from the Monte Carlo
//! harness instead.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::stats::NeumaierSum;

/// Orders above this overflow the exact `u128` power `3^(r+3)`.
pub const MAX_ORDER: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct EvenOrder(u32);

impl EvenOrder {
    pub fn new(r: u32) -> Result<Self> {
        if r < 2 || !r.is_multiple_of(2) {
            return domain(format!("moment order must be a positive even integer, got {r}"));
        }
        if r > MAX_ORDER {
            return domain(format!("moment order {r} exceeds the supported maximum {MAX_ORDER}"));
        }
        Ok(EvenOrder(r))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// `2, 4, ..., r_max`.
    pub fn up_to(r_max: u32) -> Result<Vec<EvenOrder>> {
        EvenOrder::new(r_max)?;
        (1..=r_max / 2).map(|h| EvenOrder::new(2 * h)).collect()
    }
}

impl TryFrom<u32> for EvenOrder {
    type Error = crate::Error;

    fn try_from(r: u32) -> Result<Self> {
        EvenOrder::new(r)
    }
}

fn binomial(n: u32, k: u32) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) / (i + 1) is C(n, i + 1)
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

fn check_a(a: f64) -> Result<()> {
    if !(a >= 0.0) || !a.is_finite() {
        return domain(format!("a must be finite and non-negative, got {a}"));
    }
    Ok(())
}

/// `(a/3)^r` without overflow for large `r`.
fn scaled_power(a: f64, r: u32) -> f64 {
    (a / 3.0).powi(r as i32)
}

/// The coefficient as a literal double sum over `(p, q)`.
pub fn f_r_doublesum(a: f64, r: EvenOrder) -> Result<f64> {
    check_a(a)?;
    let r = r.get();
    let half = r / 2;
    let mut sum = NeumaierSum::default();
    for p in 0..=half {
        let outer = binomial(r, 2 * p);
        for q in 0..=(half - p) {
            let weight = outer * binomial(r - 2 * p, 2 * q);
            let denom = u128::from((2 * p + 1) * (2 * q + 1) * (r - 2 * p - 2 * q + 1));
            sum.add(weight as f64 / denom as f64);
        }
    }
    Ok(scaled_power(a, r) * sum.total())
}

/// `(3^(r+3) - 3) / (4 (r+1)(r+2)(r+3))`, with the power taken exactly.
fn closed_ratio(r: u32) -> f64 {
    let numer = 3u128.pow(r + 3) - 3;
    let r = u128::from(r);
    let denom = 4 * (r + 1) * (r + 2) * (r + 3);
    numer as f64 / denom as f64
}

pub fn f_r_closed(a: f64, r: EvenOrder) -> Result<f64> {
    check_a(a)?;
    Ok(scaled_power(a, r.get()) * closed_ratio(r.get()))
}

/// `f_2 = a^2 / 9`: the variance recursion is contractive for every `a < 3`.
pub fn f2_coefficient(a: f64) -> f64 {
    a * a / 9.0
}

/// The positive root `a_r` of `f_r(a) = 1`.
pub fn critical_a(r: EvenOrder) -> f64 {
    let r = r.get();
    3.0 * (-closed_ratio(r).ln() / f64::from(r)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// `f_r < 1` over the whole interval.
    Bounded,
    /// `f_r > 1` over the whole interval.
    Divergent,
    /// The interval straddles `a_r`.
    DivergentWithin { crossing: f64 },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Bounded => "bounded",
            Verdict::Divergent => "divergent",
            Verdict::DivergentWithin { .. } => "divergent_within",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentClassification {
    pub r: EvenOrder,
    pub verdict: Verdict,
    pub critical_a: f64,
}

pub fn classify_moment(r: EvenOrder, a_lo: f64, a_hi: f64) -> Result<MomentClassification> {
    if !(0.0 <= a_lo && a_lo <= a_hi && a_hi <= 2.0) {
        return domain(format!("need 0 <= a_lo <= a_hi <= 2, got [{a_lo}, {a_hi}]"));
    }
    verdict_on(r, a_lo, a_hi)
}

fn verdict_on(r: EvenOrder, a_lo: f64, a_hi: f64) -> Result<MomentClassification> {
    let critical = critical_a(r);
    let verdict = if f_r_closed(a_hi, r)? < 1.0 {
        Verdict::Bounded
    } else if f_r_closed(a_lo, r)? > 1.0 {
        Verdict::Divergent
    } else {
        Verdict::DivergentWithin { crossing: critical }
    };
    Ok(MomentClassification {
        r,
        verdict,
        critical_a: critical,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryRow {
    pub r: u32,
    pub critical_a: f64,
    /// `f_r` at each grid point.
    pub f_values: Vec<f64>,
    /// Classification over `[min grid, max grid]`.
    pub verdict: Verdict,
}

/// One row per even `r <= r_max`. Grid points may exceed 2 (e.g. to probe
/// `a_2 = 3`).
pub fn theory_table(r_max: u32, a_grid: &[f64]) -> Result<Vec<TheoryRow>> {
    if a_grid.is_empty() {
        return domain("a grid must not be empty");
    }
    for &a in a_grid {
        check_a(a)?;
    }
    let lo = a_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = a_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    EvenOrder::up_to(r_max)?
        .into_iter()
        .map(|r| {
            let f_values = a_grid.iter().map(|&a| f_r_closed(a, r)).collect::<Result<_>>()?;
            Ok(TheoryRow {
                r: r.get(),
                critical_a: critical_a(r),
                f_values,
                verdict: verdict_on(r, lo, hi)?.verdict,
            })
        })
        .collect()
}

/// Odd central moments vanish: the law is symmetric about the mutation center.
pub fn odd_central_moment(r: u32) -> Result<f64> {
    if r.is_multiple_of(2) {
        return domain(format!("order must be odd, got {r}"));
    }
    Ok(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: u32) -> EvenOrder {
        EvenOrder::new(n).unwrap()
    }

    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }

    /// Exact rational evaluation of the double sum, reduced at every step.
    fn doublesum_exact(order: u32) -> (u128, u128) {
        let choose = |n: u32, k: u32| -> u128 {
            (1..=k).fold(1u128, |acc, i| acc * u128::from(n + 1 - i) / u128::from(i))
        };
        let (mut num, mut den) = (0u128, 1u128);
        for p in 0..=order / 2 {
            for q in 0..=(order / 2 - p) {
                let tn = choose(order, 2 * p) * choose(order - 2 * p, 2 * q);
                let td = u128::from((2 * p + 1) * (2 * q + 1) * (order - 2 * p - 2 * q + 1));
                num = num * td + tn * den;
                den *= td;
                let g = gcd(num, den);
                num /= g;
                den /= g;
            }
        }
        (num, den)
    }

    #[test]
    fn order_validation() {
        assert!(EvenOrder::new(0).is_err());
        assert!(EvenOrder::new(3).is_err());
        assert!(EvenOrder::new(66).is_err());
        assert_eq!(EvenOrder::up_to(6).unwrap(), vec![r(2), r(4), r(6)]);
        assert!(EvenOrder::try_from(7u32).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(64, 32), 1_832_624_140_942_590_534);
        assert_eq!(binomial(5, 0), 1);
    }

    #[test]
    fn doublesum_examples() {
        assert!((f_r_doublesum(3.0, r(2)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(f_r_doublesum(0.0, r(12)).unwrap(), 0.0);
        // exact enumeration gives 13/5 for r = 4, then scaled by 1/81
        let (num, den) = doublesum_exact(4);
        assert_eq!((num, den), (13, 5));
        let want = num as f64 / den as f64 / 81.0;
        assert!((f_r_doublesum(1.0, r(4)).unwrap() - want).abs() < 1e-15);
        assert!((want - 2184.0 / (81.0 * 840.0)).abs() < 1e-15);
    }

    #[test]
    fn doublesum_matches_exact_enumeration() {
        for order in (2..=20).step_by(2) {
            let (num, den) = doublesum_exact(order);
            let want = num as f64 / den as f64;
            let got = f_r_doublesum(3.0, r(order)).unwrap();
            assert!((got - want).abs() <= 1e-14 * want, "r = {order}");
        }
    }

    #[test]
    fn closed_examples() {
        for a in [0.0, 0.5, 1.9, 2.0, 3.0] {
            let got = f_r_closed(a, r(2)).unwrap();
            assert!((got - a * a / 9.0).abs() <= 1e-15 * got.max(1.0));
        }
        let f8 = f_r_closed(2.0, r(8)).unwrap();
        let want = 256.0 / 6561.0 * (177_144.0 / 3960.0);
        assert!((f8 - want).abs() < 1e-12);
        assert!((f8 - 1.745).abs() < 1e-3);
        assert_eq!(f_r_closed(0.0, r(10)).unwrap(), 0.0);
        assert!(f_r_closed(-1.0, r(2)).is_err());
    }

    #[test]
    fn closed_form_identity() {
        for order in (2..=20).step_by(2) {
            for i in 1..=30 {
                let a = i as f64 / 10.0;
                let s = f_r_doublesum(a, r(order)).unwrap();
                let c = f_r_closed(a, r(order)).unwrap();
                assert!((s - c).abs() <= 1e-12 * c, "r = {order}, a = {a}: {s} vs {c}");
            }
        }
        // stays well conditioned up to the overflow guard
        let s = f_r_doublesum(2.0, r(64)).unwrap();
        let c = f_r_closed(2.0, r(64)).unwrap();
        assert!((s - c).abs() <= 1e-12 * c);
    }

    #[test]
    fn critical_values() {
        assert!((critical_a(r(2)) - 3.0).abs() < 1e-12);
        assert!((critical_a(r(4)) - 2.36).abs() < 0.01);
        assert!((critical_a(r(6)) - 2.05).abs() < 0.01);
        assert!((critical_a(r(8)) - 1.87).abs() < 0.01);
        assert!((critical_a(r(10)) - 1.74).abs() < 0.01);
        for order in (2..=64).step_by(2) {
            let f = f_r_closed(critical_a(r(order)), r(order)).unwrap();
            assert!((f - 1.0).abs() <= 1e-12, "r = {order}: {f}");
        }
    }

    #[test]
    fn critical_sequence_decreases() {
        let values: Vec<f64> = (2..=20).step_by(2).map(|o| critical_a(r(o))).collect();
        assert!(values.windows(2).all(|w| w[0] > w[1]), "{values:?}");
    }

    #[test]
    fn classification() {
        assert_eq!(classify_moment(r(6), 1.9, 2.0).unwrap().verdict, Verdict::Bounded);
        assert_eq!(classify_moment(r(8), 1.9, 2.0).unwrap().verdict, Verdict::Divergent);
        assert_eq!(classify_moment(r(2), 0.0, 2.0).unwrap().verdict, Verdict::Bounded);
        let mixed = classify_moment(r(8), 1.0, 2.0).unwrap();
        match mixed.verdict {
            Verdict::DivergentWithin { crossing } => assert!((crossing - 1.87).abs() < 0.01),
            other => panic!("expected a crossing, got {other:?}"),
        }
        assert!(classify_moment(r(4), 1.5, 1.0).is_err());
        assert!(classify_moment(r(4), 0.0, 2.5).is_err());
    }

    #[test]
    fn odd_moments_vanish() {
        for o in [1, 3, 7] {
            assert_eq!(odd_central_moment(o).unwrap(), 0.0);
        }
        assert!(odd_central_moment(4).is_err());
    }

    #[test]
    fn divergence_regions_nest() {
        // {a : f_r(a) >= 1} = [a_r, inf), so nesting is a_r decreasing; check
        // pointwise on a grid too
        for i in 0..=300 {
            let a = i as f64 / 100.0;
            for o in (2..=18).step_by(2) {
                let lower = f_r_closed(a, r(o)).unwrap() >= 1.0;
                let higher = f_r_closed(a, r(o + 2)).unwrap() >= 1.0;
                assert!(!lower || higher, "a = {a}, r = {o}");
            }
        }
    }

    #[test]
    fn theory_table_shape() {
        let rows = theory_table(20, &[1.9, 2.0]).unwrap();
        assert_eq!(rows.len(), 10);
        assert_eq!(rows[0].r, 2);
        assert!((rows[0].critical_a - 3.0).abs() < 1e-12);
        assert_eq!(rows[2].verdict, Verdict::Bounded);
        assert_eq!(rows[3].verdict, Verdict::Divergent);
        assert_eq!(theory_table(2, &[1.9, 2.0]).unwrap().len(), 1);
        assert!(theory_table(3, &[1.0]).is_err());
        let probe = theory_table(2, &[3.0]).unwrap();
        assert!((probe[0].f_values[0] - 1.0).abs() < 1e-9);
    }
}
