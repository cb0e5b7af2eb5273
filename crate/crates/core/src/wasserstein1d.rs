//! Exact `W_q^q` between one-dimensional discrete measures.
//!
//! In one dimension the optimal coupling is the monotone one, so
//! `W_q^q(μ, ν) = ∫₀¹ |F_μ⁻¹(z) − F_ν⁻¹(z)|^q dz`. For discrete measures both
//! inverse CDFs are step functions and the integral is a finite sum over the
//! merged breakpoints of the two cumulative weight vectors.

use alloc::vec::Vec;

use crate::measures::EmpiricalMeasure;
use crate::{Error, Result};

/// Sorted support with cumulative weights: the inverse CDF as a step
/// function. `cumweights` is strictly increasing and ends at exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedProfile {
    values: Vec<f64>,
    cumweights: Vec<f64>,
}

impl SortedProfile {
    /// Sorts `values` (stably) and accumulates their weights. Points with
    /// zero weight are dropped. `weights` must already sum to one up to
    /// rounding; the last breakpoint is pinned to 1.
    pub fn new(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("one-dimensional measure"));
        }
        if values.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                found: weights.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        let order = argsort(values);
        let mut out = SortedProfile {
            values: Vec::with_capacity(values.len()),
            cumweights: Vec::with_capacity(values.len()),
        };
        let mut acc = 0.0;
        for i in order {
            let w = weights[i];
            if w < 0.0 {
                return Err(Error::NegativeWeight { index: i, value: w });
            }
            if w == 0.0 {
                continue;
            }
            acc += w;
            out.values.push(values[i]);
            out.cumweights.push(acc);
        }
        match out.cumweights.last_mut() {
            Some(last) => *last = 1.0,
            None => return Err(Error::ZeroMass),
        }
        Ok(out)
    }

    /// Uniform weights `1/n`.
    pub fn uniform(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::Empty("one-dimensional measure"));
        }
        let mut sorted = values.to_vec();
        if let Some(i) = sorted.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        sorted.sort_by(f64::total_cmp);
        let cumweights = (1..=n).map(|i| i as f64 / n as f64).collect();
        Ok(SortedProfile {
            values: sorted,
            cumweights,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cumweights(&self) -> &[f64] {
        &self.cumweights
    }

    /// `F⁻¹(z)` for `z ∈ (0, 1]`.
    pub fn quantile(&self, z: f64) -> f64 {
        let i = self.cumweights.partition_point(|&c| c < z);
        self.values[i.min(self.values.len() - 1)]
    }

    /// `W_q^q(self, other)` by integrating over merged breakpoints.
    pub fn distance_pow(&self, other: &SortedProfile, q: f64) -> f64 {
        let cost = CostPower::new(q);
        let (mut i, mut j) = (0, 0);
        let mut t = 0.0;
        let mut total = 0.0;
        while i < self.values.len() && j < other.values.len() {
            let ca = self.cumweights[i];
            let cb = other.cumweights[j];
            let next = ca.min(cb);
            total += (next - t) * cost.eval(self.values[i] - other.values[j]);
            t = next;
            if ca <= next {
                i += 1;
            }
            if cb <= next {
                j += 1;
            }
        }
        total
    }
}

#[derive(Clone, Copy)]
pub(crate) enum CostPower {
    One,
    Two,
    General(f64),
}

impl CostPower {
    pub(crate) fn new(q: f64) -> Self {
        if q == 1.0 {
            CostPower::One
        } else if q == 2.0 {
            CostPower::Two
        } else {
            CostPower::General(q)
        }
    }

    #[inline]
    pub(crate) fn eval(self, diff: f64) -> f64 {
        match self {
            CostPower::One => diff.abs(),
            CostPower::Two => diff * diff,
            CostPower::General(q) => libm::pow(diff.abs(), q),
        }
    }
}

pub(crate) fn check_order(q: f64) -> Result<()> {
    if q >= 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("q", alloc::format!("order must be >= 1, got {q}")))
    }
}

/// `W_q^q` between `Σ a_w[i] δ_{a[i]}` and `Σ b_w[j] δ_{b[j]}`.
///
/// Returns the q-th power of the distance. Weights must sum to one.
pub fn wasserstein_1d_q(a: &[f64], a_w: &[f64], b: &[f64], b_w: &[f64], q: f64) -> Result<f64> {
    check_order(q)?;
    let pa = SortedProfile::new(a, a_w)?;
    let pb = SortedProfile::new(b, b_w)?;
    Ok(pa.distance_pow(&pb, q))
}

/// `W_q^q` between two uniform empirical measures on the line.
pub fn wasserstein_1d_q_uniform(a: &[f64], b: &[f64], q: f64) -> Result<f64> {
    check_order(q)?;
    Ok(SortedProfile::uniform(a)?.distance_pow(&SortedProfile::uniform(b)?, q))
}

/// `W_q^q` between two one-dimensional [`EmpiricalMeasure`]s.
pub fn wasserstein_1d_q_measures(a: &EmpiricalMeasure, b: &EmpiricalMeasure, q: f64) -> Result<f64> {
    for m in [a, b] {
        if m.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: m.dim(),
            });
        }
    }
    wasserstein_1d_q(
        a.points().as_slice(),
        a.weights(),
        b.points().as_slice(),
        b.weights(),
        q,
    )
}

/// Optimal pairing between two equally sized uniform samples: the `r`-th
/// smallest of `a` is matched to the `r`-th smallest of `b`. Returns index
/// pairs `(i_a, i_b)` in rank order. Ties keep input order.
pub fn sorted_matching_pairs(a: &[f64], b: &[f64]) -> Result<Vec<(usize, usize)>> {
    if a.len() != b.len() {
        return Err(Error::UnequalCounts {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("one-dimensional measure"));
    }
    Ok(argsort(a).into_iter().zip(argsort(b)).collect())
}

/// Stable argsort under `total_cmp`.
pub(crate) fn argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    #[test]
    fn two_diracs() {
        assert_eq!(wasserstein_1d_q(&[0.0], &[1.0], &[3.0], &[1.0], 2.0).unwrap(), 9.0);
    }

    #[test]
    fn shifted_pairs() {
        // LP on the 2x2 cost matrix |x - y|: both couplings cost 1
        let w = wasserstein_1d_q(&[0.0, 2.0], &uniform(2), &[1.0, 3.0], &uniform(2), 1.0).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unequal_counts() {
        // breakpoints 1/3, 1/2, 2/3: segments cost 0, 1/6 * 0.5, 1/6 * 0.5, 0
        let w = wasserstein_1d_q(&[0.0, 1.0], &uniform(2), &[0.0, 0.5, 1.0], &uniform(3), 1.0)
            .unwrap();
        assert!((w - 1.0 / 6.0).abs() < 1e-15, "{w}");
    }

    #[test]
    fn matching_example() {
        let a = [5.0, 1.0];
        let b = [2.0, 7.0];
        let pairs = sorted_matching_pairs(&a, &b).unwrap();
        let values: Vec<(f64, f64)> = pairs.iter().map(|&(i, j)| (a[i], b[j])).collect();
        assert_eq!(values, vec![(1.0, 2.0), (5.0, 7.0)]);
        let cost: f64 = values.iter().map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0;
        assert_eq!(cost, 1.5);
        let w = wasserstein_1d_q_uniform(&a, &b, 1.0).unwrap();
        assert_eq!(w, 1.5);
    }

    #[test]
    fn matching_identity() {
        let a = [0.3, -1.0, 2.0];
        let pairs = sorted_matching_pairs(&a, &a).unwrap();
        assert!(pairs.iter().all(|(i, j)| i == j));
        assert_eq!(wasserstein_1d_q_uniform(&a, &a, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        assert!(wasserstein_1d_q(&[], &[], &[1.0], &[1.0], 1.0).is_err());
        assert!(wasserstein_1d_q(&[0.0], &[1.0], &[1.0], &[1.0], 0.5).is_err());
        assert!(matches!(
            sorted_matching_pairs(&[1.0], &[1.0, 2.0]),
            Err(Error::UnequalCounts { left: 1, right: 2 })
        ));
    }

    #[test]
    fn zero_weights_are_ignored() {
        let w = wasserstein_1d_q(&[0.0, 100.0], &[1.0, 0.0], &[0.0], &[1.0], 1.0).unwrap();
        assert_eq!(w, 0.0);
    }

    #[test]
    fn quantile_steps() {
        let p = SortedProfile::new(&[2.0, 0.0], &[0.25, 0.75]).unwrap();
        assert_eq!(p.quantile(0.5), 0.0);
        assert_eq!(p.quantile(0.75), 0.0);
        assert_eq!(p.quantile(0.8), 2.0);
        assert_eq!(p.quantile(1.0), 2.0);
    }

    fn sample() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..8).prop_flat_map(|n| {
            (
                proptest::collection::vec(-10.0f64..10.0, n),
                proptest::collection::vec(0.01f64..1.0, n),
            )
        })
    }

    fn normalized(w: &[f64]) -> Vec<f64> {
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    }

    proptest! {
        #[test]
        fn symmetric_and_translation_invariant((a, wa) in sample(), (b, wb) in sample(), t in -5.0f64..5.0) {
            let (wa, wb) = (normalized(&wa), normalized(&wb));
            let ab = wasserstein_1d_q(&a, &wa, &b, &wb, 1.0).unwrap();
            let ba = wasserstein_1d_q(&b, &wb, &a, &wa, 1.0).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
            let at: Vec<f64> = a.iter().map(|x| x + t).collect();
            let bt: Vec<f64> = b.iter().map(|x| x + t).collect();
            let shifted = wasserstein_1d_q(&at, &wa, &bt, &wb, 1.0).unwrap();
            prop_assert!((shifted - ab).abs() <= 1e-12 * (1.0 + ab));
        }

        #[test]
        fn scaling((a, wa) in sample(), (b, wb) in sample(), s in -4.0f64..4.0, q in 1.0f64..3.0) {
            let (wa, wb) = (normalized(&wa), normalized(&wb));
            let base = wasserstein_1d_q(&a, &wa, &b, &wb, q).unwrap();
            let sa: Vec<f64> = a.iter().map(|x| x * s).collect();
            let sb: Vec<f64> = b.iter().map(|x| x * s).collect();
            let scaled = wasserstein_1d_q(&sa, &wa, &sb, &wb, q).unwrap();
            let expect = libm::pow(s.abs(), q) * base;
            prop_assert!((scaled - expect).abs() <= 1e-12 * (1.0 + expect));
        }

        #[test]
        fn triangle((a, wa) in sample(), (b, wb) in sample(), (c, wc) in sample(), q in prop::sample::select(vec![1.0, 2.0, 3.0])) {
            let (wa, wb, wc) = (normalized(&wa), normalized(&wb), normalized(&wc));
            let d = |x: &[f64], wx: &[f64], y: &[f64], wy: &[f64]| {
                libm::pow(wasserstein_1d_q(x, wx, y, wy, q).unwrap(), 1.0 / q)
            };
            let slack = d(&a, &wa, &b, &wb) + d(&b, &wb, &c, &wc) - d(&a, &wa, &c, &wc);
            prop_assert!(slack >= -1e-12, "slack {}", slack);
        }
    }
}
