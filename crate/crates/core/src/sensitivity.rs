//! High-probability bounds on the squared sensitivity of random projections.
//!
//! For neighbouring datasets whose differing rows satisfy `‖z‖₂ ≤ 1`,
//! `H = ‖zᵀU‖² = Σ_j (zᵀu_j)²` is a sum of `k` i.i.d. `Beta(1/2, (d−1)/2)`
//! variables when `z` is a unit vector. Two upper quantile bounds on `H` are
//! provided: a rigorous one from Bernstein's inequality and a tighter
//! normal approximation that is only asymptotically valid.

use alloc::format;
use alloc::vec::Vec;

use crate::exec::{Executor, Sequential};
use crate::randomness::{inverse_normal_cdf, sample_direction, Seed, StreamTag};
use crate::{Error, Result};

/// Mean and variance of `Y = (zᵀu)²` for a uniform direction `u ∈ S^{d−1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaMoments {
    /// `1/d`
    pub mean: f64,
    /// `v_d = 2(d−1) / (d²(d+2))`
    pub variance: f64,
}

pub fn beta_moments(d: usize) -> Result<BetaMoments> {
    if d < 2 {
        return Err(Error::invalid("d", format!("need d >= 2, got {d}")));
    }
    let d = d as f64;
    Ok(BetaMoments {
        mean: 1.0 / d,
        variance: 2.0 * (d - 1.0) / (d * d * (d + 2.0)),
    })
}

/// How a [`SensitivityBound`] was derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    /// Bernstein inequality; holds with probability at least `1 − δ`.
    Bernstein,
    /// Central-limit approximation; tighter but not a guarantee.
    Clt,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Bernstein => "bernstein",
            BoundKind::Clt => "clt",
        }
    }
}

impl core::str::FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernstein" => Ok(BoundKind::Bernstein),
            "clt" => Ok(BoundKind::Clt),
            other => Err(Error::invalid("bound", format!("unknown bound `{other}`"))),
        }
    }
}

/// `w(k, δ)`: with probability `1 − δ` over the directions,
/// `‖XU − X′U‖_F² ≤ w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityBound {
    pub w: f64,
    pub kind: BoundKind,
    pub k: usize,
    pub d: usize,
    pub delta: f64,
}

impl SensitivityBound {
    /// True for the CLT bound, which is an approximation.
    pub fn is_approximate(&self) -> bool {
        self.kind == BoundKind::Clt
    }

    /// The CLT bound is only trusted for `k > 30`.
    pub fn small_k_warning(&self) -> Option<&'static str> {
        (self.kind == BoundKind::Clt && self.k <= 30)
            .then_some("CLT bound used with k <= 30; the normal approximation is unreliable")
    }
}

fn check_bound_args(k: usize, d: usize, delta: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k", "need at least one projection"));
    }
    if d < 2 {
        return Err(Error::invalid("d", format!("need d >= 2, got {d}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `k/d + (2/3) ln(1/δ) + (2/d) √(k (d−1)/(d+2) ln(1/δ))`.
pub fn bernstein_bound(k: usize, d: usize, delta: f64) -> Result<SensitivityBound> {
    check_bound_args(k, d, delta)?;
    let (kf, df) = (k as f64, d as f64);
    let log_inv = -libm::log(delta);
    let w = kf / df
        + 2.0 / 3.0 * log_inv
        + 2.0 / df * libm::sqrt(kf * (df - 1.0) / (df + 2.0) * log_inv);
    Ok(SensitivityBound {
        w,
        kind: BoundKind::Bernstein,
        k,
        d,
        delta,
    })
}

/// `k/d + (z_{1−δ}/d) √(2k(d−1)/(d+2))`.
pub fn clt_bound(k: usize, d: usize, delta: f64) -> Result<SensitivityBound> {
    check_bound_args(k, d, delta)?;
    let (kf, df) = (k as f64, d as f64);
    let z = inverse_normal_cdf(1.0 - delta)?;
    let w = kf / df + z / df * libm::sqrt(2.0 * kf * (df - 1.0) / (df + 2.0));
    Ok(SensitivityBound {
        w,
        kind: BoundKind::Clt,
        k,
        d,
        delta,
    })
}

pub fn bound(kind: BoundKind, k: usize, d: usize, delta: f64) -> Result<SensitivityBound> {
    match kind {
        BoundKind::Bernstein => bernstein_bound(k, d, delta),
        BoundKind::Clt => clt_bound(k, d, delta),
    }
}

/// `trials` independent draws of `H = Σ_{j≤k} (e₁ᵀu_j)²`.
///
/// By rotation invariance any fixed unit `z` gives the same law, so the
/// first basis vector is used.
pub fn simulate_sensitivity(d: usize, k: usize, trials: usize, seed: Seed) -> Result<Vec<f64>> {
    simulate_sensitivity_with(&Sequential, d, k, trials, seed)
}

pub fn simulate_sensitivity_with<E: Executor>(
    exec: &E,
    d: usize,
    k: usize,
    trials: usize,
    seed: Seed,
) -> Result<Vec<f64>> {
    if d == 0 || k == 0 || trials == 0 {
        return Err(Error::invalid("simulate", "d, k and trials must be positive"));
    }
    Ok(exec.map_indexed(trials, |t| {
        let mut rng = seed.substream(StreamTag::SENSITIVITY, t as u64);
        (0..k)
            .map(|_| {
                let u = sample_direction(d, &mut rng);
                u[0] * u[0]
            })
            .sum()
    }))
}

/// Summary statistics of simulated sensitivities.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub mean: f64,
    pub std: f64,
    sorted: Vec<f64>,
}

impl SampleSummary {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("sample"));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(SampleSummary {
            mean,
            std: libm::sqrt(var),
            sorted,
        })
    }

    /// Empirical `p`-quantile: the smallest sample `x` with `F̂(x) ≥ p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let rank = libm::ceil(p * n as f64) as usize;
        self.sorted[rank.clamp(1, n) - 1]
    }

    /// Fraction of samples strictly above `threshold`.
    pub fn exceedance(&self, threshold: f64) -> f64 {
        let above = self.sorted.len() - self.sorted.partition_point(|&x| x <= threshold);
        above as f64 / self.sorted.len() as f64
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}
