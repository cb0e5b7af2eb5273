//! Random directions, Gaussian noise and the inverse normal CDF.
//!
//! All randomness is drawn from ChaCha8 substreams addressed by
//! `(master seed, tag, index)`. The stream consumed for projection `j` only
//! depends on those three values, so results do not depend on evaluation
//! order or on how work is split across threads.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::exec::{Executor, Sequential};
use crate::matrix::{norm, Matrix};
use crate::{Error, Result};

/// Master seed of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Seed(pub u64);

/// Domain separation tag for a family of substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamTag(pub u64);

impl StreamTag {
    pub const DIRECTIONS: StreamTag = StreamTag(0x6469_7265_6374_696f);
    pub const GAUSSIAN: StreamTag = StreamTag(0x6761_7573_7369_616e);
    pub const NOISE_SOURCE: StreamTag = StreamTag(0x6e6f_6973_6573_7263);
    pub const NOISE_TARGET: StreamTag = StreamTag(0x6e6f_6973_6574_6774);
    pub const SENSITIVITY: StreamTag = StreamTag(0x7365_6e73_6974_7679);
    pub const BATCH: StreamTag = StreamTag(0x6261_7463_6865_7321);
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Seed {
    /// Generator for item `index` of the family `tag`.
    pub fn substream(self, tag: StreamTag, index: u64) -> ChaCha8Rng {
        let key = splitmix64(self.0 ^ splitmix64(tag.0));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(index);
        rng
    }

    /// Seed for a derived experiment, e.g. one optimizer step or one repeat.
    pub fn child(self, index: u64) -> Seed {
        Seed(splitmix64(self.0.wrapping_add(splitmix64(index ^ 0x5eed))))
    }
}

impl FromStr for Seed {
    type Err = core::num::ParseIntError;

    /// Accepts decimal or `0x`-prefixed hexadecimal.
    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        let s = s.trim();
        match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            Some(hex) => u64::from_str_radix(hex, 16).map(Seed),
            None => s.parse().map(Seed),
        }
    }
}

/// `d × k` matrix whose columns are unit directions `u_1..u_k`.
///
/// Columns are stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    dim: usize,
    columns: Vec<f64>,
}

impl ProjectionMatrix {
    /// Wraps explicit columns, normalizing each to unit length.
    pub fn from_columns<C: AsRef<[f64]>>(dim: usize, columns: &[C]) -> Result<Self> {
        if dim == 0 || columns.is_empty() {
            return Err(Error::Empty("projection matrix"));
        }
        let mut data = Vec::with_capacity(dim * columns.len());
        for c in columns {
            let c = c.as_ref();
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.len(),
                });
            }
            let r = norm(c);
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid("direction", "zero or non-finite column"));
            }
            data.extend(c.iter().map(|v| v / r));
        }
        Ok(ProjectionMatrix {
            dim,
            columns: data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of directions `k`.
    pub fn count(&self) -> usize {
        self.columns.len() / self.dim
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.dim..(j + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.columns.chunks_exact(self.dim)
    }
}

/// One uniform draw from `S^{d-1}`: a normalized standard Gaussian vector.
pub fn sample_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut u = Vec::with_capacity(dim);
    loop {
        u.clear();
        u.extend((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let r = norm(&u);
        // r == 0 has probability zero but would poison everything downstream
        if r > 0.0 {
            u.iter_mut().for_each(|v| *v /= r);
            return u;
        }
    }
}

/// Direction `j` of the projection set seeded by `seed`.
pub fn direction(dim: usize, seed: Seed, j: usize) -> Vec<f64> {
    sample_direction(dim, &mut seed.substream(StreamTag::DIRECTIONS, j as u64))
}

/// `k` independent uniform directions in `R^d`.
pub fn sample_sphere(dim: usize, k: usize, seed: Seed) -> Result<ProjectionMatrix> {
    sample_sphere_with(&Sequential, dim, k, seed)
}

pub fn sample_sphere_with<E: Executor>(
    exec: &E,
    dim: usize,
    k: usize,
    seed: Seed,
) -> Result<ProjectionMatrix> {
    if dim == 0 {
        return Err(Error::invalid("d", "dimension must be at least 1"));
    }
    if k == 0 {
        return Err(Error::invalid("k", "need at least one projection"));
    }
    let cols = exec.map_indexed(k, |j| direction(dim, seed, j));
    Ok(ProjectionMatrix {
        dim,
        columns: cols.concat(),
    })
}

/// `n` i.i.d. `N(0, σ²)` values from substream `(seed, tag, index)`.
pub fn gaussian_vector(n: usize, sigma: f64, seed: Seed, tag: StreamTag, index: u64) -> Vec<f64> {
    if sigma == 0.0 {
        return alloc::vec![0.0; n];
    }
    let mut rng = seed.substream(tag, index);
    (0..n)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// `n × k` matrix of i.i.d. `N(0, σ²)` entries. Column `j` comes from its
/// own substream.
pub fn sample_gaussian_matrix(n: usize, k: usize, sigma: f64, seed: Seed) -> Result<Matrix> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", alloc::format!("must be >= 0, got {sigma}")));
    }
    let mut m = Matrix::zeros(n, k);
    for j in 0..k {
        let col = gaussian_vector(n, sigma, seed, StreamTag::GAUSSIAN, j as u64);
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// `Φ⁻¹(p)` for `p ∈ (0, 1)`.
///
/// Rational approximation (Acklam) followed by one Halley step on
/// `erfc`. `|Φ(x) - p| ≤ 1e-9` on `[1e-12, 1 - 1e-12]`; in practice the
/// refined value is accurate to a few ulps.
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", alloc::format!("must lie in (0, 1), got {p}")));
    }
    if p > 0.5 {
        // 1 - p is exact here, and the lower tail keeps the refinement accurate
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    let e = normal_cdf(x) - p;
    let u = e * libm::sqrt(2.0 * PI) * libm::exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_directions_are_signs() {
        let u = sample_sphere(1, 3, Seed(7)).unwrap();
        assert_eq!(u.count(), 3);
        for c in u.iter() {
            assert_eq!(c[0].abs(), 1.0);
        }
    }

    #[test]
    fn columns_have_unit_norm() {
        let u = sample_sphere(17, 200, Seed(1)).unwrap();
        for c in u.iter() {
            assert!((norm(c) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_mean_is_centered() {
        let (d, k) = (5usize, 10_000usize);
        let u = sample_sphere(d, k, Seed(42)).unwrap();
        // each coordinate has variance 1/d, so the mean has sd 1/sqrt(k d)
        let tol = 4.0 / libm::sqrt((k * d) as f64);
        for i in 0..d {
            let mean = u.iter().map(|c| c[i]).sum::<f64>() / k as f64;
            assert!(mean.abs() < tol, "coordinate {i}: {mean}");
        }
    }

    #[test]
    fn zero_sizes_rejected() {
        assert!(sample_sphere(0, 3, Seed(0)).is_err());
        assert!(sample_sphere(3, 0, Seed(0)).is_err());
    }

    #[test]
    fn substreams_are_order_free() {
        let all = sample_sphere(4, 10, Seed(3)).unwrap();
        assert_eq!(all.column(7), direction(4, Seed(3), 7).as_slice());
        let other = sample_sphere(4, 10, Seed(4)).unwrap();
        assert_ne!(all, other);
    }

    #[test]
    fn gaussian_matrix_zero_sigma() {
        let m = sample_gaussian_matrix(4, 3, 0.0, Seed(1)).unwrap();
        assert!(m.as_slice().iter().all(|&v| v == 0.0));
        assert!(sample_gaussian_matrix(4, 3, -1.0, Seed(1)).is_err());
    }

    #[test]
    fn gaussian_matrix_is_deterministic() {
        let a = sample_gaussian_matrix(10, 5, 2.0, Seed(99)).unwrap();
        let b = sample_gaussian_matrix(10, 5, 2.0, Seed(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_matrix_variance() {
        let m = sample_gaussian_matrix(1000, 1000, 3.0, Seed(5)).unwrap();
        let n = m.as_slice().len() as f64;
        let mean = m.as_slice().iter().sum::<f64>() / n;
        let var = m.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / 9.0 - 1.0).abs() < 0.03, "variance {var}");
    }

    #[test]
    fn seed_parsing() {
        assert_eq!("42".parse::<Seed>().unwrap(), Seed(42));
        assert_eq!("0xff".parse::<Seed>().unwrap(), Seed(255));
        assert!("zz".parse::<Seed>().is_err());
    }

    #[test]
    fn inverse_normal_known_values() {
        assert_eq!(inverse_normal_cdf(0.5).unwrap(), 0.0);
        // mpmath: sqrt(2) * erfinv(2p - 1)
        assert!((inverse_normal_cdf(1.0 - 1e-5).unwrap() - 4.264_890_793_922_825).abs() < 1e-4);
        assert!((inverse_normal_cdf(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-4);
        assert!(inverse_normal_cdf(0.0).is_err());
        assert!(inverse_normal_cdf(1.0).is_err());
        assert!(inverse_normal_cdf(f64::NAN).is_err());
    }

    #[test]
    fn inverse_normal_round_trip_and_monotone() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let oracle = Normal::standard();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..10_000 {
            let t = i as f64 / 9_999.0;
            // log-spaced into both tails
            let p = if t < 0.5 {
                libm::pow(10.0, -12.0 + 2.0 * t * (12.0 - libm::log10(2.0)))
            } else {
                1.0 - libm::pow(10.0, -12.0 + 2.0 * (1.0 - t) * (12.0 - libm::log10(2.0)))
            };
            let x = inverse_normal_cdf(p).unwrap();
            assert!((oracle.cdf(x) - p).abs() <= 1e-9, "p={p}");
            assert!(x > prev || p == 0.5, "not increasing at p={p}");
            prev = x;
        }
    }
}
