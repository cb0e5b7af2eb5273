//! Monte-Carlo sliced Wasserstein estimator and its Gaussian-smoothed,
//! differentially private variant.
//!
//! With directions `u_1..u_k` drawn uniformly on the sphere,
//!
//! ```text
//! SWD_q^q ≈ (1/k) Σ_j W_q^q(⟨X_s, u_j⟩, ⟨X_t, u_j⟩)
//! ```
//!
//! The private variant releases `X U + V` with `V_ij ~ N(0, σ²)` and runs the
//! same estimator on the noised projections. Private data only reaches this
//! module through [`PrivateSource::release`], which returns noised
//! projections and nothing else.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::exec::{Executor, Sequential};
use crate::matrix::{dot, Matrix};
use crate::measures::EmpiricalMeasure;
use crate::randomness::{gaussian_vector, sample_sphere_with, ProjectionMatrix, Seed, StreamTag};
use crate::wasserstein1d::{argsort, check_order, SortedProfile};
use crate::{Error, Result};

/// Slack allowed on the `‖x_i‖ ≤ 1/2` normalization check.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Which side of the comparison receives Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseSides {
    /// Independent noise on both projected samples.
    #[default]
    Both,
    /// Noise on the private (target) sample only.
    TargetOnly,
}

/// Parameters of one sliced-distance evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwdConfig {
    /// Number of random directions.
    pub k: usize,
    /// Ground cost exponent, `q ≥ 1`.
    pub q: f64,
    pub seed: Seed,
    /// Noise standard deviation; 0 gives the plain estimator.
    pub sigma: f64,
    pub noise_sides: NoiseSides,
}

impl SwdConfig {
    pub fn new(k: usize, q: f64, seed: Seed) -> Self {
        SwdConfig {
            k,
            q,
            seed,
            sigma: 0.0,
            noise_sides: NoiseSides::Both,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_sides(mut self, sides: NoiseSides) -> Self {
        self.noise_sides = sides;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k", "need at least one projection"));
        }
        check_order(self.q)?;
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be >= 0, got {}", self.sigma)));
        }
        Ok(())
    }

    fn source_noise(&self) -> Option<NoiseSpec> {
        (self.sigma > 0.0 && self.noise_sides == NoiseSides::Both).then_some(NoiseSpec {
            sigma: self.sigma,
            seed: self.seed,
            tag: StreamTag::NOISE_SOURCE,
        })
    }

    fn target_noise(&self) -> NoiseSpec {
        NoiseSpec {
            sigma: self.sigma,
            seed: self.seed,
            tag: StreamTag::NOISE_TARGET,
        }
    }
}

/// Estimated `SWD_q^q` (or its smoothed version) with the per-direction terms.
#[derive(Debug, Clone, PartialEq)]
pub struct SwdResult {
    /// Mean of `per_projection`.
    pub value: f64,
    /// `W_q^q` of the projected samples, one entry per direction.
    pub per_projection: Vec<f64>,
    pub config: SwdConfig,
}

impl SwdResult {
    fn from_terms(per_projection: Vec<f64>, config: SwdConfig) -> Self {
        // index-order sum keeps the value independent of the executor
        let value = per_projection.iter().sum::<f64>() / per_projection.len() as f64;
        SwdResult {
            value,
            per_projection,
            config,
        }
    }

    /// `value^(1/q)`, the distance itself rather than its q-th power.
    pub fn distance(&self) -> f64 {
        libm::pow(self.value, 1.0 / self.config.q)
    }
}

/// Gaussian noise added to released projections. Noise for direction `j`
/// comes from substream `(seed, tag, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: Seed,
    pub tag: StreamTag,
}

/// Projections `⟨x_i, u_j⟩ (+ v_ij)` of a sample, stored per direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSample {
    n: usize,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl ProjectedSample {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of directions.
    pub fn count(&self) -> usize {
        self.values.len() / self.n
    }

    /// The `n` projected values along direction `j`.
    pub fn along(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Projects `measure` (optionally restricted to `rows`) on every direction of
/// `dirs`, adding noise when `noise` is given.
pub fn project_with<E: Executor>(
    exec: &E,
    measure: &EmpiricalMeasure,
    dirs: &ProjectionMatrix,
    rows: Option<&[usize]>,
    noise: Option<NoiseSpec>,
) -> Result<ProjectedSample> {
    if measure.dim() != dirs.dim() {
        return Err(Error::DimensionMismatch {
            expected: dirs.dim(),
            found: measure.dim(),
        });
    }
    let selected;
    let measure = match rows {
        Some(r) => {
            selected = measure.select_rows(r)?;
            &selected
        }
        None => measure,
    };
    let n = measure.len();
    let points = measure.points();
    let cols = exec.map_indexed(dirs.count(), |j| {
        let u = dirs.column(j);
        let mut proj: Vec<f64> = points.iter_rows().map(|x| dot(x, u)).collect();
        if let Some(spec) = noise {
            let v = gaussian_vector(n, spec.sigma, spec.seed, spec.tag, j as u64);
            proj.iter_mut().zip(v).for_each(|(p, v)| *p += v);
        }
        proj
    });
    Ok(ProjectedSample {
        n,
        values: cols.concat(),
        weights: measure.weights().to_vec(),
    })
}

/// A dataset that may only be observed through noised projections.
pub trait PrivateSource {
    /// Number of records.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dim(&self) -> usize;

    /// Releases `X U + V` for the selected rows (all rows when `rows` is
    /// `None`).
    fn release<E: Executor>(
        &self,
        exec: &E,
        dirs: &ProjectionMatrix,
        rows: Option<&[usize]>,
        noise: NoiseSpec,
    ) -> Result<ProjectedSample>;
}

/// Private measure whose raw coordinates never leave the wrapper.
///
/// Releases with `σ > 0` require every row norm to be at most `1/2`, which
/// bounds the distance between neighbouring records by 1. A `σ = 0` release
/// is the non-private baseline and skips the check.
#[derive(Debug, Clone)]
pub struct PrivateMeasure {
    inner: EmpiricalMeasure,
    max_norm: f64,
}

impl PrivateMeasure {
    pub fn new(measure: EmpiricalMeasure) -> Self {
        let max_norm = measure.max_row_norm();
        PrivateMeasure {
            inner: measure,
            max_norm,
        }
    }

    /// Wraps `measure`, failing unless it is normalized for privacy.
    pub fn normalized(measure: EmpiricalMeasure) -> Result<Self> {
        let pm = Self::new(measure);
        pm.check_normalized()?;
        Ok(pm)
    }

    pub fn is_normalized(&self) -> bool {
        self.max_norm <= 0.5 + NORMALIZATION_TOL
    }

    fn check_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized {
                max_norm: self.max_norm,
            })
        }
    }
}

impl PrivateSource for PrivateMeasure {
    fn len(&self) -> usize {
        self.inner.len()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn release<E: Executor>(
        &self,
        exec: &E,
        dirs: &ProjectionMatrix,
        rows: Option<&[usize]>,
        noise: NoiseSpec,
    ) -> Result<ProjectedSample> {
        if noise.sigma > 0.0 {
            self.check_normalized()?;
        }
        project_with(exec, &self.inner, dirs, rows, Some(noise))
    }
}

/// A public sample viewed through the release interface (no precondition).
struct PublicSample<'a>(&'a EmpiricalMeasure);

impl PrivateSource for PublicSample<'_> {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn release<E: Executor>(
        &self,
        exec: &E,
        dirs: &ProjectionMatrix,
        rows: Option<&[usize]>,
        noise: NoiseSpec,
    ) -> Result<ProjectedSample> {
        project_with(exec, self.0, dirs, rows, Some(noise))
    }
}

/// Per-direction `W_q^q` between two projected samples.
pub fn sliced_terms<E: Executor>(
    exec: &E,
    a: &ProjectedSample,
    b: &ProjectedSample,
    q: f64,
) -> Result<Vec<f64>> {
    check_order(q)?;
    if a.count() != b.count() {
        return Err(Error::DimensionMismatch {
            expected: a.count(),
            found: b.count(),
        });
    }
    let terms = exec.map_indexed(a.count(), |j| {
        let pa = SortedProfile::new(a.along(j), a.weights())?;
        let pb = SortedProfile::new(b.along(j), b.weights())?;
        Ok(pa.distance_pow(&pb, q))
    });
    terms.into_iter().collect()
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

/// Monte-Carlo `SWD_q^q` between `a` and `b`. `cfg.sigma` must be 0.
pub fn swd(a: &EmpiricalMeasure, b: &EmpiricalMeasure, cfg: &SwdConfig) -> Result<SwdResult> {
    swd_with(&Sequential, a, b, cfg)
}

pub fn swd_with<E: Executor>(
    exec: &E,
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    cfg: &SwdConfig,
) -> Result<SwdResult> {
    cfg.validate()?;
    if cfg.sigma != 0.0 {
        return Err(Error::invalid(
            "sigma",
            "plain SWD takes sigma = 0; use smoothed_swd or dp_swd for noise",
        ));
    }
    smoothed_swd_with(exec, a, b, cfg)
}

/// Sliced distance between Gaussian-smoothed projections, without any
/// privacy precondition on the inputs. Reduces to [`swd`] at `σ = 0`.
pub fn smoothed_swd_with<E: Executor>(
    exec: &E,
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    cfg: &SwdConfig,
) -> Result<SwdResult> {
    cfg.validate()?;
    check_dims(a.dim(), b.dim())?;
    let dirs = sample_sphere_with(exec, a.dim(), cfg.k, cfg.seed)?;
    let target_noise = (cfg.sigma > 0.0).then(|| cfg.target_noise());
    let pa = project_with(exec, a, &dirs, None, cfg.source_noise())?;
    let pb = project_with(exec, b, &dirs, None, target_noise)?;
    Ok(SwdResult::from_terms(sliced_terms(exec, &pa, &pb, cfg.q)?, *cfg))
}

pub fn smoothed_swd(a: &EmpiricalMeasure, b: &EmpiricalMeasure, cfg: &SwdConfig) -> Result<SwdResult> {
    smoothed_swd_with(&Sequential, a, b, cfg)
}

/// Differentially private sliced distance between a public sample and a
/// private one.
///
/// The private side must be normalized (row norms ≤ 1/2) and `σ > 0`.
pub fn dp_swd(
    a_public: &EmpiricalMeasure,
    b_private: &EmpiricalMeasure,
    cfg: &SwdConfig,
) -> Result<SwdResult> {
    let private = PrivateMeasure::normalized(b_private.clone())?;
    dp_swd_with(&Sequential, a_public, &private, cfg)
}

pub fn dp_swd_with<E: Executor, P: PrivateSource>(
    exec: &E,
    a_public: &EmpiricalMeasure,
    b_private: &P,
    cfg: &SwdConfig,
) -> Result<SwdResult> {
    cfg.validate()?;
    if cfg.sigma <= 0.0 {
        return Err(Error::invalid("sigma", "private distance needs sigma > 0"));
    }
    check_dims(a_public.dim(), b_private.dim())?;
    let dirs = sample_sphere_with(exec, a_public.dim(), cfg.k, cfg.seed)?;
    // the private side is consumed here; only its noised projections go on
    let pb = b_private.release(exec, &dirs, None, cfg.target_noise())?;
    let pa = project_with(exec, a_public, &dirs, None, cfg.source_noise())?;
    Ok(SwdResult::from_terms(sliced_terms(exec, &pa, &pb, cfg.q)?, *cfg))
}

/// Directions handled per gradient work item. Fixed so that the reduction
/// order does not depend on the number of threads.
const GRADIENT_CHUNK: usize = 16;

/// Value and source-gradient of the fixed-direction `SWD_2^2` estimator.
#[derive(Debug, Clone)]
pub struct SwdGradient {
    pub result: SwdResult,
    /// `∂ SWD_2^2 / ∂ x_i`, one row per source point.
    pub gradient: Matrix,
}

/// Gradient of the `q = 2` estimator with respect to the source support,
/// against already released target projections.
///
/// For a fixed direction set and noise realization,
/// `∂/∂x_i = (2/(k n)) Σ_j u_j (⟨x_i, u_j⟩ + v_ij − t_{j, π_j(i)})` where
/// `π_j` is the sorted matching along direction `j`. At ties the stable-sort
/// matching picks the subgradient.
pub fn gradient_from_release<E: Executor>(
    exec: &E,
    source: &EmpiricalMeasure,
    dirs: &ProjectionMatrix,
    source_noise: Option<NoiseSpec>,
    target: &ProjectedSample,
    cfg: &SwdConfig,
) -> Result<SwdGradient> {
    if cfg.q != 2.0 {
        return Err(Error::invalid("q", "the gradient is implemented for q = 2"));
    }
    let n = source.len();
    if !source.is_uniform() {
        return Err(Error::invalid("weights", "gradient needs uniform weights"));
    }
    if n != target.len() {
        return Err(Error::UnequalCounts {
            left: n,
            right: target.len(),
        });
    }
    check_dims(source.dim(), dirs.dim())?;
    let d = source.dim();
    let k = dirs.count();
    let ps = project_with(exec, source, dirs, None, source_noise)?;
    let chunks = k.div_ceil(GRADIENT_CHUNK);
    let parts = exec.map_indexed(chunks, |c| {
        let mut grad = vec![0.0; n * d];
        let mut terms = Vec::with_capacity(GRADIENT_CHUNK);
        let scale = 2.0 / (k as f64 * n as f64);
        for j in c * GRADIENT_CHUNK..((c + 1) * GRADIENT_CHUNK).min(k) {
            let s = ps.along(j);
            let t = target.along(j);
            let u = dirs.column(j);
            let mut cost = 0.0;
            for (i, r) in argsort(s).into_iter().zip(argsort(t)) {
                let diff = s[i] - t[r];
                cost += diff * diff;
                let g = &mut grad[i * d..(i + 1) * d];
                for (gi, ui) in g.iter_mut().zip(u) {
                    *gi += scale * diff * ui;
                }
            }
            terms.push(cost / n as f64);
        }
        (terms, grad)
    });
    let mut gradient = vec![0.0; n * d];
    let mut per_projection = Vec::with_capacity(k);
    for (terms, grad) in parts {
        per_projection.extend(terms);
        gradient.iter_mut().zip(grad).for_each(|(acc, g)| *acc += g);
    }
    Ok(SwdGradient {
        result: SwdResult::from_terms(per_projection, *cfg),
        gradient: Matrix::from_row_major(n, d, gradient)?,
    })
}

/// Value and gradient of the (optionally private) estimator for a source
/// sample against a private target. Directions and noise are drawn from
/// `cfg.seed`, so value and gradient refer to the same realization.
pub fn value_and_gradient_with<E: Executor, P: PrivateSource>(
    exec: &E,
    source: &EmpiricalMeasure,
    target: &P,
    target_rows: Option<&[usize]>,
    cfg: &SwdConfig,
) -> Result<SwdGradient> {
    cfg.validate()?;
    check_dims(source.dim(), target.dim())?;
    let dirs = sample_sphere_with(exec, source.dim(), cfg.k, cfg.seed)?;
    let released = target.release(exec, &dirs, target_rows, cfg.target_noise())?;
    gradient_from_release(exec, source, &dirs, cfg.source_noise(), &released, cfg)
}

/// `∂ SWD_2^2(a, b) / ∂ a` for the estimator fixed by `cfg` (smoothed when
/// `cfg.sigma > 0`, without any privacy precondition on `b`).
pub fn swd_gradient_source(
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    cfg: &SwdConfig,
) -> Result<Matrix> {
    Ok(value_and_gradient_with(&Sequential, a, &PublicSample(b), None, cfg)?.gradient)
}
