//! Experiment drivers shared by the command line and the test suites.

use dpswd_core::accountant::{
    calibrate_sigma, AccountantConfig, Amplification, PrivacyBudget, Sensitivity,
};
use dpswd_core::randomness::sample_gaussian_matrix;
use dpswd_core::sensitivity::{bound, simulate_sensitivity_with, BoundKind, SampleSummary};
use dpswd_core::sliced::{smoothed_swd_with, swd_with, SwdConfig};
use dpswd_core::{EmpiricalMeasure, Executor, Result, Seed};
use serde::Serialize;

/// Parses `start:stop:step` into the inclusive grid `start + i·step`.
pub fn parse_grid(spec: &str) -> core::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("grid {spec:?} is not start:stop:step"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("grid {spec:?}: {s:?} is not a finite number"))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if step <= 0.0 || stop < start {
        return Err(format!("grid {spec:?}: need step > 0 and stop >= start"));
    }
    let span = (stop - start) / step;
    if span > 1e6 {
        return Err(format!("grid {spec:?} has too many points"));
    }
    // tolerate 1.0 / 0.1 = 9.999999999999998
    let count = (span + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ToyParams {
    pub d: usize,
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    pub grid: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
}

/// Mean and sample standard deviation of both distances at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToyRow {
    pub c: f64,
    pub swd_mean: f64,
    pub swd_std: f64,
    pub dpswd_mean: f64,
    pub dpswd_std: f64,
}

/// `SWD₂²` and its smoothed counterpart between `N(0, I_d)` and `N(c·1, I_d)`.
///
/// Repeat `r` draws both samples, the directions and the noise from
/// `seed.child(r)`; within a repeat the target sample is shifted along the
/// grid, so every grid point sees the same draws.
pub fn toy<E: Executor>(exec: &E, p: &ToyParams) -> Result<Vec<ToyRow>> {
    if p.repeats == 0 || p.grid.is_empty() {
        return Err(dpswd_core::Error::InvalidParameter {
            name: "toy",
            reason: "need at least one repeat and one grid point".into(),
        });
    }
    let mut swd = vec![Vec::with_capacity(p.repeats); p.grid.len()];
    let mut dp = swd.clone();
    for r in 0..p.repeats {
        let rs = Seed(p.seed).child(r as u64);
        let source = EmpiricalMeasure::uniform(sample_gaussian_matrix(p.n, p.d, 1.0, rs.child(0))?)?;
        let base = sample_gaussian_matrix(p.n, p.d, 1.0, rs.child(1))?;
        let cfg = SwdConfig::new(p.k, 2.0, rs.child(2));
        for (g, &c) in p.grid.iter().enumerate() {
            let mut shifted = base.clone();
            shifted.as_mut_slice().iter_mut().for_each(|v| *v += c);
            let target = EmpiricalMeasure::uniform(shifted)?;
            swd[g].push(swd_with(exec, &source, &target, &cfg)?.value);
            dp[g].push(smoothed_swd_with(exec, &source, &target, &cfg.with_sigma(p.sigma))?.value);
        }
    }
    Ok(p
        .grid
        .iter()
        .enumerate()
        .map(|(g, &c)| {
            let (swd_mean, swd_std) = mean_std(&swd[g]);
            let (dpswd_mean, dpswd_std) = mean_std(&dp[g]);
            ToyRow {
                c,
                swd_mean,
                swd_std,
                dpswd_mean,
                dpswd_std,
            }
        })
        .collect())
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivitySummary {
    pub d: usize,
    pub k: usize,
    pub trials: usize,
    pub delta: f64,
    /// `k/d`, the exact mean of `H`.
    pub expected_mean: f64,
    pub empirical_mean: f64,
    pub empirical_std: f64,
    pub quantile_level: f64,
    /// Empirical `(1 − δ)`-quantile of `H`.
    pub empirical_quantile: f64,
    /// `None` when `d < 2`, where the bounds are undefined.
    pub bernstein: Option<f64>,
    pub clt: Option<f64>,
    /// Fraction of samples above each bound.
    pub bernstein_exceedance: Option<f64>,
    pub clt_exceedance: Option<f64>,
    pub warnings: Vec<String>,
}

pub struct SensitivityReport {
    pub samples: Vec<f64>,
    pub summary: SensitivitySummary,
}

/// Monte-Carlo law of the squared sensitivity `H` next to both bounds.
pub fn sensitivity<E: Executor>(
    exec: &E,
    d: usize,
    k: usize,
    trials: usize,
    delta: f64,
    seed: Seed,
) -> Result<SensitivityReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(dpswd_core::Error::InvalidParameter {
            name: "delta",
            reason: format!("must lie in (0, 1), got {delta}"),
        });
    }
    let samples = simulate_sensitivity_with(exec, d, k, trials, seed)?;
    let s = SampleSummary::new(&samples)?;
    let mut warnings = Vec::new();
    let (bernstein, clt) = if d >= 2 {
        let b = bound(BoundKind::Bernstein, k, d, delta)?;
        let c = bound(BoundKind::Clt, k, d, delta)?;
        warnings.extend(c.small_k_warning().map(String::from));
        (Some(b.w), Some(c.w))
    } else {
        warnings.push("bounds need d >= 2".into());
        (None, None)
    };
    let summary = SensitivitySummary {
        d,
        k,
        trials,
        delta,
        expected_mean: k as f64 / d as f64,
        empirical_mean: s.mean,
        empirical_std: s.std,
        quantile_level: 1.0 - delta,
        empirical_quantile: s.quantile(1.0 - delta),
        bernstein,
        clt,
        bernstein_exceedance: bernstein.map(|w| s.exceedance(w)),
        clt_exceedance: clt.map(|w| s.exceedance(w)),
        warnings,
    };
    Ok(SensitivityReport { samples, summary })
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub sigma: f64,
    pub eps_target: f64,
    pub eps_achieved: f64,
    pub delta: f64,
    pub best_order: f64,
    /// Squared sensitivity bound used by the mechanism.
    pub w: f64,
    pub steps: u64,
    pub gamma: f64,
    pub bound_kind: &'static str,
    pub delta_split: f64,
    pub amplification: &'static str,
    pub warnings: Vec<String>,
}

/// Noise level for `epochs` passes over `n` records in batches of `batch`,
/// with `k` projections in dimension `dim`.
#[allow(clippy::too_many_arguments)]
pub fn calibrate(
    eps: f64,
    delta: f64,
    dim: usize,
    k: usize,
    n: u64,
    epochs: u64,
    batch: u64,
    kind: BoundKind,
    amplification: Amplification,
    delta_split: f64,
) -> Result<CalibrationReport> {
    if n == 0 || batch == 0 || batch > n || epochs == 0 {
        return Err(dpswd_core::Error::InvalidParameter {
            name: "schedule",
            reason: format!("need 1 <= batch <= n and epochs >= 1 (n={n}, batch={batch}, epochs={epochs})"),
        });
    }
    let budget = PrivacyBudget::new(eps, delta)
        .with_schedule(n, batch, epochs)
        .with_delta_split(delta_split);
    let sens = Sensitivity::Projection { kind, k, d: dim };
    let cfg = AccountantConfig {
        amplification,
        ..AccountantConfig::default()
    };
    let acc = calibrate_sigma(&budget, &sens, &cfg)?;
    let warnings = bound(kind, k, dim, budget.delta_sensitivity())?
        .small_k_warning()
        .map(String::from)
        .into_iter()
        .collect();
    Ok(CalibrationReport {
        sigma: acc.sigma,
        eps_target: eps,
        eps_achieved: acc.eps,
        delta,
        best_order: acc.best_order,
        w: acc.sensitivity_sq,
        steps: budget.steps,
        gamma: budget.sampling_rate,
        bound_kind: kind.name(),
        delta_split,
        amplification: amplification.name(),
        warnings,
    })
}
