//! Particle descent on the (private) sliced distance.
//!
//! Source particles are moved by plain gradient descent on
//! `SWD_2^2(particles, target)`, where the target is only observed through
//! noised projections. Each step draws fresh directions and fresh noise.

use alloc::vec::Vec;

use rand::seq::index;

use crate::accountant::{account, AccountantConfig, Accounting, PrivacyBudget, Sensitivity};
use crate::exec::Executor;
use crate::matrix::Matrix;
use crate::measures::EmpiricalMeasure;
use crate::randomness::{Seed, StreamTag};
use crate::sensitivity::BoundKind;
use crate::sliced::{value_and_gradient_with, NoiseSides, PrivateSource, SwdConfig};
use crate::{Error, Result};

/// Loss above which a run is aborted as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// How the direction set evolves over iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectionPolicy {
    /// New directions every step.
    #[default]
    Fresh,
    /// The same directions at every step (deterministic objective when σ = 0).
    Fixed,
}

/// Privacy parameters used to report the guarantee of a private run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPrivacy {
    pub delta: f64,
    pub bound: BoundKind,
    pub delta_split: f64,
    pub accountant: AccountantConfig,
}

impl Default for FlowPrivacy {
    fn default() -> Self {
        FlowPrivacy {
            delta: 1e-5,
            bound: BoundKind::Bernstein,
            delta_split: 0.5,
            accountant: AccountantConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// Directions per step.
    pub k: usize,
    pub sigma: f64,
    pub noise_sides: NoiseSides,
    pub seed: Seed,
    pub directions: DirectionPolicy,
    /// Record every `log_every`-th step (the last step is always recorded).
    pub log_every: usize,
    /// Optional mini-batch size; each step samples this many source and target
    /// rows without replacement.
    pub batch_size: Option<usize>,
    pub privacy: FlowPrivacy,
}

impl FlowConfig {
    pub fn new(iterations: usize, learning_rate: f64, k: usize, seed: Seed) -> Self {
        FlowConfig {
            iterations,
            learning_rate,
            k,
            sigma: 0.0,
            noise_sides: NoiseSides::Both,
            seed,
            directions: DirectionPolicy::Fresh,
            log_every: 1,
            batch_size: None,
            privacy: FlowPrivacy::default(),
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("iterations", "need at least one iteration"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be > 0"));
        }
        if self.log_every == 0 {
            return Err(Error::invalid("log_every", "must be >= 1"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::invalid("batch_size", "must be >= 1"));
        }
        Ok(())
    }

    fn step_config(&self, t: usize) -> SwdConfig {
        let seed = match self.directions {
            DirectionPolicy::Fresh => self.seed.child(t as u64),
            DirectionPolicy::Fixed => self.seed,
        };
        SwdConfig::new(self.k, 2.0, seed)
            .with_sigma(self.sigma)
            .with_sides(self.noise_sides)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRecord {
    pub iteration: usize,
    /// Estimated `SWD_2^2` before the update of this iteration.
    pub loss: f64,
    /// Frobenius norm of the gradient.
    pub grad_norm: f64,
}

/// Logged losses, final particles and the privacy guarantee of the run.
#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    pub particles: Matrix,
    /// `None` for a non-private run (`σ = 0`).
    pub privacy: Option<FlowPrivacyReport>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowPrivacyReport {
    pub accounting: Accounting,
    pub steps: u64,
    pub sampling_rate: f64,
}

/// `(ε, δ)` for `cfg.iterations` private steps against a target of
/// `target_len` records in dimension `dim`.
pub fn flow_privacy(cfg: &FlowConfig, target_len: usize, dim: usize) -> Result<FlowPrivacyReport> {
    let sampling_rate = cfg
        .batch_size
        .map_or(1.0, |b| b.min(target_len) as f64 / target_len as f64);
    // the eps target is irrelevant when only accounting
    let budget = PrivacyBudget::new(1.0, cfg.privacy.delta)
        .with_steps(cfg.iterations as u64)
        .with_sampling_rate(sampling_rate)
        .with_delta_split(cfg.privacy.delta_split);
    let sensitivity = Sensitivity::Projection {
        kind: cfg.privacy.bound,
        k: cfg.k,
        d: dim,
    };
    let accounting = account(cfg.sigma, &budget, &sensitivity, &cfg.privacy.accountant)?;
    Ok(FlowPrivacyReport {
        accounting,
        steps: budget.steps,
        sampling_rate,
    })
}

/// Runs gradient descent of the source particles toward the private target.
pub fn run_flow<E: Executor, P: PrivateSource>(
    exec: &E,
    source_init: &EmpiricalMeasure,
    target: &P,
    cfg: &FlowConfig,
) -> Result<FlowTrace> {
    cfg.validate()?;
    if source_init.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            found: source_init.dim(),
        });
    }
    if !source_init.is_uniform() {
        return Err(Error::invalid("source", "particles must carry uniform weights"));
    }
    let n = source_init.len();
    let batch = match cfg.batch_size {
        None if n != target.len() => {
            return Err(Error::UnequalCounts {
                left: n,
                right: target.len(),
            })
        }
        None => None,
        Some(b) => Some(b.min(n).min(target.len())),
    };
    let privacy = if cfg.sigma > 0.0 {
        Some(flow_privacy(cfg, target.len(), target.dim())?)
    } else {
        None
    };

    let d = source_init.dim();
    let mut particles = source_init.points().clone();
    let mut records = Vec::new();
    for t in 0..cfg.iterations {
        let step = cfg.step_config(t);
        let (source_rows, target_rows) = match batch {
            Some(b) => {
                let mut rng = cfg.seed.substream(StreamTag::BATCH, t as u64);
                let tr = index::sample(&mut rng, target.len(), b).into_vec();
                let sr = index::sample(&mut rng, n, b).into_vec();
                (Some(sr), Some(tr))
            }
            None => (None, None),
        };
        let current = EmpiricalMeasure::uniform(particles.clone())?;
        let source = match &source_rows {
            Some(rows) => current.select_rows(rows)?,
            None => current,
        };
        let vg = value_and_gradient_with(exec, &source, target, target_rows.as_deref(), &step)?;
        let loss = vg.result.value;
        if !loss.is_finite() || loss > DIVERGENCE_THRESHOLD {
            return Err(Error::Diverged { iteration: t, loss });
        }
        let grad_norm = vg.gradient.frobenius_norm();
        if t % cfg.log_every == 0 || t + 1 == cfg.iterations {
            records.push(FlowRecord {
                iteration: t,
                loss,
                grad_norm,
            });
        }
        for (local, g) in vg.gradient.iter_rows().enumerate() {
            let row = source_rows.as_ref().map_or(local, |r| r[local]);
            let p = particles.row_mut(row);
            for (x, gi) in p.iter_mut().zip(g) {
                *x -= cfg.learning_rate * gi;
            }
        }
        debug_assert_eq!(particles.cols(), d);
    }
    Ok(FlowTrace {
        records,
        particles,
        privacy,
    })
}
