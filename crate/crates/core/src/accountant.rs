//! Rényi-DP accounting for the projected Gaussian mechanism.
//!
//! Pipeline: Gaussian RDP curve `ε(α) = αΔ²/(2σ²)` → optional subsampling
//! amplification → `T`-fold composition → conversion to `(ε, δ)`-DP.
//! [`calibrate_sigma`] inverts the pipeline by bisection on `σ`.
//!
//! The overall `δ` is split between the failure probability of the
//! sensitivity bound (`δ_sens = split·δ`) and the RDP conversion
//! (`δ_conv = (1 − split)·δ`).

use alloc::format;
use alloc::vec::Vec;

use crate::sensitivity::{bound, BoundKind};
use crate::{Error, Result};

/// `{1.25, 1.5, 1.75, 2, 3, ..., 64, 128, 256}`.
pub fn default_orders() -> Vec<f64> {
    let mut v = alloc::vec![1.25, 1.5, 1.75];
    v.extend((2..=64).map(f64::from));
    v.extend([128.0, 256.0]);
    v
}

/// Orders `1 + step, 1 + 2 step, ..., max`.
pub fn dense_orders(step: f64, max: f64) -> Vec<f64> {
    let n = libm::floor((max - 1.0) / step) as usize;
    (1..=n).map(|i| 1.0 + i as f64 * step).collect()
}

/// `ε(α)` on a grid of orders `α > 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RdpCurve {
    orders: Vec<f64>,
    eps: Vec<f64>,
}

impl RdpCurve {
    pub fn new(orders: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        if orders.len() != eps.len() {
            return Err(Error::DimensionMismatch {
                expected: orders.len(),
                found: eps.len(),
            });
        }
        if let Some(a) = orders.iter().find(|&&a| !(a > 1.0 && a.is_finite())) {
            return Err(Error::invalid("order", format!("orders must exceed 1, got {a}")));
        }
        if let Some(e) = eps.iter().find(|&&e| !(e >= 0.0 && e.is_finite())) {
            return Err(Error::invalid("eps", format!("RDP values must be finite and >= 0, got {e}")));
        }
        Ok(RdpCurve { orders, eps })
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }
}

/// Noise level and squared sensitivity of one Gaussian release.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanismSpec {
    pub sigma: f64,
    /// `Δ²`, e.g. a [`SensitivityBound`](crate::sensitivity::SensitivityBound)'s `w`.
    pub sensitivity_sq: f64,
    pub kind: Option<BoundKind>,
}

impl MechanismSpec {
    pub fn new(sigma: f64, sensitivity_sq: f64) -> Self {
        MechanismSpec {
            sigma,
            sensitivity_sq,
            kind: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be > 0, got {}", self.sigma)));
        }
        if !(self.sensitivity_sq > 0.0 && self.sensitivity_sq.is_finite()) {
            return Err(Error::invalid(
                "sensitivity",
                format!("must be > 0, got {}", self.sensitivity_sq),
            ));
        }
        Ok(())
    }

    /// `σ²/Δ²`: the variance of the noise in units of sensitivity.
    fn noise_ratio_sq(&self) -> f64 {
        self.sigma * self.sigma / self.sensitivity_sq
    }
}

fn check_orders(orders: &[f64]) -> Result<()> {
    if orders.is_empty() {
        return Err(Error::Empty("order grid"));
    }
    Ok(())
}

/// `ε(α) = α Δ² / (2σ²)`.
pub fn gaussian_rdp(spec: &MechanismSpec, orders: &[f64]) -> Result<RdpCurve> {
    spec.validate()?;
    check_orders(orders)?;
    let eps = orders
        .iter()
        .map(|&a| a * spec.sensitivity_sq / (2.0 * spec.sigma * spec.sigma))
        .collect();
    RdpCurve::new(orders.to_vec(), eps)
}

/// Subsampling scheme used to amplify the per-step guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Amplification {
    /// No amplification; every step is charged the full-data curve.
    None,
    /// Poisson sampling with rate `γ` (add/remove neighbours). Integer-order
    /// binomial expansion of the sampled Gaussian mechanism.
    #[default]
    Poisson,
    /// Fixed-size sampling without replacement with `γ = batch / N`
    /// (replace-one neighbours), using the general integer-order upper bound
    /// for subsampled mechanisms specialised to the Gaussian.
    WithoutReplacement,
}

impl Amplification {
    pub fn name(self) -> &'static str {
        match self {
            Amplification::None => "none",
            Amplification::Poisson => "poisson",
            Amplification::WithoutReplacement => "without-replacement",
        }
    }
}

impl core::str::FromStr for Amplification {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Amplification::None),
            "poisson" => Ok(Amplification::Poisson),
            "without-replacement" | "wor" => Ok(Amplification::WithoutReplacement),
            other => Err(Error::invalid("amplification", format!("unknown scheme `{other}`"))),
        }
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    libm::lgamma(f64::from(n) + 1.0)
        - libm::lgamma(f64::from(k) + 1.0)
        - libm::lgamma(f64::from(n - k) + 1.0)
}

/// Integer order `α ≥ 2` of the Poisson-sampled Gaussian:
/// `ln Σ_i C(α,i) (1−γ)^{α−i} γ^i exp((i² − i)/(2 s²))  / (α − 1)` with
/// `s² = σ²/Δ²`.
fn poisson_integer(alpha: u32, gamma: f64, ratio_sq: f64) -> f64 {
    let (lg, l1g) = (libm::log(gamma), libm::log1p(-gamma));
    let mut acc = f64::NEG_INFINITY;
    for i in 0..=alpha {
        let fi = f64::from(i);
        let term = ln_binomial(alpha, i)
            + f64::from(alpha - i) * l1g
            + fi * lg
            + (fi * fi - fi) / (2.0 * ratio_sq);
        acc = log_add_exp(acc, term);
    }
    acc / f64::from(alpha - 1)
}

/// Integer order `α ≥ 2` for sampling without replacement:
/// `ln(1 + γ² C(α,2) min(4(e^{ε(2)}−1), 2e^{ε(2)}) + Σ_{j≥3} 2 γ^j C(α,j) e^{(j−1)ε(j)}) / (α−1)`
/// where `ε(j) = j/(2s²)` is the base Gaussian curve.
fn without_replacement_integer(alpha: u32, gamma: f64, ratio_sq: f64) -> f64 {
    let base = |j: f64| j / (2.0 * ratio_sq);
    let lg = libm::log(gamma);
    let e2 = base(2.0);
    // ln(4 (e^x − 1)) = ln 4 + x + ln(1 − e^{−x})
    let second = libm::fmin(
        libm::log(4.0) + e2 + libm::log(-libm::expm1(-e2)),
        libm::log(2.0) + e2,
    );
    let mut acc = log_add_exp(0.0, 2.0 * lg + ln_binomial(alpha, 2) + second);
    for j in 3..=alpha {
        let fj = f64::from(j);
        let term = libm::log(2.0) + fj * lg + ln_binomial(alpha, j) + (fj - 1.0) * base(fj);
        acc = log_add_exp(acc, term);
    }
    acc / f64::from(alpha - 1)
}

/// Amplified curve for the given scheme.
///
/// `γ = 1` (or `Amplification::None`) returns [`gaussian_rdp`] unchanged.
/// The amplified bounds are defined at integer orders; a fractional order
/// uses the next integer, which is valid because `ε(α)` is nondecreasing in
/// `α`. The result is capped by the unsampled curve at every order.
pub fn amplified_rdp(
    spec: &MechanismSpec,
    gamma: f64,
    orders: &[f64],
    scheme: Amplification,
) -> Result<RdpCurve> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid("gamma", format!("sampling rate must lie in (0, 1], got {gamma}")));
    }
    let base = gaussian_rdp(spec, orders)?;
    if gamma == 1.0 || scheme == Amplification::None {
        return Ok(base);
    }
    let ratio_sq = spec.noise_ratio_sq();
    let eps = orders
        .iter()
        .zip(base.eps())
        .map(|(&a, &full)| {
            let alpha = libm::fmax(libm::ceil(a), 2.0) as u32;
            let amp = match scheme {
                Amplification::Poisson => poisson_integer(alpha, gamma, ratio_sq),
                Amplification::WithoutReplacement => {
                    without_replacement_integer(alpha, gamma, ratio_sq)
                }
                Amplification::None => unreachable!(),
            };
            // rounding in the log-sum can leave a tiny negative value
            libm::fmin(libm::fmax(amp, 0.0), full)
        })
        .collect();
    RdpCurve::new(orders.to_vec(), eps)
}

/// Poisson-subsampled Gaussian curve.
pub fn subsampled_rdp(spec: &MechanismSpec, gamma: f64, orders: &[f64]) -> Result<RdpCurve> {
    amplified_rdp(spec, gamma, orders, Amplification::Poisson)
}

/// `T`-fold adaptive composition: `ε_T(α) = T ε(α)`.
pub fn compose(curve: &RdpCurve, steps: u64) -> RdpCurve {
    let t = steps as f64;
    RdpCurve {
        orders: curve.orders.clone(),
        eps: curve.eps.iter().map(|e| e * t).collect(),
    }
}

/// `(ε, δ)` from an RDP curve: `min_α ε(α) + ln(1/δ)/(α − 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpGuarantee {
    pub eps: f64,
    pub delta: f64,
    pub best_order: f64,
}

pub fn rdp_to_dp(curve: &RdpCurve, delta: f64) -> Result<DpGuarantee> {
    if curve.is_empty() {
        return Err(Error::Empty("RDP curve"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let log_inv = -libm::log(delta);
    let (eps, best_order) = curve
        .orders
        .iter()
        .zip(&curve.eps)
        .map(|(&a, &e)| (e + log_inv / (a - 1.0), a))
        .fold((f64::INFINITY, f64::NAN), |best, cur| if cur.0 < best.0 { cur } else { best });
    Ok(DpGuarantee {
        eps,
        delta,
        best_order,
    })
}

/// Target privacy level and training schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub eps_target: f64,
    pub delta_target: f64,
    /// Number of composed releases `T`.
    pub steps: u64,
    /// Sampling rate `γ ∈ (0, 1]`.
    pub sampling_rate: f64,
    /// Fraction of `δ` given to the sensitivity bound.
    pub delta_split: f64,
}

impl PrivacyBudget {
    pub fn new(eps_target: f64, delta_target: f64) -> Self {
        PrivacyBudget {
            eps_target,
            delta_target,
            steps: 1,
            sampling_rate: 1.0,
            delta_split: 0.5,
        }
    }

    /// `epochs · N / batch` steps at rate `batch / N`.
    pub fn with_schedule(mut self, dataset_size: u64, batch_size: u64, epochs: u64) -> Self {
        self.sampling_rate = batch_size as f64 / dataset_size as f64;
        self.steps = epochs * dataset_size / batch_size;
        self
    }

    pub fn with_steps(mut self, steps: u64) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_sampling_rate(mut self, gamma: f64) -> Self {
        self.sampling_rate = gamma;
        self
    }

    pub fn with_delta_split(mut self, split: f64) -> Self {
        self.delta_split = split;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps_target > 0.0 && self.eps_target.is_finite()) {
            return Err(Error::invalid("eps", format!("must be > 0, got {}", self.eps_target)));
        }
        if !(self.delta_target > 0.0 && self.delta_target < 1.0) {
            return Err(Error::invalid("delta", format!("must lie in (0, 1), got {}", self.delta_target)));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "need at least one step"));
        }
        if !(self.sampling_rate > 0.0 && self.sampling_rate <= 1.0) {
            return Err(Error::invalid("gamma", format!("must lie in (0, 1], got {}", self.sampling_rate)));
        }
        if !(0.0..1.0).contains(&self.delta_split) {
            return Err(Error::invalid("delta_split", format!("must lie in [0, 1), got {}", self.delta_split)));
        }
        Ok(())
    }

    /// `δ` reserved for the failure of the sensitivity bound.
    pub fn delta_sensitivity(&self) -> f64 {
        self.delta_split * self.delta_target
    }

    /// `δ` used to convert RDP to `(ε, δ)`-DP.
    pub fn delta_conversion(&self) -> f64 {
        (1.0 - self.delta_split) * self.delta_target
    }
}

/// Where `Δ²` comes from during accounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sensitivity {
    /// A known squared sensitivity; the sensitivity share of `δ` is unused.
    Fixed(f64),
    /// `w(k, δ_sens)` from one of the projection bounds.
    Projection { kind: BoundKind, k: usize, d: usize },
}

impl Sensitivity {
    /// `Δ²` given the budget's `δ_sens`.
    pub fn resolve(&self, budget: &PrivacyBudget) -> Result<f64> {
        match *self {
            Sensitivity::Fixed(w) => Ok(w),
            Sensitivity::Projection { kind, k, d } => {
                let delta = budget.delta_sensitivity();
                if delta <= 0.0 {
                    return Err(Error::invalid(
                        "delta_split",
                        "a projection bound needs a positive share of delta",
                    ));
                }
                Ok(bound(kind, k, d, delta)?.w)
            }
        }
    }

    fn kind(&self) -> Option<BoundKind> {
        match *self {
            Sensitivity::Fixed(_) => None,
            Sensitivity::Projection { kind, .. } => Some(kind),
        }
    }
}

/// Order grid and amplification scheme used by [`account`] and
/// [`calibrate_sigma`].
#[derive(Debug, Clone, PartialEq)]
pub struct AccountantConfig {
    pub orders: Vec<f64>,
    pub amplification: Amplification,
}

impl Default for AccountantConfig {
    fn default() -> Self {
        AccountantConfig {
            orders: default_orders(),
            amplification: Amplification::Poisson,
        }
    }
}

/// Outcome of accounting a full schedule at one `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accounting {
    pub sigma: f64,
    pub eps: f64,
    pub delta: f64,
    pub best_order: f64,
    /// `Δ²` charged per step.
    pub sensitivity_sq: f64,
}

/// Total `(ε, δ)` of `budget.steps` releases at noise `sigma`.
pub fn account(
    sigma: f64,
    budget: &PrivacyBudget,
    sensitivity: &Sensitivity,
    cfg: &AccountantConfig,
) -> Result<Accounting> {
    budget.validate()?;
    let w = sensitivity.resolve(budget)?;
    account_resolved(sigma, w, budget, sensitivity.kind(), cfg)
}

fn account_resolved(
    sigma: f64,
    w: f64,
    budget: &PrivacyBudget,
    kind: Option<BoundKind>,
    cfg: &AccountantConfig,
) -> Result<Accounting> {
    let spec = MechanismSpec {
        sigma,
        sensitivity_sq: w,
        kind,
    };
    let step = amplified_rdp(&spec, budget.sampling_rate, &cfg.orders, cfg.amplification)?;
    let total = compose(&step, budget.steps);
    let dp = rdp_to_dp(&total, budget.delta_conversion())?;
    Ok(Accounting {
        sigma,
        eps: dp.eps,
        delta: budget.delta_target,
        best_order: dp.best_order,
        sensitivity_sq: w,
    })
}

/// Bracket and iteration count of the `σ` search.
pub const SIGMA_BRACKET: (f64, f64) = (1e-3, 1e3);
const BISECTION_STEPS: usize = 60;

/// Smallest `σ` (to bisection precision) whose accounted `ε` does not exceed
/// `budget.eps_target`. The returned [`Accounting`] is evaluated at that `σ`.
pub fn calibrate_sigma(
    budget: &PrivacyBudget,
    sensitivity: &Sensitivity,
    cfg: &AccountantConfig,
) -> Result<Accounting> {
    budget.validate()?;
    let w = sensitivity.resolve(budget)?;
    let kind = sensitivity.kind();
    let eval = |s: f64| account_resolved(s, w, budget, kind, cfg);

    let (mut lo, mut hi) = SIGMA_BRACKET;
    let at_lo = eval(lo)?;
    let at_hi = eval(hi)?;
    if at_hi.eps > budget.eps_target {
        return Err(Error::Infeasible {
            target: budget.eps_target,
            sigma_min: lo,
            sigma_max: hi,
            eps_at_min_sigma: at_lo.eps,
            eps_at_max_sigma: at_hi.eps,
        });
    }
    if at_lo.eps <= budget.eps_target {
        // even the smallest admissible noise meets the budget
        return Ok(at_lo);
    }
    let mut best = at_hi;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let acc = eval(mid)?;
        if acc.eps > budget.eps_target {
            lo = mid;
        } else {
            hi = mid;
            best = acc;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn spec(sigma: f64, w: f64) -> MechanismSpec {
        MechanismSpec::new(sigma, w)
    }

    #[test]
    fn gaussian_examples() {
        let c = gaussian_rdp(&spec(1.0, 1.0), &[2.0]).unwrap();
        assert_eq!(c.eps(), &[1.0]);
        let c = gaussian_rdp(&spec(2.0, 2.0), &[4.0]).unwrap();
        assert_eq!(c.eps(), &[1.0]);
        let c = gaussian_rdp(&spec(0.7, 1.3), &[3.0, 6.0]).unwrap();
        assert_eq!(c.eps()[1], 2.0 * c.eps()[0]);
        assert!(gaussian_rdp(&spec(0.0, 1.0), &[2.0]).is_err());
        assert!(gaussian_rdp(&spec(1.0, 1.0), &[]).is_err());
    }

    #[test]
    fn full_rate_is_identity() {
        let orders = default_orders();
        let s = spec(1.3, 2.0);
        assert_eq!(subsampled_rdp(&s, 1.0, &orders).unwrap(), gaussian_rdp(&s, &orders).unwrap());
        assert_eq!(
            amplified_rdp(&s, 1.0, &orders, Amplification::WithoutReplacement).unwrap(),
            gaussian_rdp(&s, &orders).unwrap()
        );
        assert_eq!(
            amplified_rdp(&s, 0.1, &orders, Amplification::None).unwrap(),
            gaussian_rdp(&s, &orders).unwrap()
        );
        assert!(subsampled_rdp(&s, 0.0, &orders).is_err());
        assert!(subsampled_rdp(&s, 1.5, &orders).is_err());
    }

    #[test]
    fn subsampling_example() {
        let c = subsampled_rdp(&spec(2.0, 1.0), 0.01, &[8.0]).unwrap();
        assert!(c.eps()[0] < 1.0, "{}", c.eps()[0]);
    }

    #[test]
    fn poisson_matches_full_gaussian_at_rate_one_limit() {
        // the binomial expansion collapses to exp(α(α−1)/(2s²)) as γ → 1
        let s = spec(1.1, 1.0);
        let near = subsampled_rdp(&s, 1.0 - 1e-12, &[5.0]).unwrap().eps()[0];
        let full = gaussian_rdp(&s, &[5.0]).unwrap().eps()[0];
        assert!((near - full).abs() < 1e-8);
    }

    #[test]
    fn amplification_never_hurts_and_grows_with_rate() {
        let orders = default_orders();
        for scheme in [Amplification::Poisson, Amplification::WithoutReplacement] {
            for &sigma in &[0.5, 1.0, 3.0] {
                let s = spec(sigma, 1.0);
                let full = gaussian_rdp(&s, &orders).unwrap();
                let mut prev: Option<RdpCurve> = None;
                for &g in &[1e-4, 1e-3, 0.01, 0.1, 0.5, 0.9, 1.0] {
                    let c = amplified_rdp(&s, g, &orders, scheme).unwrap();
                    for (a, b) in c.eps().iter().zip(full.eps()) {
                        assert!(a <= b);
                    }
                    if let Some(p) = &prev {
                        for (a, b) in p.eps().iter().zip(c.eps()) {
                            assert!(a <= b, "{scheme:?} sigma={sigma} gamma={g}");
                        }
                    }
                    prev = Some(c);
                }
            }
        }
    }

    #[test]
    fn small_rate_scales_quadratically() {
        let s = spec(2.0, 1.0);
        let a = subsampled_rdp(&s, 1e-3, &[8.0]).unwrap().eps()[0] / 1e-6;
        let b = subsampled_rdp(&s, 1e-4, &[8.0]).unwrap().eps()[0] / 1e-8;
        let ratio = a / b;
        assert!(ratio > 1.0 / 1.2 && ratio < 1.2, "{ratio}");
    }

    #[test]
    fn composition() {
        let c = RdpCurve::new(vec![2.0, 3.0], vec![0.01, 0.02]).unwrap();
        assert_eq!(compose(&c, 1), c);
        assert!((compose(&c, 100).eps()[0] - 1.0).abs() < 1e-12);
        assert_eq!(compose(&compose(&c, 6), 7), compose(&c, 42));
    }

    #[test]
    fn conversion_examples() {
        let c = RdpCurve::new(vec![2.0], vec![1.0]).unwrap();
        let dp = rdp_to_dp(&c, 1e-5).unwrap();
        assert!((dp.eps - 12.512_925_464_970_228).abs() < 1e-9);
        assert_eq!(dp.best_order, 2.0);
        let c = RdpCurve::new(vec![2.0, 10.0], vec![1.0, 0.5]).unwrap();
        assert!((rdp_to_dp(&c, 1.0 - 1e-15).unwrap().eps - 0.5).abs() < 1e-6);
        assert!(rdp_to_dp(&RdpCurve::new(vec![], vec![]).unwrap(), 1e-5).is_err());
    }

    #[test]
    fn conversion_is_grid_minimum() {
        let s = spec(0.9, 1.0);
        let c = compose(&subsampled_rdp(&s, 0.05, &default_orders()).unwrap(), 300);
        let dp = rdp_to_dp(&c, 1e-6).unwrap();
        for (a, e) in c.orders().iter().zip(c.eps()) {
            assert!(dp.eps <= e + -libm::log(1e-6) / (a - 1.0));
        }
    }

    #[test]
    fn one_shot_calibration_matches_closed_form() {
        // 10σ² − σ√(2 ln 1e5) − 1/2 = 0
        let l = libm::log(1e5);
        let oracle = (libm::sqrt(2.0 * l) + libm::sqrt(2.0 * l + 20.0)) / 20.0;
        let budget = PrivacyBudget::new(10.0, 1e-5).with_delta_split(0.0);
        let cfg = AccountantConfig {
            orders: dense_orders(0.001, 64.0),
            amplification: Amplification::None,
        };
        let acc = calibrate_sigma(&budget, &Sensitivity::Fixed(1.0), &cfg).unwrap();
        assert!((acc.sigma - oracle).abs() < 1e-3, "{} vs {oracle}", acc.sigma);
        assert!(acc.eps <= 10.0 && acc.eps > 10.0 * (1.0 - 1e-4));
    }

    #[test]
    fn infeasible_budget_reports_bracket() {
        let budget = PrivacyBudget::new(1e-6, 1e-5).with_steps(1_000_000);
        let err = calibrate_sigma(&budget, &Sensitivity::Fixed(1.0), &AccountantConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn projection_sensitivity_needs_delta_share() {
        let budget = PrivacyBudget::new(1.0, 1e-5).with_delta_split(0.0);
        let s = Sensitivity::Projection {
            kind: BoundKind::Bernstein,
            k: 10,
            d: 5,
        };
        assert!(account(1.0, &budget, &s, &AccountantConfig::default()).is_err());
    }
}
