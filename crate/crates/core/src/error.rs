use alloc::string::String;

/// Errors reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weights sum to zero")]
    ZeroMass,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("private input is not normalized: max row norm {max_norm} exceeds 1/2")]
    NotNormalized { max_norm: f64 },

    #[error("unequal sample counts: {left} vs {right}")]
    UnequalCounts { left: usize, right: usize },

    #[error(
        "privacy budget infeasible: epsilon {eps_at_max_sigma} at sigma={sigma_max} \
         and {eps_at_min_sigma} at sigma={sigma_min} do not bracket the target {target}"
    )]
    Infeasible {
        target: f64,
        sigma_min: f64,
        sigma_max: f64,
        eps_at_min_sigma: f64,
        eps_at_max_sigma: f64,
    },

    #[error("flow diverged at iteration {iteration}: loss {loss}")]
    Diverged { iteration: usize, loss: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
