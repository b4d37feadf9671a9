use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input violates a structural invariant (wrong shape, non-real residue, ...).
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The parametric oscillator is at or above threshold.
    #[error(
        "parametric oscillator not below threshold: alpha = {alpha}, zeta_b + kappa_0 = {total_loss}, \
         alpha_bar_minus = {alpha_bar_minus}"
    )]
    Threshold {
        alpha: f64,
        total_loss: f64,
        alpha_bar_minus: f64,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("singular resolvent (M - {shift}): relative residual {residual:e}")]
    SingularResolvent { shift: f64, residual: f64 },

    /// Drift has an eigenvalue with non-negative real part, so no steady state exists.
    #[error("drift is not Hurwitz (max Re eig = {max_real:e}); no steady state")]
    NotHurwitz { max_real: f64 },

    #[error("solver residual too large: relative residual {residual:e} > {bound:e}")]
    Residual { residual: f64, bound: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),
}

impl Error {
    /// True for errors caused by the caller's parameters rather than by numerics.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Threshold { .. }
                | Error::InvalidParams(_)
                | Error::Configuration(_)
                | Error::Usage(_)
                | Error::Domain(_)
                | Error::MalformedInput(_)
        )
    }
}
