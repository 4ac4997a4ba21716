use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Assumption failures are *not* errors; they are reported as verdicts in
/// [`AssumptionReport`](crate::model::AssumptionReport).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("interaction polynomial has a non-zero odd coefficient at index {index}")]
    OddInteraction { index: usize },

    #[error("insufficient moments: need {required}, got {provided}")]
    InsufficientMoments { required: usize, provided: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("densities live on different grids")]
    GridMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time step {dt} violates the stability bound; admissible dt <= {admissible}")]
    Cfl { dt: f64, admissible: f64 },

    #[error("tridiagonal solve failed at row {row}")]
    TridiagonalSolve { row: usize },

    #[error("non-finite coordinate for particle {index} at t = {t}")]
    NonFinite { index: usize, t: f64 },

    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),

    #[error("quadrature failed to converge on [{lo}, {hi}] (estimated error {error:e})")]
    Quadrature { lo: f64, hi: f64, error: f64 },

    #[error("branch counts agree at both ends of the scan ({lo_count} at lambda_lo, {hi_count} at lambda_hi)")]
    NoTransition { lo_count: usize, hi_count: usize },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}
