use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("duplicate asset label `{0}`")]
    DuplicateLabel(String),

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("max lag {max_lag} must be smaller than the sample length {len}")]
    LagTooLarge { max_lag: usize, len: usize },

    #[error("negative variance {value:e} for holding period d = {d}")]
    NegativeRadicand { d: usize, value: f64 },

    #[error("portfolio variance is zero")]
    ZeroVariance,

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("matrix is singular")]
    Singular,

    #[error("process is not stationary (spectral radius {spectral_radius})")]
    NonStationary { spectral_radius: f64 },

    #[error("autocorrelation {rho1} is outside the MA(1) range [-0.5, 0.5]")]
    Ma1OutOfRange { rho1: f64 },

    #[error("no VMA(1) solution: {0}")]
    NoVma1Solution(String),

    #[error("closing fraction {fraction} of asset {asset} is not on a grid of {steps} steps per day")]
    OffGrid { asset: usize, fraction: f64, steps: usize },
}

impl Error {
    /// True for failures of a numerical procedure on otherwise well-formed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NegativeRadicand { .. }
                | Error::ZeroVariance
                | Error::NotPositiveSemidefinite { .. }
                | Error::Singular
                | Error::NonStationary { .. }
                | Error::NoVma1Solution(_)
        )
    }
}
