use alloc::boxed::Box;
use alloc::string::String;

use crate::model::ModelParameters;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("variance must be positive, got {0}")]
    NonpositiveVariance(f64),
    #[error("invalid degrees of freedom {df} for dimension {dim}")]
    InvalidDegreesOfFreedom { df: f64, dim: usize },
    #[error("hyperparameter must be positive, got {0}")]
    NonpositiveHyperparameter(f64),
    #[error("autoregressive coefficients are not stationary")]
    NonstationaryCoefficients,
    #[error("lag {lag} out of range for {times} time points")]
    LagOutOfRange { lag: usize, times: usize },
    #[error("invalid panel: {0}")]
    InvalidPanel(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("invalid simulation design: {0}")]
    DesignInvalid(String),
    #[error("chain is empty")]
    EmptyChain,
    #[error("chain has {len} draws, need at least {min}")]
    ChainTooShort { len: usize, min: usize },
    #[error("unknown scalar {0}")]
    UnknownScalar(String),
    #[error("sampler aborted at scan {scan}: {source}")]
    ChainAborted {
        scan: usize,
        source: Box<Error>,
        state: Box<ModelParameters>,
    },
}
