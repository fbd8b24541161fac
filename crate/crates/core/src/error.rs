use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SolveResult;

pub type Result<T> = std::result::Result<T, MageError>;

#[derive(Debug, Error)]
pub enum MageError {
    #[error("complex dimension {0} is not supported (expected 1 or 2)")]
    DimensionUnsupported(usize),

    #[error("invalid resolution {resolution}: {reason}")]
    ResolutionInvalid { resolution: usize, reason: String },

    #[error("metric is not positive at point {index}: eigenvalue {eigenvalue:e}")]
    MetricNotPositive { index: usize, eigenvalue: f64 },

    #[error("field is not omega-psh: worst point {index}, eigenvalue {eigenvalue:e}")]
    NotOmegaPsh { index: usize, eigenvalue: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value at point {0}")]
    NonFinite(usize),

    #[error("delta {delta} is below the grid spacing {spacing}")]
    DeltaBelowResolution { delta: f64, spacing: f64 },

    #[error("delta {0} exceeds the half period")]
    DeltaOutOfRange(f64),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("sample {index} has a non-positive coordinate")]
    NonpositiveSample { index: usize },

    #[error("density is negative at point {index}: {value:e}")]
    DensityInvalid { index: usize, value: f64 },

    #[error("solver did not converge after {} iterations (residual {:e})", .0.iterations, .0.residual_sup)]
    NotConverged(Box<SolveResult>),

    #[error("kernel quadrature did not converge: doubling changed eta by {0:e}")]
    QuadratureNotConverged(f64),

    #[error("smoothing scale {t} outside [{min}, {max}]")]
    ScaleOutOfRange { t: f64, min: f64, max: f64 },

    #[error("GKZ hypothesis violated at t = {t}: sup(rho_t u - u) = {excess:e} > C0 t^alpha")]
    HypothesisViolated { t: f64, excess: f64 },

    #[error("envelope schedule too short: final stages differ by {0:e}")]
    ScheduleTooShort(f64),

    #[error("envelope stage lambda = {lambda} failed to converge")]
    EnvelopeStageFailed {
        lambda: f64,
        last: Option<Box<crate::envelope::EnvelopeResult>>,
    },

    #[error("requested Hoelder exponent {requested} not realized (measured {measured})")]
    ExponentNotRealized { requested: f64, measured: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config invalid: field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },

    #[error("output directory {0} is not writable")]
    OutputDirUnwritable(PathBuf),

    #[error("sweep failed: {failed} of {total} rows failed")]
    SweepFailed { failed: usize, total: usize },

    #[error("bad field file: {0}")]
    BadFieldFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
