use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {time} is not aligned to the step grid (dt = {dt})")]
    Misaligned { time: f64, dt: f64 },

    #[error("step {step}: dt = {dt} exceeds the stability limit {limit}")]
    CflViolation { step: u64, dt: f64, limit: f64 },

    #[error("step {step}: non-finite value in the field")]
    NonFinite { step: u64 },

    #[error("noise path covers {available} steps, {required} required")]
    PathTooShort { available: usize, required: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cannot invert Phi at value {value}")]
    PhiInversion { value: f64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("empty sample: {0}")]
    EmptySample(&'static str),

    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error("missing artifact {path}: {hint}")]
    MissingArtifact { path: String, hint: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
