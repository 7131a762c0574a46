use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("fields live on different meshes")]
    MeshMismatch,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("system is not symmetric positive definite (pivot {pivot:.3e} at row {row})")]
    NotSpd { row: usize, pivot: f64 },

    #[error("actuator/eigenfunction pair is not a direct sum (Gram condition number {cond:.3e})")]
    SingularPair { cond: f64 },

    #[error("subspace dimensions differ: {actuators} actuators vs {eigenfunctions} eigenfunctions")]
    DimensionMismatch {
        actuators: usize,
        eigenfunctions: usize,
    },

    #[error("initial state exceeds the obstacle by {excess:.3e} at x = {x}")]
    InitialViolation { x: f64, excess: f64 },

    #[error("controlled state diverged at t = {t}: norm {norm:.3e}")]
    Divergence { t: f64, norm: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } => 3,
            Error::Config(_) | Error::InvalidParameter { .. } | Error::TooFewNodes(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
