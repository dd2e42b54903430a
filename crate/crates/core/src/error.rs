use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate in point")]
    NonFinite,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("region mass needs Monte Carlo but mc_samples = 0")]
    NeedsMonteCarlo,

    #[error("no analytic mass available: {0}")]
    NoAnalyticMass(String),

    #[error("protocol violation at round {round}: {reason}")]
    ProtocolViolation { round: usize, reason: String },

    #[error("worst-case adversary has no rate")]
    NoRate,

    #[error("classes are positively separated; {0}")]
    PositivelySeparated(String),

    #[error("point is a boundary point (zero margin)")]
    BoundaryPoint,

    #[error("concept is constant on the space (margin is infinite)")]
    ConstantConcept,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid config at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFinite => "non_finite",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NeedsMonteCarlo => "needs_monte_carlo",
            Error::NoAnalyticMass(_) => "no_analytic_mass",
            Error::ProtocolViolation { .. } => "protocol_violation",
            Error::NoRate => "no_rate",
            Error::PositivelySeparated(_) => "positively_separated",
            Error::BoundaryPoint => "boundary_point",
            Error::ConstantConcept => "constant_concept",
            Error::Unsupported(_) => "unsupported",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
            Error::Serde(_) => "serde",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
