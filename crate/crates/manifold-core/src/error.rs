//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("field has {found} values but the box has {expected} sites")]
    LengthMismatch { expected: usize, found: usize },

    #[error("expected {expected} components (one per dimension), found {found}")]
    ComponentCount { expected: usize, found: usize },

    #[error("component {component} has mean {mean:.3e}, outside the zero-mean tolerance")]
    NotCentered { component: usize, mean: f64 },

    #[error("box (2*{n_half}+1)^{dim} overflows the addressable site range")]
    BoxTooLarge { n_half: u32, dim: u32 },

    #[error("dimension must be at least 1")]
    ZeroDim,

    #[error("half-width must be at least 1")]
    ZeroHalfWidth,

    #[error("{sites} sites exceed the dense-materialization cap {cap}")]
    CapExceeded { sites: usize, cap: usize },

    #[error("operator is not symmetric (max asymmetry {max_asym:.3e})")]
    NotSymmetric { max_asym: f64 },

    #[error("expected exactly one zero eigenvalue, found {count} below tolerance")]
    ZeroModeCount { count: usize },

    #[error("degenerate site pair: z and w must differ")]
    DegeneratePair,

    #[error("site index {site} out of range for a box of {count} sites")]
    SiteOutOfRange { site: usize, count: usize },

    #[error("numerical routine failed: {what}")]
    Numerical { what: String },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("all importance weights underflowed to zero (min penalty {min_penalty:.3e})")]
    WeightUnderflow { min_penalty: f64 },

    #[error("scaling fit needs at least 3 valid points, got {points}")]
    TooFewFitPoints { points: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Attaches a path to a raw I/O error so failures name the file involved.
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
