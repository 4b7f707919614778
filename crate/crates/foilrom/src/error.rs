//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (wrong dimensions, values outside
    /// the parameter domain, malformed NACA codes, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A deformation produced a self-intersecting or otherwise unusable
    /// geometry.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A model fit failed (singular system, factorization failure, ...).
    #[error("fit error: {0}")]
    Fit(String),

    /// Numerical postcondition violated (degenerate data, non-real
    /// forecast, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Configuration file could not be parsed or violates an invariant.
    #[error("config error: {0}")]
    Config(String),

    /// A gradient provider failed while assembling a covariance matrix.
    #[error("gradient evaluation failed at sample {sample}, t = {time} s: {source}")]
    Gradient {
        sample: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    /// A pipeline stage failed; carries the stage name for the report.
    #[error("pipeline stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Wraps an error with the pipeline stage it occurred in.
    pub fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// CLI exit code: 2 for configuration/input problems, 3 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::Io(_) | Error::Parse(_) => 2,
            Error::Geometry(_) | Error::Fit(_) | Error::Numerical(_) => 3,
            Error::Gradient { source, .. } | Error::Stage { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
