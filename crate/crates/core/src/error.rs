use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("duplicate points at indices {i} and {j}")]
    DuplicatePoints { i: usize, j: usize },

    #[error(
        "interpolation infeasible: smallest kernel eigenvalue {eigenvalue:e} is not above {threshold:e}"
    )]
    InterpolationInfeasible { eigenvalue: f64, threshold: f64 },

    #[error("not positive semi-definite: {0}")]
    NotPsd(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("training diverged at step {step} with loss {loss:e}; last stable step {last_stable}")]
    Divergence {
        step: usize,
        loss: f64,
        last_stable: usize,
    },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("linear algebra failure: {0}")]
    LinAlg(String),

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics (singular systems, divergence, ...)
    /// as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DuplicatePoints { .. }
                | Error::InterpolationInfeasible { .. }
                | Error::NotPsd(_)
                | Error::Quadrature(_)
                | Error::Fit(_)
                | Error::Overflow(_)
                | Error::Divergence { .. }
                | Error::Consistency(_)
                | Error::LinAlg(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
