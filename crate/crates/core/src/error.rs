use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-positive density {value:e} in cell {cell}")]
    NonPositiveDensity { cell: usize, value: f64 },

    #[error("source has mean {mean:e}, exceeds zero-mean tolerance {tol:e}")]
    NonZeroMean { mean: f64, tol: f64 },

    #[error("point x = {x} lies outside the domain [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },

    #[error("singular pivot in banded solve at row {row}")]
    SingularMatrix { row: usize },

    #[error("time step {step} failed: {failure}")]
    StepFailure { step: usize, failure: Box<StepFailure> },

    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Diagnostic dump of an implicit step that could not be solved.
#[derive(Debug, Clone)]
pub struct StepFailure {
    pub reason: String,
    pub min_density: f64,
    pub residual_history: Vec<f64>,
}

impl std::fmt::Display for StepFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (min density {:e}, last residuals {:?})",
            self.reason,
            self.min_density,
            self.residual_history.iter().rev().take(5).collect::<Vec<_>>()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, line: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            line,
            message: message.into(),
        }
    }
}
