use thiserror::Error;

use crate::model::{DensityClass, Priority};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("mean neighbour count must be non-negative, got {0}")]
    NegativeDensity(f64),

    #[error("knowledge base has no entry for {density} {priority}")]
    MissingEntry {
        density: DensityClass,
        priority: Priority,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("cannot select from an empty front")]
    EmptyFront,

    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
