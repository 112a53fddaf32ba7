//! Experiment orchestration: one TOML file drives dataset generation,
//! training, evaluation and inspection.

mod config;
mod dataset;
mod report;
mod run;

pub use config::{DatasetSpec, ExperimentConfig, GolgiSection, LayoutSpec};
pub use dataset::{Dataset, Record, DATASET_FORMAT, DATASET_VERSION};
pub use report::{training_csv, EvalReport, SparsityStats};
pub use run::{EncodeInspection, Experiment};

use thiserror::Error;

use crate::arch::ArchError;
use crate::dynamics::DynamicsError;
use crate::encoding::EncodingError;
use crate::network::NetworkError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Consistency(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Arch(#[from] ArchError),
}

/// Coarse error kinds, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Consistency,
    Numerical,
}

impl ExperimentError {
    pub fn class(&self) -> ErrorClass {
        match self {
            ExperimentError::Io { .. } | ExperimentError::Input(_) | ExperimentError::Arch(_) => ErrorClass::Input,
            ExperimentError::Consistency(_) => ErrorClass::Consistency,
            ExperimentError::Dynamics(DynamicsError::Singular) => ErrorClass::Numerical,
            ExperimentError::Dynamics(_) => ErrorClass::Input,
            ExperimentError::Encoding(e) => match e {
                EncodingError::NonConvergence { .. } => ErrorClass::Numerical,
                _ => ErrorClass::Input,
            },
            ExperimentError::Network(e) => match e {
                NetworkError::Divergence { .. } | NetworkError::NonFinite { .. } => ErrorClass::Numerical,
                NetworkError::Store(_) | NetworkError::EncoderMismatch { .. } => ErrorClass::Consistency,
                NetworkError::Encoding(EncodingError::NonConvergence { .. }) => ErrorClass::Numerical,
                _ => ErrorClass::Input,
            },
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        ExperimentError::Io { path: path.display().to_string(), source }
    }
}
