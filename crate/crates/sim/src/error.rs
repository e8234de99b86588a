use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("{erased} of {trials} trials at {sinr_db} dB hit a numerical guard ({first}); erasure budget is {budget}")]
    Erasures {
        sinr_db: f64,
        erased: usize,
        trials: usize,
        budget: f64,
        first: cdofdm_core::Error,
    },
    #[error(transparent)]
    Link(#[from] cdofdm_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SimError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// guards, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::Parse { .. } => 2,
            SimError::Erasures { .. } => 3,
            SimError::Link(e) if is_guard(e) => 3,
            SimError::Link(_) => 2,
            SimError::Io { .. } | SimError::Csv(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Errors that a single trial may hit by bad luck rather than bad input.
pub fn is_guard(e: &cdofdm_core::Error) -> bool {
    matches!(
        e,
        cdofdm_core::Error::ZeroReference { .. }
            | cdofdm_core::Error::DeepFade { .. }
            | cdofdm_core::Error::NonFinite(_)
    )
}

pub type Result<T> = std::result::Result<T, SimError>;
