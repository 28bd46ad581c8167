use thiserror::Error;

use crate::cmatrix::LinalgError;
use crate::specfun::SpecFunError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("{failed} of {trials} trials failed for {scheme}, above the tolerated rate (first failure: {first})")]
    TrialFailures {
        scheme: String,
        failed: u64,
        trials: u64,
        first: LinalgError,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
