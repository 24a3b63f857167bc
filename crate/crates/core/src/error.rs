use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate response")]
    DegenerateResponse,
    #[error("no retained samples")]
    NoRetainedSamples,
    #[error("no splits in posterior")]
    NoSplitsInPosterior,
    #[error("empty sample set")]
    EmptySamples,
    #[error("empty node")]
    EmptyNode,
    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors caused by bad input rather than by a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidDataset(_)
                | Error::InvalidHyperparams(_)
                | Error::InvalidArgument(_)
                | Error::DegenerateResponse
        )
    }
}
