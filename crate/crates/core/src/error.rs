use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gaussian: {0}")]
    InvalidGaussian(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("replay buffer is empty")]
    EmptyBuffer,

    #[error("planning failed: all {0} candidate trajectories diverged")]
    PlanningFailure(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown environment `{0}`")]
    UnknownEnvironment(String),

    #[error("epoch {epoch}, step {step}: {source}")]
    AtStep {
        epoch: usize,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, got })
    }
}

pub(crate) fn ensure_finite(context: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}
