use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("index {index} out of range 1..={max}")]
    InvalidIndex { index: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("generator is singular: smallest singular value {smallest:e} vs largest {largest:e}")]
    SingularGenerator { smallest: f64, largest: f64 },

    #[error("training diverged at step {step}: loss = {loss}")]
    TrainingDiverged { step: usize, loss: f64 },

    #[error("degenerate variance at step t = {t}: quadratic data consistency needs sigma_t > 0")]
    DegenerateVariance { t: usize },

    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("malformed tensor file: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("run k={k} trial={trial} failed: {source}")]
    Trial {
        k: usize,
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that come from the numerics rather than from the
    /// inputs the caller supplied.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SingularGenerator { .. }
            | Error::TrainingDiverged { .. }
            | Error::DegenerateVariance { .. }
            | Error::NonFiniteObjective { .. } => true,
            Error::Trial { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub(crate) fn dim_check(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::InvalidDimension(format!(
            "{what}: expected {expected}, got {got}"
        )));
    }
    Ok(())
}

pub(crate) fn index_check(k: usize, max: usize) -> Result<()> {
    if k == 0 || k > max {
        return Err(Error::InvalidIndex { index: k, max });
    }
    Ok(())
}
