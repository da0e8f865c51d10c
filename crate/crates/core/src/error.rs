use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("covariance at stage {stage} is singular along the queried direction (residual {residual:.3e})")]
    Singular { stage: usize, residual: f64 },
    #[error("negative Nash gap {gap:.3e} for player {player}: value computation is inconsistent")]
    NegativeGap { player: usize, gap: f64 },
    #[error("cannot decode state {0}")]
    Decode(usize),
    #[error("internal solver error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
