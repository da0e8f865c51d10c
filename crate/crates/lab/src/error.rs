use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// Bad or unresolvable configuration. Maps to exit code 2.
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Core(#[from] mail_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
