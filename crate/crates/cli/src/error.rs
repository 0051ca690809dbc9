use mofsim_core::MofError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Model(#[from] MofError),

    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn config(path: &str, msg: impl Into<String>) -> Self {
        let path = if path.is_empty() { "<root>".to_string() } else { path.to_string() };
        CliError::Config { path, msg: msg.into() }
    }

    /// 2 for numerical failures, 1 for everything the user can fix in the input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(e) if e.is_numerical() => 2,
            CliError::CheckFailed(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
