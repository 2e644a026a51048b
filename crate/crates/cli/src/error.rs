use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_STRATEGIC: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NUMERICAL: i32 = 70;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    /// A configuration value broke an invariant; `path` names the field.
    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl ToString) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<gradsense::Error> for CliError {
    fn from(e: gradsense::Error) -> Self {
        use gradsense::Error as E;
        match e {
            E::HorizonMismatch(_) | E::ChannelMismatch { .. } | E::ModeSetMismatch => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
