use std::fmt;

/// Failures mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration, one message per offending field.
    Config(Vec<String>),
    /// An enumeration guard refused the instance.
    Guard(String),
    /// Some acceptance criteria did not hold.
    Failed(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Failed(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msgs) => {
                write!(f, "invalid configuration")?;
                for m in msgs {
                    write!(f, "\n  {m}")?;
                }
                Ok(())
            }
            CliError::Guard(m) => write!(f, "{m}"),
            CliError::Failed(m) => write!(f, "{m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fpp_core::Error> for CliError {
    fn from(e: fpp_core::Error) -> Self {
        match e {
            fpp_core::Error::Guard(_) => CliError::Guard(e.to_string()),
            fpp_core::Error::Io(e) => CliError::Io(e),
            other => CliError::Config(vec![other.to_string()]),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
