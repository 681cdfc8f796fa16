//! Error-to-exit-code policy: 2 for bad flags or flag values, 3 for
//! problems with input data or files, 4 for numeric failures.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<jkde::Error> for CliError {
    fn from(e: jkde::Error) -> Self {
        match e {
            // The dataset itself is unusable.
            jkde::Error::EmptyDataset | jkde::Error::TooFewObservations { .. } => {
                CliError::Data(e.to_string())
            }
            jkde::Error::NumericFailure(_) => CliError::Numeric(e.to_string()),
            // Everything else traces back to flag values.
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(format!("model document: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
