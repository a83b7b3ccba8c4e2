use burnscan_core::Error as CoreError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_EMPTY: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("empty result: {0}")]
    Empty(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Empty(_) => EXIT_EMPTY,
        }
    }

    /// Reports a library error as a configuration problem regardless of kind.
    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidWindow(_)
            | CoreError::InvalidPolygon(_)
            | CoreError::InvalidPolicy(_)
            | CoreError::InvalidThresholds(_)
            | CoreError::InvalidSpec(_)
            | CoreError::UnknownUnits(_)
            | CoreError::CrossYearWindow { .. } => CliError::Config(msg),
            CoreError::NoScenesInWindow(_)
            | CoreError::EmptyStack
            | CoreError::EmptyIntersection
            | CoreError::EmptyMatrix => CliError::Empty(msg),
            _ => CliError::Data(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
