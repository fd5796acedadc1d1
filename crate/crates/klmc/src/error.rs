use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerically infeasible: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Core(klmc_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv error on {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

impl From<klmc_core::Error> for CliError {
    fn from(e: klmc_core::Error) -> Self {
        use klmc_core::Error as E;
        match e {
            E::Config(s) => CliError::Config(s),
            E::InvalidDimension(_) | E::DimensionMismatch { .. } | E::Domain(_) => {
                CliError::Config(e.to_string())
            }
            E::Infeasible(s) => CliError::Infeasible(s),
            E::ParameterInconsistency(_) | E::InvariantViolation { .. } => {
                CliError::Infeasible(e.to_string())
            }
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    /// 2 for configuration errors, 3 for numerical infeasibility, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            _ => 1,
        }
    }
}

impl From<&CliError> for ExitCode {
    fn from(e: &CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
