use thiserror::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no certificate: {0}")]
    Infeasible(String),
    #[error("unsound inclusion function: {0}")]
    Unsound(String),
    #[error("coverage below target: {0}")]
    Coverage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(stochreach::Error),
}

impl From<stochreach::Error> for CliError {
    fn from(e: stochreach::Error) -> Self {
        use stochreach::Error as E;
        match e {
            E::Infeasible { lower, upper } => {
                CliError::Infeasible(format!("no feasible P at the top of the bisection bracket [{lower}, {upper}]"))
            }
            E::UnsoundInclusion(msg) => CliError::Unsound(msg),
            e @ E::OrderViolation { .. } => CliError::Unsound(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl CliError {
    /// 0 ok, 1 usage or other failure, 2 infeasible, 3 unsound inclusion, 4 coverage.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) | CliError::Core(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Unsound(_) => 3,
            CliError::Coverage(_) => 4,
        }
    }
}
