use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("integration diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("no certificate found at the upper bracket c_P = {upper} (bracket [{lower}, {upper}])")]
    Infeasible { lower: f64, upper: f64 },

    #[error("inclusion order violated at t = {time}, component {component}: lo = {lo} > hi = {hi}")]
    OrderViolation { time: f64, component: usize, lo: f64, hi: f64 },

    #[error("unsound inclusion function: {0}")]
    UnsoundInclusion(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::Dimension { expected, found })
        }
    }
}
