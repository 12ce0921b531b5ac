use crate::lattice::Site;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("walk from {start} exceeded the step budget after {steps} steps")]
    StepBudget { steps: u64, start: Site },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("computation budget exceeded: {0}")]
    Budget(String),

    #[error("site {0} is not a vertex")]
    Lookup(Site),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
