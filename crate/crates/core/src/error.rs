use crate::sysmodel::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(ValidationReport),

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver stopped after {0} iterations without converging")]
    MaxIterations(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            Error::Io(err.into())
        } else {
            Error::Parse(err.to_string())
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

impl Error {
    /// Prefixes the message with `what`, keeping the variant.
    pub fn context(self, what: &str) -> Self {
        match self {
            Error::Graph(m) => Error::Graph(format!("{what}: {m}")),
            Error::Dimension(m) => Error::Dimension(format!("{what}: {m}")),
            Error::Schema(m) => Error::Schema(format!("{what}: {m}")),
            Error::Parse(m) => Error::Parse(format!("{what}: {m}")),
            Error::Precondition(m) => Error::Precondition(format!("{what}: {m}")),
            Error::Infeasible(m) => Error::Infeasible(format!("{what}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{what}: {m}")),
            Error::MaxIterations(n) => Error::Numerical(format!("{what}: solver stopped after {n} iterations")),
            other => other,
        }
    }

    /// Process exit code: 2 invalid input, 3 infeasible, 4 numerical
    /// failure, 5 I/O or file format.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSystem(_) | Error::Graph(_) | Error::Dimension(_) | Error::Precondition(_) => 2,
            Error::Infeasible(_) => 3,
            Error::Numerical(_) | Error::MaxIterations(_) => 4,
            Error::Schema(_) | Error::Parse(_) | Error::Io(_) => 5,
        }
    }
}
