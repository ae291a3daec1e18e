use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("group mismatch: {0}")]
    GroupMismatch(String),
    #[error("invalid group or representation: {0}")]
    InvalidSpec(String),
    #[error("element is not central: {0}")]
    NotCentral(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("edge is not a boundary edge: {0}")]
    NotBoundaryEdge(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("edge {0} is fixed by the boundary condition")]
    FixedEdge(usize),
    #[error("state space of {states} exceeds cap {cap}")]
    CapExceeded { states: u128, cap: u64 },
    #[error("mismatched spaces: {0}")]
    SpaceMismatch(String),
    #[error("conditioning event has zero probability")]
    ZeroProbability,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { path: path.into(), msg: msg.into() }
    }

    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidSpec(_) | Error::Geometry(_) | Error::OutOfRange(_) => 2,
            Error::CapExceeded { .. } => 3,
            Error::InsufficientStatistics(_) => 4,
            _ => 1,
        }
    }
}
