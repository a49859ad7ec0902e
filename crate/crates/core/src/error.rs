use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown quantity `{0}`")]
    CatalogMiss(String),

    #[error("no initial bound listed for `{0}`")]
    NoInitialBound(String),

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("duplicate equation `{0}`")]
    DuplicateEquation(String),

    #[error("missing mandatory equation `{0}`")]
    MissingEquation(String),

    #[error("ambiguous signature for `{0}`")]
    AmbiguousSignature(String),

    #[error("wrong direction: expected {expected}, got {got}")]
    WrongDirection { expected: String, got: String },

    #[error("unsupported rank {0}")]
    UnsupportedRank(u32),

    #[error("unsupported Hölder pairing ({0}, {1})")]
    UnsupportedPairing(String, String),

    #[error("product table has no entry for {kind} with {extra} extra factors")]
    OutOfTable { kind: String, extra: u32 },

    #[error("logarithmic divergence integrating {0}")]
    LogDivergence(String),

    #[error("chain `{chain}`: {msg}")]
    Chain { chain: String, msg: String },

    #[error("regime infeasible: {0}")]
    Infeasible(String),

    #[error("step size rejected: {0}")]
    StepRejected(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
