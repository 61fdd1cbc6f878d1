use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state: squared norm {0} is not 1")]
    InvalidState(f64),
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
    #[error("impossible outcome: branch has zero probability")]
    ImpossibleOutcome,
    #[error("lambda value {0} outside [0,1)")]
    LambdaDomain(f64),
    #[error("lambda file must contain at least one word")]
    EmptyLambdaFile,
    #[error("lambda stream '{label}' exhausted after {consumed} values")]
    StreamExhausted { label: String, consumed: u64 },
    #[error("substream {index} exceeds capacity of {capacity} words")]
    Capacity { index: u64, capacity: u64 },
    #[error("malformed lambda file: {0}")]
    MalformedLambdaFile(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("quadruple violates the covariance constraints")]
    NotReducible,
    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),
    #[error("alphabet size {0} is outside the searchable range 1..=5")]
    SearchSpace(usize),
    #[error("impossible flash: hit center {0} has zero probability")]
    ImpossibleFlash(usize),
    #[error("expected a {expected}-particle wavefunction, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
