use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("estimate undefined: {0}")]
    UndefinedEstimate(&'static str),

    #[error("invalid policy parameters: {0}")]
    InvalidPolicy(String),

    #[error("incompatible policy/instance: {0}")]
    Incompatible(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("enumeration bound exceeded: {0}")]
    EnumerationBound(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate regression design: {0}")]
    DegenerateDesign(String),

    #[error("no signal: {0}")]
    NoSignal(String),

    #[error("missing trace records: {0}")]
    MissingRecords(String),

    #[error("seed collision: replications {0} and {1} map to the same stream")]
    SeedCollision(usize, usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
