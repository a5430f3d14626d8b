use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("population is empty")]
    EmptyPopulation,
    #[error("item {id} has non-positive or non-finite weight {weight}")]
    InvalidWeight { id: usize, weight: f64 },
    #[error("item {id} has non-finite value")]
    InvalidValue { id: usize },
    #[error("duplicate item id {0}")]
    DuplicateId(usize),
    #[error("item ids must be exactly 1..={n}; missing id {missing}")]
    MissingId { n: usize, missing: usize },
    #[error("unknown item id {0}")]
    UnknownId(usize),
    #[error("duplicate id {0} in a sample that must be distinct")]
    RepeatedId(usize),
    #[error("sample size {n} exceeds population size {population}")]
    SampleTooLarge { n: usize, population: usize },
    #[error("replacement numbers must satisfy {0}")]
    InvalidReplacement(String),
    #[error("instance too large for exact enumeration: {count} tuples exceed the limit of {limit}")]
    TooLarge { count: u128, limit: u128 },
    #[error("weights are uniform (alpha = 1); use the Serfling variance factor instead")]
    UniformWeights,
    #[error("tail threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("stream position {position} out of range 1..={len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("replicate budget must be positive")]
    ZeroReplicates,
    #[error("samplers refer to different populations")]
    MismatchedPopulations,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("stream ended after {consumed} entries before {needed} distinct ids appeared")]
    StreamExhausted { consumed: usize, needed: usize },
    #[error("coupled urns exceeded {0} steps")]
    StepLimit(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
