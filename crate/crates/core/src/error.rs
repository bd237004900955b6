use crate::rational::Rational;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown machine `{0}`")]
    UnknownMachine(String),
    #[error("machine `{0}` is already defined")]
    DuplicateMachine(String),
    #[error("query ({0}, {1}) is listed twice")]
    DuplicateQuery(String, Rational),
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(String),
    #[error("registry does not validate: {0}")]
    InvalidRegistry(String),
    #[error("query set is not closed: {0}")]
    NotClosed(String),
    #[error("machine `{0}` is not bounded (its call graph has a cycle)")]
    Unbounded(String),
    #[error("assignment has {got} probabilities for {expected} queries")]
    AssignmentLength { expected: usize, got: usize },
    #[error("query set has {0} queries; the grid solver handles at most {1}")]
    TooManyQueries(usize, usize),
    #[error("outcome `{0}` has no utility entry")]
    MissingUtility(String),
    #[error("world model needs at least {min} actions, got {got}")]
    TooFewActions { min: usize, got: usize },
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Parse(#[from] crate::dsl::ParseError),
}
