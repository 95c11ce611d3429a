use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot remove {requested} copies of {element}: only {present} present")]
    Underflow {
        element: String,
        requested: u64,
        present: u64,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("element {0} lies outside the domain")]
    InvalidElement(String),
    #[error("multiplicity must be at least 1")]
    ZeroMultiplicity,
    #[error("noise scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("value {0} lies outside [0, 1]")]
    DomainOverflow(f64),
    #[error("invalid range [{0}, {1}]")]
    InvalidRange(f64, f64),
    #[error("query evaluated on a multiset that contains star")]
    StarPresent,
    #[error("expected {expected} answers, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("brute force is limited to n <= 16, got n = {0}")]
    TooLarge(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("transcript contains no deletions")]
    NoDeletions,
    #[error("no candidate cluster size yields an integral jump count")]
    NoIntegerSolution,
    #[error("new centers coincide")]
    DegenerateCenters,
    #[error("deletion sequence removes {0} more often than it occurs")]
    DuplicateDeletion(String),
    #[error("attacker protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("mechanism `{0}` has no public stateless update rule")]
    NotStateless(String),
    #[error("world pair is invalid: {0}")]
    InvalidWorldPair(String),
    #[error("mechanism used before init")]
    NotInitialized,
}
