use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u32),
    #[error("group Z_{p}^{k} has more than {capacity} elements")]
    CapacityExceeded { p: u32, k: u32, capacity: usize },
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {value} is not a residue modulo {p}")]
    CoordinateOutOfRange { value: u32, p: u32 },
    #[error("operands live in different groups")]
    SpecMismatch,
    #[error("sumset image does not contain 0")]
    MissingIdentity,
    #[error("shift-invariant elements do not form a subgroup")]
    NotSubgroup,
    #[error("budget of {budget} exceeded (need {needed})")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("insufficient gadget richness: target not in the sumset of gadget values")]
    InsufficientRichness,
    #[error("multiset is rank deficient (rank {rank} < {k})")]
    RankDeficient { rank: usize, k: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
