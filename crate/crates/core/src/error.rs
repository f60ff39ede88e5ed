use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coordinate {0} lies outside [0,1]")]
    OutOfUnitRange(String),
    #[error("blocks have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("a block needs at least one letter")]
    EmptyBlock,
    #[error("index must be positive (sequences are 1-based)")]
    ZeroIndex,
    #[error("2^{0} does not fit in 64 bits")]
    Overflow(u32),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("malformed function spec: {0}")]
    MalformedSpec(String),
    #[error("search exhausted: no candidate within {0} enumeration indices")]
    SearchExhausted(u64),
    #[error("surrogate not found within budget {0}")]
    SurrogateNotFound(u64),
    #[error("cannot parse {0:?} as a fraction")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
