use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid (t, z, r) = ({t}, {z}, {r}) for n = {n}, l = {l}: {reason}")]
    InvalidTzr {
        t: i64,
        z: i64,
        r: i64,
        n: usize,
        l: usize,
        reason: &'static str,
    },

    #[error("malformed block string: {0}")]
    InvalidString(String),

    #[error("support of size {size} exceeds the enumeration cap {cap}")]
    TooLarge { size: u128, cap: u128 },

    #[error("input of length {len} exceeds the LCS length cap {cap}")]
    InputTooLarge { len: usize, cap: usize },

    #[error("symbol {symbol} at position {position} is not binary")]
    InvalidSymbol { symbol: u8, position: usize },

    #[error("no block of length l-1 and l+1 to modify (n1 = {n1}, n3 = {n3})")]
    NoModifiableBlocks { n1: usize, n3: usize },

    #[error("misaligned input: expected {expected} items, got {got}")]
    MisalignedInput { expected: String, got: usize },

    #[error("no admissible z in [{z_lo}, {z_hi}] for t = {t}, r = {r}")]
    NoAdmissibleZ { t: i64, r: i64, z_lo: i64, z_hi: i64 },

    #[error("domain contains no admissible (t, z, r)")]
    EmptyDomain,

    #[error("slope map violates its conditions: {0}")]
    SpecViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
