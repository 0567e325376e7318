use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gcd(0, 0) is undefined")]
    GcdOfZeros,

    #[error("{value} has no inverse modulo {modulus}")]
    NotInvertible { value: u64, modulus: u64 },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("no prime >= {0} fits in 64 bits")]
    PrimeOverflow(u64),

    #[error("modulus {0} out of range (must be in [2, 2^63 - 1])")]
    BadModulus(u64),

    #[error("invalid interval: start {start}, len {len} in Z_{modulus}")]
    BadInterval { modulus: u64, start: u64, len: u64 },

    #[error("invalid hash parameters: {0}")]
    BadParams(String),

    #[error("key {key} outside universe [0, {universe})")]
    KeyOutOfUniverse { key: u64, universe: u128 },

    #[error("key {0} has no bucket assignment")]
    UnknownKey(u64),

    #[error("duplicate key {0}")]
    DuplicateKey(u64),

    #[error("key set is empty")]
    EmptyKeySet,

    #[error("enumeration of {required} seeds exceeds the guard of {guard}")]
    EnumerationGuard { required: u128, guard: u128 },

    #[error("invalid key set: {0}")]
    BadKeySet(String),

    #[error("{path}:{line}: {message}")]
    KeyFileParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("alpha = {alpha} out of range: {reason}")]
    AlphaOutOfRange { alpha: f64, reason: String },

    #[error("invalid experiment configuration: {0}")]
    BadExperiment(String),

    #[error("difference d must be nonzero")]
    ZeroDifference,

    #[error("x and x' must be distinct (both {0})")]
    IdenticalKeys(u64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
