use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the clustering library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("item count {m} is outside the supported range [{min}, {max}]")]
    ItemCount { m: usize, min: usize, max: usize },

    #[error("enumerating partitions of {m} items exceeds the guard limit of {limit}")]
    SizeLimit { m: usize, limit: usize },

    #[error("bell number of {0} overflows 128-bit arithmetic")]
    BellOverflow(usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("partitions have different item counts ({left} vs {right})")]
    ItemCountMismatch { left: usize, right: usize },

    #[error("pair ({i}, {j}) is not a valid pair for {m} items")]
    PairOutOfRange { i: usize, j: usize, m: usize },

    #[error("probability {0} is not in [0, 1]")]
    InvalidProbability(f64),

    #[error("oracle parameters must satisfy 0 <= q < 1/2 < p <= 1 (got p = {p}, q = {q})")]
    InvalidOracleParameters { p: f64, q: f64 },

    #[error("pair ({i}, {j}) has not been queried yet")]
    ZeroCount { i: usize, j: usize },

    #[error("allocation is invalid: {0}")]
    InvalidAllocation(String),

    #[error("mixture weight {0} must lie strictly between 0 and 1")]
    InvalidMixture(f64),

    #[error("no alternative moves exist for a single item")]
    NoMoves,

    #[error("regularization too large: bound denominator is {0}")]
    RegularizationTooLarge(f64),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("recorded trace diverged at step {t}: expected pair ({ei}, {ej}), got ({gi}, {gj})")]
    TraceMismatch {
        t: u64,
        ei: usize,
        ej: usize,
        gi: usize,
        gj: usize,
    },

    #[error("recorded trace exhausted after {0} queries")]
    TraceExhausted(u64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
