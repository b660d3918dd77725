use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pgm: bad magic number (expected P5)")]
    PgmMagic,
    #[error("pgm: malformed header: {0}")]
    PgmHeader(String),
    #[error("pgm: unsupported maxval {0} (only 255 is supported)")]
    PgmMaxval(u32),
    #[error("pgm: payload truncated, expected {expected} bytes, found {found}")]
    PgmTruncated { expected: usize, found: usize },

    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("stream truncated at byte offset {offset}")]
    Truncated { offset: usize },
    #[error("bad container magic at byte offset {offset}")]
    BadMagic { offset: usize },
    #[error("unsupported {field} {value} at byte offset {offset}")]
    Unsupported {
        field: &'static str,
        value: u64,
        offset: usize,
    },
    #[error("corrupt stream: {0}")]
    Corrupt(String),
    #[error("inconsistent syntax: {0}")]
    Syntax(String),

    #[error("state table self-check failed: {0}")]
    TableCheck(String),
}
