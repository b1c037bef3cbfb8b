use thiserror::Error;

/// Decoding failures for the on-disk image formats. Offsets are byte positions
/// in the input buffer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("unsupported magic {found:?} at byte {offset}")]
    UnsupportedMagic { offset: usize, found: String },
    #[error("malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: String },
    #[error("maxval {value} out of range 1..=65535 at byte {offset}")]
    MaxvalOutOfRange { offset: usize, value: u64 },
    #[error("truncated payload at byte {offset}: need {needed} bytes, have {available}")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("unsupported layout: magic {found:?} at byte {offset}")]
    UnsupportedLayout { offset: usize, found: String },
    #[error("unsupported datatype code {code} at byte {offset}")]
    UnsupportedDatatype { offset: usize, code: i16 },
    #[error("slice index {index} out of bounds (nz = {nz})")]
    SliceOutOfBounds { index: usize, nz: usize },
    #[error("vox_offset {vox_offset} beyond file length {len}")]
    VoxOffsetBeyondEnd { vox_offset: usize, len: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("duplicate channel name {0:?}")]
    DuplicateChannel(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
