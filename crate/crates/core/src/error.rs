use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row index {index} out of range for dataset with {n} rows")]
    RowOutOfRange { index: usize, n: usize },

    #[error("length mismatch: expected {expected} attributes, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid row subset: {0}")]
    InvalidSubset(String),

    #[error("dataset failed validation with {} violation(s): {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidDataset(Vec<Violation>),

    #[error("mode of empty cluster")]
    EmptyMode,

    #[error("frequency count underflow at attribute {attribute}, category {category}")]
    CountUnderflow { attribute: usize, category: u8 },

    #[error("more clusters than points: k={k}, n={n}")]
    TooManyClusters { k: usize, n: usize },

    #[error("k must be at least 1")]
    ZeroClusters,

    #[error("k={k} exceeds the number of distinct rows ({distinct})")]
    NotEnoughDistinctRows { k: usize, distinct: usize },

    #[error("cluster not bisectable")]
    NotBisectable,

    #[error("cannot produce K clusters: stopped at {produced} of {k}")]
    CannotProduceK { k: usize, produced: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("incomplete assignment: {0}")]
    IncompleteAssignment(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: u64,
        expected: usize,
        found: usize,
    },

    #[error("no usable columns remain after preprocessing")]
    NoUsableColumns,

    #[error("input contains no data rows")]
    NoRows,

    #[error("not an encoded dataset (bad magic)")]
    BadMagic,

    #[error("unsupported encoded format version {found} (expected {expected})")]
    UnsupportedVersion { found: u16, expected: u16 },

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },

    #[error("malformed encoded dataset: {0}")]
    Malformed(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
