//! Dataset schema, CSV ingestion, curation and deterministic splitting.

mod curate;
mod csv_io;
mod schema;
mod split;
mod table;

pub use curate::{curate, normalize_target, CurateOptions, CurationEntry, CurationLog};
pub use csv_io::load_csv;
pub use schema::{ColumnKind, ColumnRole, ColumnSpec, Schema};
pub use split::{split, SplitConfig, SplitMode};
pub use table::{DataTable, Features};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv parse failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema: {0}")]
    SchemaInvalid(String),
    #[error("header mismatch at column {index}: schema declares '{expected}', file has '{found}'")]
    HeaderMismatch {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("header has {found} columns, schema declares {expected}")]
    HeaderWidth { expected: usize, found: usize },
    #[error("line {line}, column '{column}': expected a number, found '{value}'")]
    NonNumericCell {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}, column '{column}': missing value (imputation is not performed)")]
    MissingValue { line: u64, column: String },
    #[error("csv body is empty: no data rows after the header")]
    EmptyBody,
    #[error("correlation threshold must be in (0, 1], got {0}")]
    BadCorrThreshold(f64),
    #[error("fewer than 2 rows remain after curation ({remaining})")]
    TooFewRows { remaining: usize },
    #[error("target column '{0}' is constant (zero variance)")]
    ConstantTarget(String),
    #[error("table has no column with role {0}")]
    MissingRole(&'static str),
    #[error("split needs at least {min} rows in random-row mode, table has {n}")]
    TooFewRowsForSplit { n: usize, min: usize },
    #[error("leave-group-out split needs at least 2 distinct groups, table has {0}")]
    TooFewGroups(usize),
    #[error("group '{0}' not present in the table")]
    GroupAbsent(String),
    #[error("train fraction {fraction} leaves an empty {side} set for {n} rows")]
    EmptyPartition {
        fraction: f64,
        n: usize,
        side: &'static str,
    },
    #[error("group '{group}' has a zero initial target value; cannot normalize")]
    ZeroInitialTarget { group: String },
    #[error("column '{0}' not found")]
    UnknownColumn(String),
}
