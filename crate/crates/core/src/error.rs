use thiserror::Error;

use crate::model::ItemId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("item symbol is empty")]
    EmptySymbol,
    #[error("event sets must contain at least one item")]
    EmptyEvent,
    #[error("sequence {sid}: event ids must be strictly increasing")]
    UnorderedEvents { sid: u32 },
    #[error("duplicate sequence id {0}")]
    DuplicateSid(u32),
    #[error("item {0} is not in the symbol table")]
    UnknownItem(ItemId),
    #[error("unknown item symbol {0:?}")]
    UnknownSymbol(String),
}

/// A problem found on one line of an input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Fatal problems with the layout of an input file.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("input is empty; expected a header row")]
    MissingHeader,
    #[error("header is missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("expected first line {expected:?}, found {found:?}")]
    BadMagic {
        expected: &'static str,
        found: String,
    },
    #[error("line {line}: {message}")]
    Line { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MineError {
    #[error("cannot mine an empty database")]
    EmptyDatabase,
    #[error("invalid minimum support: {0}")]
    InvalidMinSupport(String),
    #[error("{0} must be at least 1")]
    ZeroCap(&'static str),
    #[error("oracle refuses {what} = {value} (limit {limit})")]
    OracleLimit {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    #[error("failed to build worker pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleError {
    #[error("min_conf must lie in (0, 1], got {0}")]
    InvalidMinConf(f64),
    #[error("pattern set is not prefix-closed: prefix {prefix} of a frequent pattern is missing")]
    MissingPrefix { prefix: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{field}: {message}")]
    Field {
        field: &'static str,
        message: String,
    },
}
