//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by any stage of the discovery pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("csv parse error at data row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("missing value for '{variable}' at data row {row}")]
    MissingValue { variable: String, row: usize },

    #[error("value '{value}' not in the declared states of '{variable}'")]
    UnknownValue { variable: String, value: String },

    #[error("unknown column(s): {names}")]
    UnknownColumn { names: String },

    #[error("duplicate column name '{name}'")]
    DuplicateColumn { name: String },

    #[error("invalid discretization rule for '{variable}': {message}")]
    InvalidRule { variable: String, message: String },

    #[error("non-numeric value '{value}' in '{variable}' under a numeric rule")]
    NonNumeric { variable: String, value: String },

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("invalid node index {index} for a graph with {node_count} nodes")]
    InvalidNode { index: usize, node_count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("edge {from} -> {to}: {message}")]
    EdgeRejected {
        from: usize,
        to: usize,
        message: String,
    },

    #[error("directed cycle detected: {0}")]
    CycleDetected(String),

    #[error("parent set {parents:?} of node {child} is too large to score")]
    ParentSetTooLarge { child: usize, parents: Vec<usize> },

    #[error("illegal move {description}: {reason}")]
    IllegalMove {
        description: String,
        reason: String,
    },

    #[error("invalid constraints: {0}")]
    InvalidConstraints(String),

    #[error("graph violates constraints: {0}")]
    ConstraintViolation(String),

    #[error("exhaustive search refused: {variables} variables exceed the limit of {limit}")]
    TooManyVariables { variables: usize, limit: usize },

    #[error("ensemble run {run} failed: {source}")]
    EnsembleRun {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid graph document: {0}")]
    Document(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("failed to read {path}: {source}")]
    ReadFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    WriteFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a pipeline stage name to an error bubbling out of that stage.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by invalid user input (configs, data files,
    /// documents) as opposed to runtime failures. The CLI maps the former to
    /// exit code 1 and the latter to 2.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Csv { .. }
            | Error::MissingValue { .. }
            | Error::UnknownValue { .. }
            | Error::UnknownColumn { .. }
            | Error::DuplicateColumn { .. }
            | Error::InvalidRule { .. }
            | Error::NonNumeric { .. }
            | Error::EmptyDataset
            | Error::InvalidNode { .. }
            | Error::InvalidArgument(_)
            | Error::EdgeRejected { .. }
            | Error::CycleDetected(_)
            | Error::IllegalMove { .. }
            | Error::InvalidConstraints(_)
            | Error::ConstraintViolation(_)
            | Error::TooManyVariables { .. }
            | Error::Config(_)
            | Error::Document(_) => true,
            Error::Stage { source, .. } | Error::EnsembleRun { source, .. } => {
                source.is_validation()
            }
            Error::ParentSetTooLarge { .. }
            | Error::ReadFile { .. }
            | Error::WriteFile { .. }
            | Error::Io(_)
            | Error::Json(_) => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
