//! Crate-wide error type and result alias.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AdvisorError>;

#[derive(Debug, Error)]
pub enum AdvisorError {
    /// Malformed or invalid statistics document.
    #[error("statistics: {0}")]
    Stats(String),

    /// Workload text that does not fit the supported GPSJ grammar.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// The workload file contained no statements.
    #[error("workload is empty")]
    EmptyWorkload,

    /// A query whose WHERE and GROUP BY clauses yield no attributes cannot
    /// be placed in the clustering context.
    #[error("query {query_id} has no representative attributes")]
    NoRepresentativeAttributes { query_id: usize },

    #[error("query id {id} out of range: context has {rows} rows")]
    QueryOutOfRange { id: usize, rows: usize },

    #[error("query sets overlap (shared id {id})")]
    OverlappingSets { id: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("no cardinality recorded for attribute {attribute}")]
    MissingCardinality { attribute: String },

    #[error("no byte width recorded for column {column}")]
    MissingColumnSize { column: String },

    /// Yao's formula samples without replacement and needs |F| <= ms(F).
    #[error("Yao precondition violated: fact_rows {fact_rows} exceeds ms(F) {max_fact_size}")]
    YaoPrecondition { fact_rows: u64, max_fact_size: f64 },

    #[error("view {view} has zero estimated size; profit/space ratio is undefined")]
    ZeroViewSize { view: usize },

    #[error("configuration: {0}")]
    Config(String),

    #[error("view {view} cannot answer query {query}; rewrite refused")]
    RewriteNotAnswerable { view: usize, query: usize },

    #[error("harness: {0}")]
    Harness(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<AdvisorError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AdvisorError {
    /// Attach the pipeline stage where the error surfaced.
    pub fn at_stage(self, stage: &'static str) -> Self {
        AdvisorError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 1 for input errors, 2 for violated internal
    /// invariants (a bug in the caller or in this crate).
    pub fn exit_code(&self) -> i32 {
        match self {
            AdvisorError::Stats(_)
            | AdvisorError::Parse { .. }
            | AdvisorError::EmptyWorkload
            | AdvisorError::NoRepresentativeAttributes { .. }
            | AdvisorError::MissingCardinality { .. }
            | AdvisorError::MissingColumnSize { .. }
            | AdvisorError::Config(_)
            | AdvisorError::Harness(_)
            | AdvisorError::Io(_) => 1,
            AdvisorError::QueryOutOfRange { .. }
            | AdvisorError::OverlappingSets { .. }
            | AdvisorError::InvalidPartition(_)
            | AdvisorError::YaoPrecondition { .. }
            | AdvisorError::ZeroViewSize { .. }
            | AdvisorError::RewriteNotAnswerable { .. } => 2,
            AdvisorError::Stage { source, .. } => source.exit_code(),
        }
    }
}
