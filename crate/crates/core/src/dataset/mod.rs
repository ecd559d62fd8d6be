//! Question/passage/answer triplets and human assessments.

pub mod assessments;
pub mod synth;
pub mod triplets;

use thiserror::Error;

pub use assessments::{
    aggregate_assessments, import_assessments, write_assessment_summary, AssessmentImport, AssessmentSummary,
    HumanAssessment, RowError, ASSESSMENT_HEADER,
};
pub use synth::{synthesize_triplets, Synthesis};
pub use triplets::{load_triplets, to_jsonl, write_triplets, Provenance, QATriplet, Tag, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: field `{field}`: {message}")]
    Schema { line: usize, field: String, message: String },
    #[error("line {line}: duplicate of line {first_line} (same question and passage)")]
    Duplicate { line: usize, first_line: usize },
    #[error("line {line}: gold_chunk_ref {chunk_id} not found in the corpus")]
    Reference { line: usize, chunk_id: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("csv error in {path}: {message}")]
    Csv { path: String, message: String },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}
