//! Benchmark parsers, prediction serialization and the on-disk score cache.

mod cache;
mod contexts;
mod gold;
mod predictions;
mod swords;

use thiserror::Error;

pub use cache::{CacheEntry, CacheKey, ScoreCache, CACHE_FORMAT_VERSION};
pub use contexts::{parse_contexts_jsonl, BenchmarkInstance, InstanceGold};
pub use gold::parse_gold_legacy;
pub use predictions::{read_predictions_jsonl, write_predictions, PredictionRecord, PredictionStyle};
pub use swords::parse_swords;

use crate::model::AnnotationError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: duplicate instance id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: missing field {field:?}")]
    MissingField { line: usize, field: &'static str },
    #[error("instance {id}: target span {start}..{end} is out of range")]
    SpanOutOfRange { id: String, start: usize, end: usize },
    #[error("instance {id}: target span {start}..{end} is not on a word boundary")]
    SpanMisaligned { id: String, start: usize, end: usize },
    #[error("instance {id}: substitute {word:?} has no vote counts")]
    MissingVotes { id: String, word: String },
    #[error("instance {id}: {count} guesses exceed the out-of-ten limit")]
    TooManyGuesses { id: String, count: usize },
    #[error("instance {id}: repeated substitute {word:?}")]
    DuplicateSurface { id: String, word: String },
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
}
