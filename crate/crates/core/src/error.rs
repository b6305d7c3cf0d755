use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("transcript contains no phone content")]
    EmptyTranscript,

    #[error("gold transcript has zero phones")]
    EmptyGold,

    #[error("score list is empty")]
    EmptyScoreList,

    #[error("phone {0:?} never occurs in the gold corpus")]
    PhoneNotFound(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient annotations: {decided} decided trials, at least {required} required")]
    InsufficientAnnotations { decided: u64, required: u64 },

    #[error("record sets do not cover the same items: {0}")]
    MismatchedItems(String),

    #[error("feature table: {0}")]
    FeatureTable(String),

    #[error("replacement rule {source_phone:?} -> {target:?}: {reason}")]
    InvalidRule {
        source_phone: String,
        target: String,
        reason: String,
    },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("model {model_id} covers {covered}/{total} utterances of language {language}")]
    MissingPredictions {
        model_id: String,
        language: String,
        covered: usize,
        total: usize,
    },

    #[error("language {language} has {available} eligible utterances, {requested} requested")]
    InsufficientUtterances {
        language: String,
        available: usize,
        requested: usize,
    },

    #[error("record references unknown task {0:?}")]
    UnknownTask(String),

    #[error("duplicate record for annotator {annotator_id:?} on task {task_id:?}")]
    DuplicateRecord {
        task_id: String,
        annotator_id: String,
    },

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("{path}:{line}: {source}")]
    Jsonl {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
