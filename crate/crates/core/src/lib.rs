//! Quality auditing for multilingual phonetic transcript corpora.
//!
//! The crate is organised bottom-up:
//!
//! * [`inventory`] tokenizes IPA transcripts into phones, classifies them
//!   against a ternary articulatory feature table, applies curated
//!   replacement rules and counts the phone distribution of a corpus.
//! * [`align`] performs feature-weighted Needleman-Wunsch alignment and
//!   transfers word boundaries from a gold transcript onto an unsegmented
//!   prediction.
//! * [`metrics`] computes phonetic feature error rates, per-phone expected
//!   error, recall and majority labels, and per-language aggregates.
//! * [`ppt`] holds the exact binomial machinery behind the Preference
//!   Proportion Test: CDF, critical values, power tables and verdicts.
//! * [`pipeline`] wires everything into an audit campaign: scoring,
//!   language selection, blind task sampling, report compilation and
//!   manifest filtering.

pub mod align;
pub mod error;
pub mod inventory;
pub mod jsonl;
pub mod metrics;
pub mod pipeline;
pub mod ppt;
pub mod records;
pub mod rng;

pub use align::{align, induce_spaces, AlignOp, AlignStep, AlignmentPath, CostModel};
pub use error::{Error, Result};
pub use inventory::{
    census, classify, normalize, tokenize, Category, FeatureTable, FeatureValue, FeatureVector,
    NormalizeOutcome, Phone, PhoneCensus, ReplacementMap, Transcript,
};
pub use metrics::{
    aggregate_language, expected_phone_error, pfer, phone_recall, AlignedLabel, LanguageAggregate,
    PhoneErrorProfile, UtteranceScore,
};
pub use ppt::{
    agreement, binom_cdf, critical_value, ppt_verdict, sample_size_table, Decision, PowerRow,
    PreferenceCounts, TestConfig, Verdict,
};
pub use records::{Choice, InfluentialWords, PreferenceRecord};
