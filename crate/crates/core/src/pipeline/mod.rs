//! Audit campaign orchestration.

pub mod manifest;
pub mod report;
pub mod score;
pub mod tasks;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use manifest::{DatasetManifest, ManifestEntry, ModelTranscriptLine, ModelTranscriptSet};
pub use report::{compile_report, filter_manifest, AuditReport, FilterSummary, LanguageReport, Outcome};
pub use score::{score_languages, select_audit_languages, LanguageScores, ModelPair, ModelUtteranceScore, Selection};
pub use tasks::{
    merge_task_files, merge_tasks, sample_campaign, sample_tasks, write_task_files, AnnotationTask, BlindTask,
    TaskKey,
};

use crate::error::Result;
use crate::ppt::TestConfig;

fn default_quantile() -> f64 {
    2.0 / 3.0
}
fn default_n() -> usize {
    20
}
fn default_coverage() -> f64 {
    1.0
}
fn default_indel() -> f64 {
    1.0
}

/// Campaign settings, loadable from a JSON file. Missing fields take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default)]
    pub test: TestConfig,
    /// Selection quantile over per-language medians.
    #[serde(default = "default_quantile")]
    pub quantile: f64,
    /// Tasks sampled per audited language.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    /// Minimum fraction of a language's utterances a model must cover.
    #[serde(default = "default_coverage")]
    pub min_coverage: f64,
    #[serde(default = "default_indel")]
    pub indel_cost: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            test: TestConfig::default(),
            quantile: default_quantile(),
            n: default_n(),
            seed: 0,
            min_coverage: default_coverage(),
            indel_cost: default_indel(),
        }
    }
}

impl AuditConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text)?;
        config.test.validate()?;
        Ok(config)
    }
}
