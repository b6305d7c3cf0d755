//! Audit report compilation and manifest filtering.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::manifest::DatasetManifest;
use super::score::LanguageScores;
use super::tasks::AnnotationTask;
use crate::error::{Error, Result};
use crate::metrics::LanguageAggregate;
use crate::ppt::{ppt_verdict, Decision, PreferenceCounts, TestConfig, Verdict};
use crate::records::{PreferenceRecord, Resolved};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Flag,
    /// Too few decided trials; the language needs more annotation.
    InsufficientAnnotations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageReport {
    pub language_code: String,
    pub n_tasks: usize,
    pub model_ids: Vec<String>,
    pub counts: PreferenceCounts,
    pub outcome: Outcome,
    pub verdict: Option<Verdict>,
    /// Aggregates of the model whose transcripts were annotated.
    #[serde(default)]
    pub metrics: Option<LanguageAggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: TestConfig,
    pub n_records: usize,
    pub languages: BTreeMap<String, LanguageReport>,
    /// Languages with a verdict, sorted by code.
    pub audited_languages: Vec<String>,
    /// Flagged languages, ascending by gold-preference count then code.
    pub flagged_languages: Vec<String>,
    /// Languages lacking enough decided trials.
    pub pending_languages: Vec<String>,
}

impl AuditReport {
    pub fn is_flagged(&self, language: &str) -> bool {
        self.flagged_languages.iter().any(|l| l == language)
    }

    pub fn verdicts(&self) -> Vec<&Verdict> {
        self.languages.values().filter_map(|l| l.verdict.as_ref()).collect()
    }

    /// Attaches per-language aggregates of the annotated model.
    pub fn attach_metrics(&mut self, scores: &LanguageScores) {
        for (lang, report) in &mut self.languages {
            report.metrics = report
                .model_ids
                .first()
                .and_then(|m| scores.per_model.get(m))
                .and_then(|langs| langs.get(lang))
                .cloned();
        }
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Resolves records against tasks and runs the test per language.
///
/// When several annotators judged the same task, the record from the
/// lexicographically smallest annotator id is used.
pub fn compile_report(
    tasks: &[AnnotationTask],
    records: &[PreferenceRecord],
    config: &TestConfig,
) -> Result<AuditReport> {
    config.validate()?;
    let by_id: HashMap<&str, &AnnotationTask> = tasks.iter().map(|t| (t.task_id.as_str(), t)).collect();
    if by_id.len() != tasks.len() {
        return Err(Error::Domain("duplicate task id in task list".into()));
    }

    let mut chosen: BTreeMap<&str, &PreferenceRecord> = BTreeMap::new();
    let mut seen: BTreeSet<(&str, &str)> = BTreeSet::new();
    for record in records {
        if !by_id.contains_key(record.task_id.as_str()) {
            return Err(Error::UnknownTask(record.task_id.clone()));
        }
        if !seen.insert((record.task_id.as_str(), record.annotator_id.as_str())) {
            return Err(Error::DuplicateRecord {
                task_id: record.task_id.clone(),
                annotator_id: record.annotator_id.clone(),
            });
        }
        record.validate()?;
        chosen
            .entry(record.task_id.as_str())
            .and_modify(|r| {
                if record.annotator_id < r.annotator_id {
                    *r = record;
                }
            })
            .or_insert(record);
    }

    let mut languages: BTreeMap<String, LanguageReport> = BTreeMap::new();
    for task in tasks {
        let entry = languages.entry(task.language_code.clone()).or_insert_with(|| LanguageReport {
            language_code: task.language_code.clone(),
            n_tasks: 0,
            model_ids: Vec::new(),
            counts: PreferenceCounts::default(),
            outcome: Outcome::InsufficientAnnotations,
            verdict: None,
            metrics: None,
        });
        entry.n_tasks += 1;
        if !entry.model_ids.contains(&task.model_id) {
            entry.model_ids.push(task.model_id.clone());
        }
        if let Some(record) = chosen.get(task.task_id.as_str()) {
            let c = &mut entry.counts;
            match record.choice.resolve(task.a_is_gold) {
                Resolved::Gold => c.gold_preferred += 1,
                Resolved::Model => c.model_preferred += 1,
                Resolved::TieGood => c.abstain_good += 1,
                Resolved::TiePoor => c.abstain_poor += 1,
            }
        }
    }

    let mut audited = Vec::new();
    let mut flagged = Vec::new();
    let mut pending = Vec::new();
    for (lang, report) in &mut languages {
        report.model_ids.sort();
        match ppt_verdict(lang, report.counts, config) {
            Ok(v) => {
                report.outcome = match v.decision {
                    Decision::Pass => Outcome::Pass,
                    Decision::Flag => {
                        flagged.push((report.counts.gold_preferred, lang.clone()));
                        Outcome::Flag
                    }
                };
                report.verdict = Some(v);
                audited.push(lang.clone());
            }
            Err(Error::InsufficientAnnotations { .. }) => pending.push(lang.clone()),
            Err(e) => return Err(e),
        }
    }
    flagged.sort();

    Ok(AuditReport {
        config: config.clone(),
        n_records: records.len(),
        languages,
        audited_languages: audited,
        flagged_languages: flagged.into_iter().map(|(_, l)| l).collect(),
        pending_languages: pending,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub removed_languages: Vec<String>,
    pub removed_entries: usize,
    /// Entry counts per surviving language.
    pub kept: BTreeMap<String, usize>,
}

/// Drops every entry of a flagged language.
pub fn filter_manifest(manifest: &DatasetManifest, report: &AuditReport) -> Result<(DatasetManifest, FilterSummary)> {
    let flagged: BTreeSet<&str> = report.flagged_languages.iter().map(String::as_str).collect();
    let kept: Vec<_> = manifest
        .entries()
        .iter()
        .filter(|e| !flagged.contains(e.language_code.as_str()))
        .cloned()
        .collect();
    let removed_entries = manifest.len() - kept.len();
    let filtered = DatasetManifest::new(kept)?;
    if filtered.is_empty() {
        log::warn!("filtered manifest is empty: every language was flagged");
    }
    let removed_languages = manifest
        .languages()
        .filter(|l| flagged.contains(l))
        .map(str::to_string)
        .collect();
    let summary = FilterSummary {
        removed_languages,
        removed_entries,
        kept: filtered.language_counts(),
    };
    Ok((filtered, summary))
}
