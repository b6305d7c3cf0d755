//! Blind annotation tasks.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, ModelTranscriptSet};
use crate::align::{induce_spaces, CostModel};
use crate::error::{Error, Result};
use crate::inventory::{tokenize, tokenize_flat};
use crate::jsonl;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub language_code: String,
    pub utterance_id: String,
    pub audio_path: String,
    pub transcript_a: String,
    pub transcript_b: String,
    pub a_is_gold: bool,
    pub model_id: String,
}

/// Annotator-facing view of a task: no field reveals which side is gold or
/// which recognizer produced the other side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlindTask {
    pub task_id: String,
    pub language_code: String,
    pub utterance_id: String,
    pub audio_path: String,
    pub transcript_a: String,
    pub transcript_b: String,
}

/// Resolution key kept apart from the blind task file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskKey {
    pub task_id: String,
    pub a_is_gold: bool,
    #[serde(default)]
    pub model_id: String,
}

impl AnnotationTask {
    pub fn gold_transcript(&self) -> &str {
        if self.a_is_gold {
            &self.transcript_a
        } else {
            &self.transcript_b
        }
    }

    pub fn model_transcript(&self) -> &str {
        if self.a_is_gold {
            &self.transcript_b
        } else {
            &self.transcript_a
        }
    }

    pub fn split(&self) -> (BlindTask, TaskKey) {
        (
            BlindTask {
                task_id: self.task_id.clone(),
                language_code: self.language_code.clone(),
                utterance_id: self.utterance_id.clone(),
                audio_path: self.audio_path.clone(),
                transcript_a: self.transcript_a.clone(),
                transcript_b: self.transcript_b.clone(),
            },
            TaskKey {
                task_id: self.task_id.clone(),
                a_is_gold: self.a_is_gold,
                model_id: self.model_id.clone(),
            },
        )
    }

    pub fn from_parts(blind: BlindTask, key: &TaskKey) -> Self {
        debug_assert_eq!(blind.task_id, key.task_id);
        Self {
            task_id: blind.task_id,
            language_code: blind.language_code,
            utterance_id: blind.utterance_id,
            audio_path: blind.audio_path,
            transcript_a: blind.transcript_a,
            transcript_b: blind.transcript_b,
            a_is_gold: key.a_is_gold,
            model_id: key.model_id.clone(),
        }
    }
}

/// Writes the blind task file and the key file.
pub fn write_task_files(tasks: &[AnnotationTask], tasks_path: &Path, key_path: &Path) -> Result<()> {
    let (blind, keys): (Vec<BlindTask>, Vec<TaskKey>) = tasks.iter().map(AnnotationTask::split).unzip();
    jsonl::write_atomic(tasks_path, &blind)?;
    jsonl::write_atomic(key_path, &keys)?;
    Ok(())
}

/// Joins a blind task file with its key file.
pub fn merge_task_files(tasks_path: &Path, key_path: &Path) -> Result<Vec<AnnotationTask>> {
    let blind: Vec<BlindTask> = jsonl::read(tasks_path)?;
    let keys: Vec<TaskKey> = jsonl::read(key_path)?;
    merge_tasks(blind, &keys)
}

pub fn merge_tasks(blind: Vec<BlindTask>, keys: &[TaskKey]) -> Result<Vec<AnnotationTask>> {
    let by_id: HashMap<&str, &TaskKey> = keys.iter().map(|k| (k.task_id.as_str(), k)).collect();
    blind
        .into_iter()
        .map(|b| {
            let key = by_id
                .get(b.task_id.as_str())
                .ok_or_else(|| Error::UnknownTask(b.task_id.clone()))?;
            Ok(AnnotationTask::from_parts(b, key))
        })
        .collect()
}

/// Samples `n` utterances of `language` uniformly without replacement and
/// builds one task per utterance.
///
/// Eligible utterances are those with a prediction in `model_set`, taken in
/// manifest order. The generator is SplitMix64 seeded from `seed` and the
/// language code; indices are drawn by partial Fisher-Yates, then one coin
/// per task decides whether the gold transcript is shown as A.
pub fn sample_tasks(
    manifest: &DatasetManifest,
    language: &str,
    model_set: &ModelTranscriptSet,
    n: usize,
    seed: u64,
    cost: &CostModel,
) -> Result<Vec<AnnotationTask>> {
    let eligible: Vec<_> = manifest
        .language_entries(language)
        .filter_map(|e| model_set.get(&e.utterance_id).map(|p| (e, p)))
        .collect();
    if eligible.len() < n {
        return Err(Error::InsufficientUtterances {
            language: language.to_string(),
            available: eligible.len(),
            requested: n,
        });
    }
    let mut rng = SplitMix64::for_label(seed, language);
    let picks = rng.sample_indices(eligible.len(), n);
    picks
        .into_iter()
        .enumerate()
        .map(|(i, idx)| {
            let (entry, pred) = eligible[idx];
            let gold = tokenize(&entry.gold_transcript)?;
            let model = induce_spaces(&gold, &tokenize_flat(pred), cost).render();
            let gold = gold.render();
            let a_is_gold = rng.coin();
            let (transcript_a, transcript_b) = if a_is_gold { (gold, model) } else { (model, gold) };
            Ok(AnnotationTask {
                task_id: format!("{language}-{:03}", i + 1),
                language_code: language.to_string(),
                utterance_id: entry.utterance_id.clone(),
                audio_path: entry.audio_path.clone(),
                transcript_a,
                transcript_b,
                a_is_gold,
                model_id: model_set.model_id.clone(),
            })
        })
        .collect()
}

/// Samples tasks for several languages, each from its assigned model.
pub fn sample_campaign(
    manifest: &DatasetManifest,
    assignments: &BTreeMap<String, String>,
    model_sets: &[ModelTranscriptSet],
    n: usize,
    seed: u64,
    cost: &CostModel,
) -> Result<Vec<AnnotationTask>> {
    let mut tasks = Vec::new();
    for (language, model_id) in assignments {
        let set = model_sets
            .iter()
            .find(|s| &s.model_id == model_id)
            .ok_or_else(|| Error::Domain(format!("no transcripts for model {model_id:?}")))?;
        tasks.extend(sample_tasks(manifest, language, set, n, seed, cost)?);
    }
    Ok(tasks)
}
