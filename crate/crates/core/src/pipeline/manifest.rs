use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

/// One utterance of the corpus. Audio is referenced by path only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub utterance_id: String,
    #[serde(rename = "language", alias = "language_code")]
    pub language_code: String,
    #[serde(rename = "audio", alias = "audio_path")]
    pub audio_path: String,
    #[serde(rename = "gold", alias = "gold_transcript")]
    pub gold_transcript: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    entries: Vec<ManifestEntry>,
    by_language: BTreeMap<String, Vec<usize>>,
    by_id: HashMap<String, usize>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(entries.len());
        let mut by_language: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            if e.utterance_id.is_empty() {
                return Err(Error::Manifest(format!("entry {} has an empty utterance_id", i + 1)));
            }
            if by_id.insert(e.utterance_id.clone(), i).is_some() {
                return Err(Error::Manifest(format!("duplicate utterance_id {:?}", e.utterance_id)));
            }
            if e.language_code.is_empty() {
                return Err(Error::Manifest(format!("{:?} has an empty language", e.utterance_id)));
            }
            if !(e.duration_s > 0.0 && e.duration_s.is_finite()) {
                return Err(Error::Manifest(format!(
                    "{:?} has non-positive duration {}",
                    e.utterance_id, e.duration_s
                )));
            }
            by_language.entry(e.language_code.clone()).or_default().push(i);
        }
        Ok(Self {
            entries,
            by_language,
            by_id,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(jsonl::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        jsonl::write_atomic(path, &self.entries)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        jsonl::to_string(&self.entries)
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.by_language.keys().map(String::as_str)
    }

    /// Entries of one language, in manifest order.
    pub fn language_entries(&self, language: &str) -> impl Iterator<Item = &ManifestEntry> {
        self.by_language
            .get(language)
            .into_iter()
            .flatten()
            .map(|&i| &self.entries[i])
    }

    pub fn language_counts(&self) -> BTreeMap<String, usize> {
        self.by_language.iter().map(|(l, v)| (l.clone(), v.len())).collect()
    }

    pub fn get(&self, utterance_id: &str) -> Option<&ManifestEntry> {
        self.by_id.get(utterance_id).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, utterance_id: &str) -> bool {
        self.get(utterance_id).is_some()
    }

    pub fn total_duration_s(&self, language: &str) -> f64 {
        self.language_entries(language).map(|e| e.duration_s).sum()
    }
}

/// One line of a model transcript file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelTranscriptLine {
    pub utterance_id: String,
    pub model_id: String,
    pub transcript: String,
}

/// Precomputed predictions of one phone recognizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelTranscriptSet {
    pub model_id: String,
    pub entries: BTreeMap<String, String>,
}

impl ModelTranscriptSet {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            entries: BTreeMap::new(),
        }
    }

    /// Groups lines by model id, in sorted model order.
    pub fn from_lines(lines: Vec<ModelTranscriptLine>) -> Result<Vec<Self>> {
        let mut sets: BTreeMap<String, ModelTranscriptSet> = BTreeMap::new();
        for line in lines {
            let set = sets
                .entry(line.model_id.clone())
                .or_insert_with(|| ModelTranscriptSet::new(line.model_id.clone()));
            if set.entries.insert(line.utterance_id.clone(), line.transcript).is_some() {
                return Err(Error::Manifest(format!(
                    "model {:?} has two transcripts for {:?}",
                    line.model_id, line.utterance_id
                )));
            }
        }
        Ok(sets.into_values().collect())
    }

    pub fn load_all(path: impl AsRef<Path>) -> Result<Vec<Self>> {
        Self::from_lines(jsonl::read(path)?)
    }

    pub fn validate_against(&self, manifest: &DatasetManifest) -> Result<()> {
        if let Some(id) = self.entries.keys().find(|id| !manifest.contains(id)) {
            return Err(Error::Manifest(format!(
                "model {:?} predicts unknown utterance {id:?}",
                self.model_id
            )));
        }
        Ok(())
    }

    pub fn get(&self, utterance_id: &str) -> Option<&str> {
        self.entries.get(utterance_id).map(String::as_str)
    }
}
