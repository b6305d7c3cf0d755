//! Annotator preference records, shared by the audit pipeline and the
//! annotation service.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four options offered for a pair of transcripts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    PreferA,
    PreferB,
    TieGood,
    TiePoor,
}

impl Choice {
    pub fn is_preference(self) -> bool {
        matches!(self, Choice::PreferA | Choice::PreferB)
    }

    pub fn resolve(self, a_is_gold: bool) -> Resolved {
        match (self, a_is_gold) {
            (Choice::PreferA, true) | (Choice::PreferB, false) => Resolved::Gold,
            (Choice::PreferA, false) | (Choice::PreferB, true) => Resolved::Model,
            (Choice::TieGood, _) => Resolved::TieGood,
            (Choice::TiePoor, _) => Resolved::TiePoor,
        }
    }
}

/// A choice mapped back onto gold/model once the position key is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolved {
    Gold,
    Model,
    TieGood,
    TiePoor,
}

/// Word indices (into the displayed word segmentation) that most influenced
/// a preference, per transcript.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfluentialWords {
    #[serde(default)]
    pub a: Vec<usize>,
    #[serde(default)]
    pub b: Vec<usize>,
}

impl InfluentialWords {
    pub fn is_empty(&self) -> bool {
        self.a.is_empty() && self.b.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub task_id: String,
    pub annotator_id: String,
    pub choice: Choice,
    #[serde(default)]
    pub influential_words: InfluentialWords,
    #[serde(default, alias = "timestamps", skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
    #[serde(default)]
    pub playback_speed_used: Vec<f64>,
}

impl PreferenceRecord {
    pub fn new(task_id: impl Into<String>, annotator_id: impl Into<String>, choice: Choice) -> Self {
        Self {
            task_id: task_id.into(),
            annotator_id: annotator_id.into(),
            choice,
            influential_words: InfluentialWords::default(),
            timestamp: None,
            playback_speed_used: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.task_id.is_empty() {
            return Err(Error::InvalidRecord("empty task_id".into()));
        }
        if self.annotator_id.is_empty() {
            return Err(Error::InvalidRecord("empty annotator_id".into()));
        }
        if !self.choice.is_preference() && !self.influential_words.is_empty() {
            return Err(Error::InvalidRecord(format!(
                "influential words given with abstention {:?}",
                self.choice
            )));
        }
        if let Some(s) = self.playback_speed_used.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidRecord(format!("bad playback speed {s}")));
        }
        Ok(())
    }

    /// Equality ignoring the timestamp, used to detect identical
    /// resubmissions.
    pub fn same_content(&self, other: &PreferenceRecord) -> bool {
        self.task_id == other.task_id
            && self.annotator_id == other.annotator_id
            && self.choice == other.choice
            && self.influential_words == other.influential_words
            && self.playback_speed_used == other.playback_speed_used
    }
}
