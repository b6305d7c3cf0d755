//! Curated invalid-to-valid phone replacement.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenize::segment_word;
use super::{classify, nfd, tokenize_flat, Category, FeatureTable, Phone, Transcript};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplacementRule {
    pub target: String,
    pub target_phones: Vec<Phone>,
    pub provenance: Option<String>,
}

/// Map from an invalid phone to one or more valid phones.
///
/// Targets may span several phones (a non-standard superscript such as
/// `oᵑ` expands to `o ŋ`). Every target phone resolves in the feature
/// table and no target phone is itself a source, so applying the map twice
/// is the same as applying it once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplacementMap {
    rules: BTreeMap<String, ReplacementRule>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RuleSpec {
    Target(String),
    Annotated {
        target: String,
        #[serde(default, alias = "note")]
        provenance: Option<String>,
    },
}

impl ReplacementMap {
    pub fn new<I, S, T>(rules: I, table: &FeatureTable) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T, Option<String>)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (source, target, provenance) in rules {
            let source = nfd(source.as_ref());
            let target = nfd(target.as_ref());
            let bad = |reason: &str| Error::InvalidRule {
                source_phone: source.clone(),
                target: target.clone(),
                reason: reason.to_string(),
            };
            if source.chars().any(char::is_whitespace) || segment_word(&source).len() != 1 {
                return Err(bad("source must be a single phone"));
            }
            if table.contains(&source) {
                return Err(bad("source already resolves in the feature table"));
            }
            let target_phones = tokenize_flat(&target);
            if target_phones.is_empty() {
                return Err(bad("empty target"));
            }
            if let Some(p) = target_phones.iter().find(|p| !table.contains(p.surface())) {
                return Err(bad(&format!("target phone {:?} does not resolve", p.surface())));
            }
            if map.contains_key(&source) {
                return Err(bad("duplicate source"));
            }
            map.insert(
                source,
                ReplacementRule {
                    target,
                    target_phones,
                    provenance,
                },
            );
        }
        // targets resolve and sources do not, so no target can be a source
        debug_assert!(map
            .values()
            .flat_map(|r| &r.target_phones)
            .all(|p| !map.contains_key(p.surface())));
        Ok(Self { rules: map })
    }

    /// Parses `{"invalid": "valid", ...}`; a value may also be an object
    /// `{"target": "...", "provenance": "..."}`.
    pub fn from_json_str(text: &str, table: &FeatureTable) -> Result<Self> {
        let raw: BTreeMap<String, RuleSpec> = serde_json::from_str(text)?;
        Self::new(
            raw.into_iter().map(|(source, spec)| match spec {
                RuleSpec::Target(t) => (source, t, None),
                RuleSpec::Annotated { target, provenance } => (source, target, provenance),
            }),
            table,
        )
    }

    pub fn from_path(path: impl AsRef<Path>, table: &FeatureTable) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?, table)
    }

    /// Serializes back to the flat `{"invalid": "valid"}` form.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.rules
                .iter()
                .map(|(s, r)| (s.clone(), serde_json::Value::String(r.target.clone())))
                .collect(),
        )
    }

    pub fn get(&self, source: &str) -> Option<&ReplacementRule> {
        self.rules.get(source)
    }

    pub fn rules(&self) -> impl Iterator<Item = (&str, &ReplacementRule)> {
        self.rules.iter().map(|(s, r)| (s.as_str(), r))
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedRule {
    pub source: String,
    pub target: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizeOutcome {
    pub transcript: Transcript,
    /// Rules that fired, in source order, with how often each fired.
    pub applied: Vec<AppliedRule>,
    /// Invalid phones left in the output with their token counts. These are
    /// warnings; the transcript is still returned.
    pub unmapped: BTreeMap<String, u64>,
}

impl NormalizeOutcome {
    pub fn applied_count(&self) -> u64 {
        self.applied.iter().map(|r| r.count).sum()
    }
}

pub fn normalize(transcript: &Transcript, map: &ReplacementMap, table: &FeatureTable) -> NormalizeOutcome {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    let mut unmapped: BTreeMap<String, u64> = BTreeMap::new();
    let mut words = Vec::with_capacity(transcript.words.len());

    for word in &transcript.words {
        let mut out = Vec::with_capacity(word.len());
        for phone in word {
            match map.rules.get_key_value(phone.surface()) {
                Some((source, rule)) => {
                    *counts.entry(source.as_str()).or_default() += 1;
                    out.extend(rule.target_phones.iter().cloned());
                }
                None => {
                    if classify(phone, table) == Category::Invalid {
                        *unmapped.entry(phone.surface().to_string()).or_default() += 1;
                    }
                    out.push(phone.clone());
                }
            }
        }
        words.push(out);
    }

    let applied = counts
        .into_iter()
        .map(|(source, count)| AppliedRule {
            source: source.to_string(),
            target: map.rules[source].target.clone(),
            count,
        })
        .collect();
    for (phone, count) in &unmapped {
        log::warn!(
            "unmapped invalid phone {phone:?} ({count} tokens) in {:?}",
            transcript.utterance_id
        );
    }

    NormalizeOutcome {
        transcript: Transcript {
            words,
            language_code: transcript.language_code.clone(),
            utterance_id: transcript.utterance_id.clone(),
        },
        applied,
        unmapped,
    }
}
