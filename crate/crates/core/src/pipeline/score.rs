//! Per-language scoring of baseline recognizers and audit selection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, ModelTranscriptSet};
use crate::align::CostModel;
use crate::error::{Error, Result};
use crate::inventory::{tokenize, tokenize_flat};
use crate::metrics::{aggregate_language, pearson, pfer_flat, quantile, LanguageAggregate, UtteranceScore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelUtteranceScore {
    pub model_id: String,
    #[serde(flatten)]
    pub score: UtteranceScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPair {
    pub model_a: String,
    pub model_b: String,
    /// Pearson correlation of per-language median normalized PFER over the
    /// languages both models cover; absent when undefined.
    pub correlation: Option<f64>,
    pub n_languages: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageScores {
    /// model id -> language -> aggregate
    pub per_model: BTreeMap<String, BTreeMap<String, LanguageAggregate>>,
    pub correlations: Vec<ModelPair>,
    #[serde(skip)]
    pub utterances: Vec<ModelUtteranceScore>,
}

impl LanguageScores {
    pub fn languages(&self) -> Vec<String> {
        let mut langs: Vec<String> = self.per_model.values().flat_map(|m| m.keys().cloned()).collect();
        langs.sort();
        langs.dedup();
        langs
    }

    pub fn median(&self, model_id: &str, language: &str) -> Option<f64> {
        self.per_model.get(model_id)?.get(language).map(|a| a.median_pfer)
    }

    /// The model with the lowest median normalized PFER for each language;
    /// ties go to the lexicographically smaller model id.
    pub fn best_models(&self) -> BTreeMap<String, String> {
        let mut best: BTreeMap<String, (f64, String)> = BTreeMap::new();
        // per_model iterates in model-id order, so strict < keeps the smaller id on ties
        for (model, langs) in &self.per_model {
            for (lang, agg) in langs {
                match best.get(lang) {
                    Some((m, _)) if agg.median_pfer >= *m => {}
                    _ => {
                        best.insert(lang.clone(), (agg.median_pfer, model.clone()));
                    }
                }
            }
        }
        best.into_iter().map(|(l, (_, m))| (l, m)).collect()
    }
}

fn correlations(per_model: &BTreeMap<String, BTreeMap<String, LanguageAggregate>>) -> Vec<ModelPair> {
    let models: Vec<&String> = per_model.keys().collect();
    let mut out = Vec::new();
    for (i, a) in models.iter().enumerate() {
        for b in &models[i + 1..] {
            let (xs, ys): (Vec<f64>, Vec<f64>) = per_model[*a]
                .iter()
                .filter_map(|(lang, agg)| per_model[*b].get(lang).map(|other| (agg.median_pfer, other.median_pfer)))
                .unzip();
            out.push(ModelPair {
                model_a: (*a).clone(),
                model_b: (*b).clone(),
                correlation: pearson(&xs, &ys),
                n_languages: xs.len(),
            });
        }
    }
    out
}

/// Scores every model on every language it covers.
///
/// A model must cover at least `min_coverage` (a fraction in `[0, 1]`) of a
/// language's utterances; a model with no predictions at all for a
/// language is skipped rather than rejected when `min_coverage` is below 1.
pub fn score_languages(
    manifest: &DatasetManifest,
    model_sets: &[ModelTranscriptSet],
    cost: &CostModel,
    min_coverage: f64,
) -> Result<LanguageScores> {
    if model_sets.is_empty() {
        return Err(Error::Domain("at least one model transcript set is required".into()));
    }
    let mut per_model = BTreeMap::new();
    let mut utterances = Vec::new();
    for set in model_sets {
        set.validate_against(manifest)?;
        let mut langs = BTreeMap::new();
        for lang in manifest.languages() {
            let entries: Vec<_> = manifest.language_entries(lang).collect();
            let covered: Vec<_> = entries
                .iter()
                .filter_map(|e| set.get(&e.utterance_id).map(|p| (*e, p)))
                .collect();
            let coverage = covered.len() as f64 / entries.len() as f64;
            if coverage < min_coverage {
                return Err(Error::MissingPredictions {
                    model_id: set.model_id.clone(),
                    language: lang.to_string(),
                    covered: covered.len(),
                    total: entries.len(),
                });
            }
            if covered.is_empty() {
                continue;
            }
            let scores = std::thread::scope(|scope| {
                let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
                let chunk = covered.len().div_ceil(workers).max(16);
                let handles: Vec<_> = covered
                    .chunks(chunk)
                    .map(|part| {
                        scope.spawn(move || {
                            part.iter()
                                .map(|(e, pred)| {
                                    let gold = tokenize(&e.gold_transcript)?.flatten();
                                    let pred = tokenize_flat(pred);
                                    pfer_flat(&e.utterance_id, &e.language_code, &gold, &pred, cost)
                                })
                                .collect::<Result<Vec<_>>>()
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("scoring worker panicked"))
                    .collect::<Result<Vec<Vec<_>>>>()
            })?;
            let scores: Vec<UtteranceScore> = scores.into_iter().flatten().collect();
            langs.insert(lang.to_string(), aggregate_language(&scores)?);
            utterances.extend(scores.into_iter().map(|score| ModelUtteranceScore {
                model_id: set.model_id.clone(),
                score,
            }));
        }
        per_model.insert(set.model_id.clone(), langs);
    }
    let correlations = correlations(&per_model);
    Ok(LanguageScores {
        per_model,
        correlations,
        utterances,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub quantile: f64,
    /// Per-model threshold on median normalized PFER; `None` when the
    /// quantile is 0 and no bound applies.
    pub thresholds: BTreeMap<String, Option<f64>>,
    /// Selected languages, sorted.
    pub selected: Vec<String>,
    /// For each selected language, the models whose threshold it exceeds.
    pub exceeded_by: BTreeMap<String, Vec<String>>,
}

/// Picks languages whose median normalized PFER is strictly above the
/// `quantile` of that model's per-language medians, for any model.
///
/// `quantile = 0` places no lower bound and selects every scored language.
pub fn select_audit_languages(scores: &LanguageScores, quantile_p: f64) -> Result<Selection> {
    if !(0.0..1.0).contains(&quantile_p) {
        return Err(Error::Domain(format!("quantile {quantile_p} outside [0, 1)")));
    }
    let mut thresholds = BTreeMap::new();
    let mut exceeded_by: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (model, langs) in &scores.per_model {
        if langs.is_empty() {
            continue;
        }
        let medians: Vec<f64> = langs.values().map(|a| a.median_pfer).collect();
        let threshold = (quantile_p > 0.0).then(|| quantile(&medians, quantile_p));
        thresholds.insert(model.clone(), threshold);
        for (lang, agg) in langs {
            if threshold.is_none_or(|t| agg.median_pfer > t) {
                exceeded_by.entry(lang.clone()).or_default().push(model.clone());
            }
        }
    }
    Ok(Selection {
        quantile: quantile_p,
        thresholds,
        selected: exceeded_by.keys().cloned().collect(),
        exceeded_by,
    })
}
