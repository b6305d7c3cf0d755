//! Transcript- and corpus-level error metrics.
//!
//! All metrics run over flattened phone sequences; word boundaries are
//! ignored. Quantiles (median, quartiles, selection thresholds) use linear
//! interpolation between closest ranks: for sorted values `x[0..n]` and
//! probability `q`, `h = (n - 1) q` and the result is
//! `x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h])`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::align::{align, AlignmentPath, CostModel};
use crate::error::{Error, Result};
use crate::inventory::{Phone, Transcript};

pub const QUANTILE_RULE: &str = "linear interpolation between closest ranks, h = (n - 1) * q";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceScore {
    pub utterance_id: String,
    #[serde(default)]
    pub language_code: String,
    pub pfer_raw: f64,
    pub pfer_normalized: f64,
    pub gold_length: usize,
}

/// Phonetic feature error rate of one utterance: the total alignment cost,
/// and that cost divided by the gold length.
pub fn pfer(gold: &Transcript, pred: &Transcript, cost: &CostModel) -> Result<UtteranceScore> {
    let gold_flat = gold.flatten();
    let pred_flat = pred.flatten();
    pfer_flat(&gold.utterance_id, &gold.language_code, &gold_flat, &pred_flat, cost)
}

pub fn pfer_flat(
    utterance_id: &str,
    language_code: &str,
    gold: &[Phone],
    pred: &[Phone],
    cost: &CostModel,
) -> Result<UtteranceScore> {
    if gold.is_empty() {
        return Err(Error::EmptyGold);
    }
    let path = align(gold, pred, cost);
    Ok(UtteranceScore {
        utterance_id: utterance_id.to_string(),
        language_code: language_code.to_string(),
        pfer_raw: path.total_cost,
        pfer_normalized: path.total_cost / gold.len() as f64,
        gold_length: gold.len(),
    })
}

/// What a gold phone was aligned to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AlignedLabel {
    Phone(String),
    Gap,
}

impl fmt::Display for AlignedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlignedLabel::Phone(p) => f.write_str(p),
            AlignedLabel::Gap => f.write_str("-"),
        }
    }
}

impl Serialize for AlignedLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AlignedLabel::Phone(p) => s.serialize_some(p),
            AlignedLabel::Gap => s.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for AlignedLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match Option::<String>::deserialize(d)? {
            Some(p) => AlignedLabel::Phone(p),
            None => AlignedLabel::Gap,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhoneErrorProfile {
    pub phone: String,
    pub occurrence_count: u64,
    /// Mean step cost over all gold occurrences (expected phone error).
    pub expected_error: f64,
    pub majority_label: AlignedLabel,
    pub recall: f64,
}

#[derive(Debug, Default, Clone)]
struct Occurrences {
    count: u64,
    cost_sum: f64,
    exact: u64,
    labels: BTreeMap<AlignedLabel, u64>,
}

/// Accumulates per-occurrence alignment outcomes for gold phones.
///
/// Every occurrence counts once; there is no per-utterance averaging.
#[derive(Debug, Clone)]
pub struct PhoneProfiler<'a> {
    cost: &'a CostModel,
    targets: Option<Vec<String>>,
    acc: HashMap<String, Occurrences>,
    total_cost: f64,
}

impl<'a> PhoneProfiler<'a> {
    /// Profiles every gold phone.
    pub fn all(cost: &'a CostModel) -> Self {
        Self {
            cost,
            targets: None,
            acc: HashMap::new(),
            total_cost: 0.0,
        }
    }

    /// Profiles only the given phones.
    pub fn for_phones<'p>(cost: &'a CostModel, phones: impl IntoIterator<Item = &'p Phone>) -> Self {
        Self {
            cost,
            targets: Some(phones.into_iter().map(|p| p.surface().to_string()).collect()),
            acc: HashMap::new(),
            total_cost: 0.0,
        }
    }

    pub fn add_pair(&mut self, gold: &[Phone], pred: &[Phone]) -> AlignmentPath {
        let path = align(gold, pred, self.cost);
        self.add_path(gold, pred, &path);
        path
    }

    pub fn add_path(&mut self, gold: &[Phone], pred: &[Phone], path: &AlignmentPath) {
        self.total_cost += path.total_cost;
        for step in &path.steps {
            let Some(g) = step.gold_index else { continue };
            let surface = gold[g].surface();
            if let Some(targets) = &self.targets {
                if !targets.iter().any(|t| t == surface) {
                    continue;
                }
            }
            let label = match step.pred_index {
                Some(j) => AlignedLabel::Phone(pred[j].surface().to_string()),
                None => AlignedLabel::Gap,
            };
            let entry = self.acc.entry(surface.to_string()).or_default();
            entry.count += 1;
            entry.cost_sum += step.cost;
            if matches!(&label, AlignedLabel::Phone(p) if p == surface) {
                entry.exact += 1;
            }
            *entry.labels.entry(label).or_default() += 1;
        }
    }

    /// Sum of total alignment costs over every pair added so far.
    pub fn total_cost(&self) -> f64 {
        self.total_cost
    }

    pub fn profile(&self, phone: &str) -> Result<PhoneErrorProfile> {
        let occ = self
            .acc
            .get(phone)
            .filter(|o| o.count > 0)
            .ok_or_else(|| Error::PhoneNotFound(phone.to_string()))?;
        // highest count wins; ties go to the smallest label, phones before gap
        let mut majority = None;
        let mut best = 0;
        for (label, &n) in &occ.labels {
            if n > best {
                best = n;
                majority = Some(label.clone());
            }
        }
        Ok(PhoneErrorProfile {
            phone: phone.to_string(),
            occurrence_count: occ.count,
            expected_error: occ.cost_sum / occ.count as f64,
            majority_label: majority.expect("at least one occurrence"),
            recall: occ.exact as f64 / occ.count as f64,
        })
    }

    /// Profiles of every phone seen, most frequent first.
    pub fn profiles(&self) -> Vec<PhoneErrorProfile> {
        let mut phones: Vec<(&String, u64)> = self.acc.iter().map(|(p, o)| (p, o.count)).collect();
        phones.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        phones.into_iter().filter_map(|(p, _)| self.profile(p).ok()).collect()
    }
}

pub fn expected_phone_error(
    corpus: &[(Transcript, Transcript)],
    phone: &Phone,
    cost: &CostModel,
) -> Result<PhoneErrorProfile> {
    let mut profiler = PhoneProfiler::for_phones(cost, [phone]);
    for (gold, pred) in corpus {
        profiler.add_pair(&gold.flatten(), &pred.flatten());
    }
    profiler.profile(phone.surface())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallEntry {
    pub recall: f64,
    pub occurrences: u64,
}

/// Exact-surface recall for each requested phone. Fails on the first
/// requested phone (in sorted order) that never occurs in gold.
pub fn phone_recall(
    corpus: &[(Transcript, Transcript)],
    phones: &[Phone],
    cost: &CostModel,
) -> Result<BTreeMap<String, RecallEntry>> {
    let mut profiler = PhoneProfiler::for_phones(cost, phones);
    for (gold, pred) in corpus {
        profiler.add_pair(&gold.flatten(), &pred.flatten());
    }
    let mut wanted: Vec<&str> = phones.iter().map(Phone::surface).collect();
    wanted.sort_unstable();
    wanted.dedup();
    wanted
        .into_iter()
        .map(|p| {
            let profile = profiler.profile(p)?;
            Ok((
                p.to_string(),
                RecallEntry {
                    recall: profile.recall,
                    occurrences: profile.occurrence_count,
                },
            ))
        })
        .collect()
}

/// Quantile of already sorted values under [`QUANTILE_RULE`].
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    assert!((0.0..=1.0).contains(&q), "quantile probability must lie in [0, 1]");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageAggregate {
    pub language_code: String,
    pub n_utterances: usize,
    /// Median and interquartile range of length-normalized PFER.
    pub median_pfer: f64,
    pub iqr_pfer: f64,
    /// Same statistics over raw (unnormalized) PFER.
    pub median_pfer_raw: f64,
    pub iqr_pfer_raw: f64,
}

fn median_iqr(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let median = quantile_sorted(&v, 0.5);
    let iqr = quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25);
    (median, iqr)
}

/// Median and IQR over a language's utterances. The language code is taken
/// from the first score.
pub fn aggregate_language(scores: &[UtteranceScore]) -> Result<LanguageAggregate> {
    let first = scores.first().ok_or(Error::EmptyScoreList)?;
    let (median_pfer, iqr_pfer) = median_iqr(scores.iter().map(|s| s.pfer_normalized));
    let (median_pfer_raw, iqr_pfer_raw) = median_iqr(scores.iter().map(|s| s.pfer_raw));
    Ok(LanguageAggregate {
        language_code: first.language_code.clone(),
        n_utterances: scores.len(),
        median_pfer,
        iqr_pfer,
        median_pfer_raw,
        iqr_pfer_raw,
    })
}

/// Pearson correlation; `None` for fewer than two points or zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len(), "correlation needs paired samples");
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
