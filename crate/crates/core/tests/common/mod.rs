//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use phonaudit_core::pipeline::AnnotationTask;
use phonaudit_core::{Choice, FeatureTable, Phone, PreferenceRecord};

/// Binomial CDF by exact enumeration with p = num/den.
pub fn exact_binom_cdf(k: i64, n: u64, num: u64, den: u64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let p = BigRational::new(BigInt::from(num), BigInt::from(den));
    let q = BigRational::one() - &p;
    let mut total = BigRational::zero();
    let mut coeff = BigInt::one();
    for j in 0..=(k as u64).min(n) {
        if j > 0 {
            coeff = coeff * BigInt::from(n - j + 1) / BigInt::from(j);
        }
        let mut term = BigRational::from_integer(coeff.clone());
        for _ in 0..j {
            term *= &p;
        }
        for _ in 0..(n - j) {
            term *= &q;
        }
        total += term;
    }
    total.to_f64().unwrap()
}

/// Feature distance read straight from the table, in units of 1/24.
fn sub_units(table: &FeatureTable, a: &Phone, b: &Phone) -> u64 {
    if a.surface() == b.surface() {
        return 0;
    }
    match (table.get(a.surface()), table.get(b.surface())) {
        (Some(x), Some(y)) => x.values().iter().zip(y.values()).filter(|(u, v)| u != v).count() as u64,
        _ => 24,
    }
}

/// Minimum alignment cost over every monotone alignment, enumerated
/// explicitly, in units of 1/24 (indels cost 24).
pub fn brute_force_cost_units(table: &FeatureTable, gold: &[Phone], pred: &[Phone]) -> u64 {
    fn go(table: &FeatureTable, g: &[Phone], p: &[Phone], acc: u64, best: &mut u64) {
        if g.is_empty() && p.is_empty() {
            *best = (*best).min(acc);
            return;
        }
        if !g.is_empty() && !p.is_empty() {
            go(table, &g[1..], &p[1..], acc + sub_units(table, &g[0], &p[0]), best);
        }
        if !g.is_empty() {
            go(table, &g[1..], p, acc + 24, best);
        }
        if !p.is_empty() {
            go(table, g, &p[1..], acc + 24, best);
        }
    }
    let mut best = u64::MAX;
    go(table, gold, pred, 0, &mut best);
    best
}

pub fn phones(symbols: &[&str]) -> Vec<Phone> {
    symbols.iter().map(|s| Phone::parse(s).unwrap()).collect()
}

/// Hand-scored utterances: (gold, prediction, optimal raw cost in 1/24).
/// Costs were frozen from an independent brute-force aligner over the
/// bundled feature table.
pub const FIVE_UTTERANCES: [(&str, &str, u64); 5] = [
    ("ðə kæt", "dəkat", 3),
    ("tuflaɪ", "tuflaI", 24),
    ("kʰʲaː", "kaː", 1),
    ("ʃip", "sibə", 27),
    ("ǁa ǀo", "ǁaʔo", 9),
];

/// Gold-preference counts out of 20 for 22 audited languages. Four values
/// are documented; the rest are synthetic, with five of them flagged so
/// that the total matches the ten rejected languages.
pub const VERDICT_COUNTS: [(&str, u64); 22] = [
    ("arz", 0),
    ("mal", 2),
    ("dan", 3),
    ("gla", 4),
    ("snd", 5),
    ("x01", 1),
    ("x02", 3),
    ("x03", 4),
    ("x04", 5),
    ("x05", 5),
    ("eng", 12),
    ("x06", 6),
    ("x07", 7),
    ("x08", 8),
    ("x09", 9),
    ("x10", 10),
    ("x11", 11),
    ("x12", 13),
    ("x13", 14),
    ("x14", 15),
    ("x15", 17),
    ("x16", 19),
];

/// 20 tasks per language with alternating positions, plus one forced-choice
/// record per task reproducing `gold` gold preferences.
pub fn tasks_and_records(counts: &[(&str, u64)]) -> (Vec<AnnotationTask>, Vec<PreferenceRecord>) {
    let mut tasks = Vec::new();
    let mut records = Vec::new();
    for (lang, gold) in counts {
        for i in 0..20u64 {
            let a_is_gold = i % 2 == 0;
            let task_id = format!("{lang}-{:03}", i + 1);
            tasks.push(AnnotationTask {
                task_id: task_id.clone(),
                language_code: lang.to_string(),
                utterance_id: format!("{lang}_{i}"),
                audio_path: format!("audio/{lang}_{i}.wav"),
                transcript_a: "a".into(),
                transcript_b: "b".into(),
                a_is_gold,
                model_id: "m".into(),
            });
            let prefer_gold = i < *gold;
            let choice = match (prefer_gold, a_is_gold) {
                (true, true) | (false, false) => Choice::PreferA,
                _ => Choice::PreferB,
            };
            records.push(PreferenceRecord::new(task_id, "ann1", choice));
        }
    }
    (tasks, records)
}

pub mod corpus {
    use std::collections::BTreeMap;
    use std::path::{Path, PathBuf};

    use phonaudit_core::jsonl;
    use phonaudit_core::pipeline::{
        compile_report, filter_manifest, sample_campaign, score_languages, select_audit_languages, write_task_files,
        AuditConfig, DatasetManifest, ManifestEntry, ModelTranscriptSet,
    };
    use phonaudit_core::rng::SplitMix64;
    use phonaudit_core::{Choice, CostModel, PreferenceRecord};

    pub const ALPHABET: [&str; 12] = ["p", "b", "t", "d", "k", "ɡ", "s", "ʃ", "a", "i", "u", "ə"];

    fn word(rng: &mut SplitMix64) -> String {
        let len = 2 + rng.below(4) as usize;
        (0..len).map(|_| ALPHABET[rng.below(ALPHABET.len() as u64) as usize]).collect()
    }

    /// Gold utterance as space-separated words.
    pub fn utterance(rng: &mut SplitMix64) -> String {
        let words = 1 + rng.below(3) as usize;
        (0..words).map(|_| word(rng)).collect::<Vec<_>>().join(" ")
    }

    /// Unsegmented prediction: each gold phone is kept, substituted or
    /// dropped, with `rate_pct` percent of phones altered.
    pub fn corrupt(rng: &mut SplitMix64, gold: &str, rate_pct: u64) -> String {
        let mut out = String::new();
        for phone in phonaudit_core::inventory::tokenize_flat(gold) {
            if rng.below(100) < rate_pct {
                match rng.below(3) {
                    0 => {}
                    1 => out.push_str(ALPHABET[rng.below(ALPHABET.len() as u64) as usize]),
                    _ => {
                        out.push_str(phone.surface());
                        out.push_str(ALPHABET[rng.below(ALPHABET.len() as u64) as usize]);
                    }
                }
            } else {
                out.push_str(phone.surface());
            }
        }
        if out.is_empty() {
            out.push('a');
        }
        out
    }

    /// `n_langs` languages of `per_lang` utterances, with two models whose
    /// error rate grows with the language index.
    pub fn synthetic(n_langs: usize, per_lang: usize, seed: u64) -> (DatasetManifest, Vec<ModelTranscriptSet>) {
        let mut rng = SplitMix64::new(seed);
        let mut entries = Vec::new();
        let mut a = ModelTranscriptSet::new("model-a");
        let mut b = ModelTranscriptSet::new("model-b");
        for l in 0..n_langs {
            let lang = format!("l{l:02}");
            for u in 0..per_lang {
                let id = format!("{lang}_{u:03}");
                let gold = utterance(&mut rng);
                let rate_a = 3 + 2 * l as u64;
                let rate_b = 5 + (2 * l as u64 + 7 * (l as u64 % 3)) % 40;
                a.entries.insert(id.clone(), corrupt(&mut rng, &gold, rate_a));
                b.entries.insert(id.clone(), corrupt(&mut rng, &gold, rate_b));
                entries.push(ManifestEntry {
                    utterance_id: id.clone(),
                    language_code: lang.clone(),
                    audio_path: format!("audio/{id}.wav"),
                    gold_transcript: gold,
                    duration_s: 1.0 + u as f64 / 10.0,
                });
            }
        }
        (DatasetManifest::new(entries).unwrap(), vec![a, b])
    }

    /// Deterministic simulated annotator: prefers gold unless the language
    /// index is high, with abstentions sprinkled in.
    pub fn simulate_records(tasks: &[phonaudit_core::pipeline::AnnotationTask], seed: u64) -> Vec<PreferenceRecord> {
        tasks
            .iter()
            .map(|t| {
                let mut rng = SplitMix64::for_label(seed, &t.task_id);
                let idx: u64 = t.language_code[1..].parse().unwrap_or(0);
                let roll = rng.below(100);
                let gold_pct = if idx >= 12 { 15 } else { 80 };
                let choice = if roll < 5 {
                    Choice::TieGood
                } else if roll < 5 + gold_pct {
                    if t.a_is_gold { Choice::PreferA } else { Choice::PreferB }
                } else if t.a_is_gold {
                    Choice::PreferB
                } else {
                    Choice::PreferA
                };
                PreferenceRecord::new(t.task_id.clone(), "sim", choice)
            })
            .collect()
    }

    /// Runs score, select, sample, report and filter, writing every artifact
    /// into `dir`. Returns the written paths.
    pub fn run_pipeline(dir: &Path, config: &AuditConfig) -> Vec<PathBuf> {
        let (manifest, models) = synthetic(15, 25, 99);
        let cost = CostModel::bundled().with_indel_cost(config.indel_cost);
        let scores = score_languages(&manifest, &models, &cost, config.min_coverage).unwrap();
        let selection = select_audit_languages(&scores, config.quantile).unwrap();
        let best = scores.best_models();
        let assignments: BTreeMap<String, String> =
            selection.selected.iter().map(|l| (l.clone(), best[l].clone())).collect();
        let tasks = sample_campaign(&manifest, &assignments, &models, config.n, config.seed, &cost).unwrap();
        let paths: Vec<PathBuf> = ["scores.json", "selection.json", "tasks.jsonl", "key.jsonl", "report.json", "filtered.jsonl"]
            .iter()
            .map(|f| dir.join(f))
            .collect();
        std::fs::write(&paths[0], serde_json::to_string_pretty(&scores).unwrap()).unwrap();
        std::fs::write(&paths[1], serde_json::to_string_pretty(&selection).unwrap()).unwrap();
        write_task_files(&tasks, &paths[2], &paths[3]).unwrap();
        let records = simulate_records(&tasks, config.seed);
        jsonl::write_atomic(dir.join("records.jsonl"), &records).unwrap();
        let mut report = compile_report(&tasks, &records, &config.test).unwrap();
        report.attach_metrics(&scores);
        std::fs::write(&paths[4], report.to_json_pretty().unwrap()).unwrap();
        let (filtered, _) = filter_manifest(&manifest, &report).unwrap();
        filtered.save(&paths[5]).unwrap();
        paths
    }
}
