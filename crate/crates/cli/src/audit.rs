//! `audit` subcommands: score, select, sample, verdict, filter.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use phonaudit_core::jsonl;
use phonaudit_core::pipeline::{
    compile_report, filter_manifest, merge_task_files, sample_campaign, score_languages, select_audit_languages,
    write_task_files, AuditConfig, AuditReport, DatasetManifest, LanguageScores, ModelTranscriptSet, Selection,
};
use phonaudit_core::{CostModel, FeatureTable, PreferenceRecord};
use serde::Serialize;

#[derive(Args)]
pub struct ConfigArgs {
    /// AuditConfig JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quantile: Option<f64>,
    /// Tasks per audited language.
    #[arg(long)]
    n: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<AuditConfig> {
        let mut c = match &self.config {
            Some(p) => AuditConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => AuditConfig::default(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(q) = self.quantile {
            c.quantile = q;
        }
        if let Some(n) = self.n {
            c.n = n;
        }
        Ok(c)
    }
}

#[derive(Subcommand)]
pub enum Step {
    /// Per-language PFER aggregates for every model, plus correlations.
    Score {
        manifest: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Languages above the error quantile of any model.
    Select {
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Blind tasks for the selected languages, using each language's best model.
    Sample {
        manifest: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        selection: PathBuf,
        /// Annotator-facing task file.
        #[arg(long)]
        tasks: PathBuf,
        /// Resolution key file.
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Resolve records against the key and run the preference test.
    Verdict {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        key: PathBuf,
        /// Record files; may be repeated.
        #[arg(long, required = true)]
        records: Vec<PathBuf>,
        /// Scores to attach as metric aggregates.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Full report (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Also write the verdicts alone as a JSON array.
        #[arg(long)]
        verdicts: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Drop every entry of the flagged languages.
    Filter {
        manifest: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    jsonl::write_bytes_atomic(path, &bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_models(path: &Path, manifest: &DatasetManifest) -> Result<Vec<ModelTranscriptSet>> {
    let sets = ModelTranscriptSet::load_all(path)?;
    for s in &sets {
        s.validate_against(manifest)?;
    }
    Ok(sets)
}

pub fn run(step: Step, table: Arc<FeatureTable>) -> Result<()> {
    match step {
        Step::Score { manifest, pred, out, cfg } => {
            let cfg = cfg.resolve()?;
            let manifest = DatasetManifest::load(&manifest)?;
            let models = load_models(&pred, &manifest)?;
            let cost = CostModel::new(table).with_indel_cost(cfg.indel_cost);
            let scores = score_languages(&manifest, &models, &cost, cfg.min_coverage)?;
            write_json(&out, &scores)?;
            for pair in &scores.correlations {
                match pair.correlation {
                    Some(r) => eprintln!("r({}, {}) = {r:.4} over {} languages", pair.model_a, pair.model_b, pair.n_languages),
                    None => eprintln!("r({}, {}) undefined", pair.model_a, pair.model_b),
                }
            }
        }
        Step::Select { scores, out, cfg } => {
            let cfg = cfg.resolve()?;
            let scores: LanguageScores = read_json(&scores)?;
            let selection = select_audit_languages(&scores, cfg.quantile)?;
            write_json(&out, &selection)?;
            eprintln!("selected {} of {} languages", selection.selected.len(), scores.languages().len());
        }
        Step::Sample { manifest, pred, scores, selection, tasks, key, cfg } => {
            let cfg = cfg.resolve()?;
            let manifest = DatasetManifest::load(&manifest)?;
            let models = load_models(&pred, &manifest)?;
            let scores: LanguageScores = read_json(&scores)?;
            let selection: Selection = read_json(&selection)?;
            let best = scores.best_models();
            let assignments = selection
                .selected
                .iter()
                .map(|l| Ok((l.clone(), best.get(l).cloned().with_context(|| format!("no scores for {l}"))?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let cost = CostModel::new(table).with_indel_cost(cfg.indel_cost);
            let sampled = sample_campaign(&manifest, &assignments, &models, cfg.n, cfg.seed, &cost)?;
            write_task_files(&sampled, &tasks, &key)?;
            eprintln!("{} tasks over {} languages", sampled.len(), assignments.len());
        }
        Step::Verdict { tasks, key, records, scores, out, verdicts, cfg } => {
            let cfg = cfg.resolve()?;
            let tasks = merge_task_files(&tasks, &key)?;
            let mut all: Vec<PreferenceRecord> = Vec::new();
            for path in &records {
                all.extend(jsonl::read::<PreferenceRecord>(path)?);
            }
            let mut report = compile_report(&tasks, &all, &cfg.test)?;
            if let Some(path) = scores {
                report.attach_metrics(&read_json(&path)?);
            }
            write_json(&out, &report)?;
            if let Some(path) = verdicts {
                write_json(&path, &report.verdicts())?;
            }
            eprintln!(
                "{} audited, {} flagged, {} pending",
                report.audited_languages.len(),
                report.flagged_languages.len(),
                report.pending_languages.len()
            );
        }
        Step::Filter { manifest, report, out } => {
            let manifest = DatasetManifest::load(&manifest)?;
            let report: AuditReport = read_json(&report)?;
            if !report.pending_languages.is_empty() {
                bail!("report still has pending languages: {:?}", report.pending_languages);
            }
            let (filtered, summary) = filter_manifest(&manifest, &report)?;
            filtered.save(&out)?;
            eprintln!(
                "removed {} entries of {:?}; kept {} languages",
                summary.removed_entries,
                summary.removed_languages,
                summary.kept.len()
            );
            for (lang, n) in &summary.kept {
                eprintln!("  {lang}\t{n}");
            }
        }
    }
    Ok(())
}
