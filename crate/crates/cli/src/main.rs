//! `phonaudit`: census, normalization, benchmarking, power analysis and
//! audit campaigns over phonetic transcript corpora.

mod audit;
mod output;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use phonaudit_core::inventory::{tokenize_flat, Category};
use phonaudit_core::metrics::{aggregate_language, PhoneProfiler, QUANTILE_RULE};
use phonaudit_core::pipeline::{DatasetManifest, ModelTranscriptSet};
use phonaudit_core::{
    agreement, align, census, normalize, sample_size_table, tokenize, CostModel, FeatureTable, PreferenceRecord,
    ReplacementMap, TestConfig, UtteranceScore,
};

#[derive(Parser)]
#[command(name = "phonaudit", version, about = "Audit phonetic transcript corpora")]
struct Cli {
    /// Feature table TSV replacing the bundled one.
    #[arg(long, global = true)]
    features: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count phones per validity category.
    Census {
        manifest: PathBuf,
        /// Directory for census_categories.csv and census_phones.csv;
        /// without it the category table goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a replacement map to every gold transcript.
    Normalize {
        manifest: PathBuf,
        /// JSON object mapping invalid phones to their replacements.
        #[arg(long)]
        map: PathBuf,
        /// Normalized manifest (JSONL).
        #[arg(long)]
        out: PathBuf,
    },
    /// Score one model's predictions against gold and write metric CSVs.
    Benchmark(BenchmarkArgs),
    /// Align two transcripts and print the path as TSV.
    Align {
        gold: String,
        pred: String,
        #[arg(long, default_value_t = 1.0)]
        indel_cost: f64,
    },
    /// Critical values and power of the preference test, as TSV.
    Power {
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        theta_null: f64,
        #[arg(long, default_value_t = 0.2)]
        theta_alt: f64,
        #[arg(long, default_value_t = 5)]
        n_min: u64,
        #[arg(long, default_value_t = 95)]
        n_max: u64,
        #[arg(long, default_value_t = 5)]
        n_step: u64,
    },
    /// Audit campaign steps.
    Audit {
        #[command(subcommand)]
        step: audit::Step,
    },
    /// Proportion of shared tasks on which two record files agree.
    Agreement { first: PathBuf, second: PathBuf },
    /// Run the annotation HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
        #[arg(long, default_value = "annotation-data")]
        data_dir: PathBuf,
        /// Manifest whose audio files are served.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Base directory for relative audio paths.
        #[arg(long)]
        audio_root: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BenchmarkArgs {
    manifest: PathBuf,
    /// Model transcripts JSONL.
    #[arg(long)]
    pred: PathBuf,
    /// Model to score when the file holds several.
    #[arg(long)]
    model: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Restrict the per-phone table to these phones (comma separated).
    #[arg(long, value_delimiter = ',')]
    phones: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    indel_cost: f64,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_table(path: &Option<PathBuf>) -> Result<std::sync::Arc<FeatureTable>> {
    Ok(match path {
        Some(p) => std::sync::Arc::new(FeatureTable::from_path(p).with_context(|| format!("loading {}", p.display()))?),
        None => FeatureTable::bundled(),
    })
}

fn run(cli: Cli) -> Result<()> {
    let table = load_table(&cli.features)?;
    match cli.command {
        Command::Census { manifest, out } => cmd_census(&manifest, out, &table),
        Command::Normalize { manifest, map, out } => cmd_normalize(&manifest, &map, &out, &table),
        Command::Benchmark(args) => cmd_benchmark(args, table),
        Command::Align { gold, pred, indel_cost } => {
            let cost = CostModel::new(table).with_indel_cost(indel_cost);
            let g = tokenize_flat(&gold);
            let p = tokenize_flat(&pred);
            let path = align(&g, &p, &cost);
            path.write_tsv(&g, &p, std::io::stdout().lock())?;
            eprintln!("total cost {:.6}", path.total_cost);
            Ok(())
        }
        Command::Power { alpha, theta_null, theta_alt, n_min, n_max, n_step } => {
            if n_step == 0 || n_min == 0 || n_min > n_max {
                bail!("need 0 < n-min <= n-max and n-step > 0");
            }
            let config = TestConfig { alpha, theta_null, theta_alt, ..TestConfig::default() };
            let ns: Vec<u64> = (n_min..=n_max).step_by(n_step as usize).collect();
            let rows = sample_size_table(&config, &ns)?;
            output::write_power_tsv(&rows, std::io::stdout().lock())
        }
        Command::Audit { step } => audit::run(step, table),
        Command::Agreement { first, second } => {
            let a: Vec<PreferenceRecord> = phonaudit_core::jsonl::read(&first)?;
            let b: Vec<PreferenceRecord> = phonaudit_core::jsonl::read(&second)?;
            let value = agreement(&a, &b)?;
            let same = (value * a.len() as f64).round() as usize;
            println!("{same}/{} = {value}", a.len());
            Ok(())
        }
        Command::Serve { addr, data_dir, manifest, audio_root } => {
            let config = phonaudit_service::ServiceConfig { data_dir, manifest, audio_root };
            let state = phonaudit_service::AppState::open(&config)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(phonaudit_service::serve(addr, state))?;
            Ok(())
        }
    }
}

fn cmd_census(manifest: &PathBuf, out: Option<PathBuf>, table: &FeatureTable) -> Result<()> {
    let manifest = DatasetManifest::load(manifest)?;
    let corpus = manifest
        .entries()
        .iter()
        .map(|e| tokenize(&e.gold_transcript).with_context(|| format!("utterance {}", e.utterance_id)))
        .collect::<Result<Vec<_>>>()?;
    let counts = census(&corpus, table);
    match out {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            counts.write_category_csv(std::fs::File::create(dir.join("census_categories.csv"))?)?;
            counts.write_phone_csv(std::fs::File::create(dir.join("census_phones.csv"))?)?;
            let invalid = counts.category(Category::Invalid);
            eprintln!(
                "{} tokens, {} types, {} invalid tokens",
                counts.total_tokens(),
                counts.total_types(),
                invalid.token_count
            );
        }
        None => counts.write_category_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_normalize(manifest: &PathBuf, map: &PathBuf, out: &PathBuf, table: &FeatureTable) -> Result<()> {
    let manifest = DatasetManifest::load(manifest)?;
    let map = ReplacementMap::from_path(map, table)?;
    let mut applied: std::collections::BTreeMap<(String, String), u64> = Default::default();
    let mut unmapped: std::collections::BTreeMap<String, u64> = Default::default();
    let mut entries = Vec::with_capacity(manifest.len());
    for e in manifest.entries() {
        let t = tokenize(&e.gold_transcript).with_context(|| format!("utterance {}", e.utterance_id))?;
        let outcome = normalize(&t, &map, table);
        for r in &outcome.applied {
            *applied.entry((r.source.clone(), r.target.clone())).or_default() += r.count;
        }
        for (p, n) in outcome.unmapped {
            *unmapped.entry(p).or_default() += n;
        }
        let mut e = e.clone();
        e.gold_transcript = outcome.transcript.render();
        entries.push(e);
    }
    DatasetManifest::new(entries)?.save(out)?;
    for ((s, t), n) in &applied {
        eprintln!("applied {s} -> {t}: {n}");
    }
    for (p, n) in &unmapped {
        eprintln!("warning: invalid phone {p} left unmapped ({n} tokens)");
    }
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs, table: std::sync::Arc<FeatureTable>) -> Result<()> {
    let manifest = DatasetManifest::load(&args.manifest)?;
    let sets = ModelTranscriptSet::load_all(&args.pred)?;
    let set = match (&args.model, sets.len()) {
        (Some(m), _) => sets.iter().find(|s| &s.model_id == m).with_context(|| format!("no model {m}"))?,
        (None, 1) => &sets[0],
        (None, n) => bail!("{n} models in {}; pick one with --model", args.pred.display()),
    };
    set.validate_against(&manifest)?;
    let cost = CostModel::new(table).with_indel_cost(args.indel_cost);

    let mut scores = Vec::new();
    let mut profiler = if args.phones.is_empty() {
        PhoneProfiler::all(&cost)
    } else {
        let phones = args
            .phones
            .iter()
            .map(|p| phonaudit_core::Phone::parse(p))
            .collect::<phonaudit_core::Result<Vec<_>>>()?;
        PhoneProfiler::for_phones(&cost, &phones)
    };
    for e in manifest.entries() {
        let Some(pred) = set.get(&e.utterance_id) else {
            log::warn!("no prediction for {}", e.utterance_id);
            continue;
        };
        let gold = tokenize_flat(&e.gold_transcript);
        if gold.is_empty() {
            bail!("utterance {} has an empty gold transcript", e.utterance_id);
        }
        let path = profiler.add_pair(&gold, &tokenize_flat(pred));
        scores.push(UtteranceScore {
            utterance_id: e.utterance_id.clone(),
            language_code: e.language_code.clone(),
            pfer_raw: path.total_cost,
            pfer_normalized: path.total_cost / gold.len() as f64,
            gold_length: gold.len(),
        });
    }
    let mut by_lang: std::collections::BTreeMap<&str, Vec<_>> = Default::default();
    for s in &scores {
        by_lang.entry(s.language_code.as_str()).or_default().push(s.clone());
    }
    let aggregates = by_lang.values().map(|v| aggregate_language(v)).collect::<phonaudit_core::Result<Vec<_>>>()?;

    std::fs::create_dir_all(&args.out)?;
    output::write_utterance_csv(&scores, std::fs::File::create(args.out.join("utterances.csv"))?)?;
    output::write_language_csv(&aggregates, QUANTILE_RULE, std::fs::File::create(args.out.join("languages.csv"))?)?;
    output::write_phone_csv(&profiler.profiles(), std::fs::File::create(args.out.join("phones.csv"))?)?;
    eprintln!("scored {} utterances in {} languages", scores.len(), aggregates.len());
    Ok(())
}
