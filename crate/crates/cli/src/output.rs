//! CSV and TSV writers.

use std::io::Write;

use anyhow::Result;
use phonaudit_core::{LanguageAggregate, PhoneErrorProfile, PowerRow, UtteranceScore};

pub fn write_power_tsv<W: Write>(rows: &[PowerRow], mut w: W) -> Result<()> {
    writeln!(w, "n\tk\tpower\ttype1")?;
    for r in rows {
        writeln!(w, "{}\t{}\t{:.6}\t{:.6}", r.n, r.k, r.power, r.type1)?;
    }
    Ok(())
}

pub fn write_utterance_csv<W: Write>(scores: &[UtteranceScore], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["language", "utterance_id", "pfer_raw", "pfer_normalized"])?;
    for s in scores {
        out.write_record([
            s.language_code.clone(),
            s.utterance_id.clone(),
            format!("{:.6}", s.pfer_raw),
            format!("{:.6}", s.pfer_normalized),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Per-language table. The leading comment states the quantile rule; the
/// unsuffixed median and iqr columns are over normalized PFER.
pub fn write_language_csv<W: Write>(aggs: &[LanguageAggregate], rule: &str, mut w: W) -> Result<()> {
    writeln!(w, "# quantiles: {rule}")?;
    writeln!(w, "# median, iqr: length-normalized PFER; median_raw, iqr_raw: summed step cost")?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["language", "median", "iqr", "n", "median_raw", "iqr_raw"])?;
    for a in aggs {
        out.write_record([
            a.language_code.clone(),
            format!("{:.6}", a.median_pfer),
            format!("{:.6}", a.iqr_pfer),
            a.n_utterances.to_string(),
            format!("{:.6}", a.median_pfer_raw),
            format!("{:.6}", a.iqr_pfer_raw),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Per-phone table, most frequent first.
pub fn write_phone_csv<W: Write>(profiles: &[PhoneErrorProfile], w: W) -> Result<()> {
    let mut sorted: Vec<&PhoneErrorProfile> = profiles.iter().collect();
    sorted.sort_by(|a, b| b.occurrence_count.cmp(&a.occurrence_count).then_with(|| a.phone.cmp(&b.phone)));
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["phone", "freq", "epr", "recall", "majority_label"])?;
    for p in sorted {
        out.write_record([
            p.phone.clone(),
            p.occurrence_count.to_string(),
            format!("{:.6}", p.expected_error),
            format!("{:.6}", p.recall),
            p.majority_label.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
