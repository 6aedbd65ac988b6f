//! Comparison rows: one extractor over several sequences, rendered as CSV,
//! JSON or an aligned text table.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::dataset::{Sequence, SequenceEval};
use crate::error::{Error, Result};
use crate::extractor::ExtractorConfig;
use crate::io::nine_digits;
use crate::metrics::KittiOptions;
use crate::odometry::IcpConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    /// Display name, e.g. `OS-CFAR`.
    pub extractor: String,
    /// Full config in `name K=V ...` form.
    pub config: String,
    pub ate_percent: f64,
    pub are_mdeg_per_m: f64,
    pub runtime_ms: f64,
    pub points: f64,
    pub sequences: Vec<SequenceEval>,
}

impl TableRow {
    /// Averages per-sequence results with equal weight per sequence.
    pub fn from_evals(cfg: &ExtractorConfig, sequences: Vec<SequenceEval>) -> Result<TableRow> {
        if sequences.is_empty() {
            return Err(Error::Precondition("a table row needs at least one sequence".into()));
        }
        let n = sequences.len() as f64;
        let mean = |f: fn(&SequenceEval) -> f64| sequences.iter().map(f).sum::<f64>() / n;
        Ok(TableRow {
            extractor: cfg.label().to_string(),
            config: cfg.to_string(),
            ate_percent: mean(|s| s.ate_percent),
            are_mdeg_per_m: mean(|s| s.are_mdeg_per_m),
            runtime_ms: mean(|s| s.runtime_ms),
            points: mean(|s| s.points),
            sequences,
        })
    }
}

/// Runs one config over each sequence in parallel. A sequence too short for
/// any error segment is an error rather than a perfect score.
pub fn evaluate_config(cfg: &ExtractorConfig, sequences: &[&Sequence], icp: &IcpConfig, kitti: &KittiOptions) -> Result<TableRow> {
    let evals = sequences
        .par_iter()
        .map(|s| evaluate_checked(s, cfg, icp, kitti))
        .collect::<Result<Vec<_>>>()?;
    TableRow::from_evals(cfg, evals)
}

pub(crate) fn evaluate_checked(seq: &Sequence, cfg: &ExtractorConfig, icp: &IcpConfig, kitti: &KittiOptions) -> Result<SequenceEval> {
    let eval = seq.evaluate(cfg, icp, kitti)?;
    if eval.errors.empty {
        return Err(Error::Precondition(format!(
            "sequence '{}' is shorter than the shortest error segment",
            seq.name
        )));
    }
    Ok(eval)
}

fn sequence_names(rows: &[TableRow]) -> Result<Vec<String>> {
    let names: Vec<String> = rows
        .first()
        .map(|r| r.sequences.iter().map(|s| s.sequence.clone()).collect())
        .unwrap_or_default();
    for r in rows {
        if r.sequences.iter().map(|s| &s.sequence).ne(names.iter()) {
            return Err(Error::Dimension("rows cover different sequences".into()));
        }
    }
    Ok(names)
}

/// Writes the rows as CSV. Runtime is optional because it is the one
/// column that differs between otherwise identical runs.
pub fn write_table_csv(rows: &[TableRow], with_runtime: bool, path: impl AsRef<Path>) -> Result<()> {
    let names = sequence_names(rows)?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["extractor".to_string(), "config".into(), "ate_percent".into(), "are_mdeg_per_m".into()];
    for n in &names {
        header.push(format!("{n}_ate_percent"));
        header.push(format!("{n}_are_mdeg_per_m"));
    }
    if with_runtime {
        header.push("runtime_ms".into());
    }
    header.push("points".into());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.extractor.clone(),
            r.config.clone(),
            nine_digits(r.ate_percent),
            nine_digits(r.are_mdeg_per_m),
        ];
        for s in &r.sequences {
            rec.push(nine_digits(s.ate_percent));
            rec.push(nine_digits(s.are_mdeg_per_m));
        }
        if with_runtime {
            rec.push(format!("{:.3}", r.runtime_ms));
        }
        rec.push(format!("{:.1}", r.points));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable table with right-aligned numeric columns.
pub fn render_table(rows: &[TableRow]) -> Result<String> {
    let names = sequence_names(rows)?;
    let mut header = vec!["Extractor".to_string(), "ATE %".into(), "ARE mdeg/m".into()];
    for n in &names {
        header.push(format!("{n} ATE"));
        header.push(format!("{n} ARE"));
    }
    header.extend(["Runtime ms".to_string(), "Points".into(), "Config".into()]);
    let mut cells = vec![header];
    for r in rows {
        let mut line = vec![
            r.extractor.clone(),
            format!("{:.2}", r.ate_percent),
            format!("{:.2}", r.are_mdeg_per_m),
        ];
        for s in &r.sequences {
            line.push(format!("{:.2}", s.ate_percent));
            line.push(format!("{:.2}", s.are_mdeg_per_m));
        }
        line.extend([format!("{:.2}", r.runtime_ms), format!("{:.0}", r.points), r.config.clone()]);
        cells.push(line);
    }
    let cols = cells[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| cells.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, line) in cells.iter().enumerate() {
        let mut text = String::new();
        for (c, cell) in line.iter().enumerate() {
            let sep = if c == 0 { "" } else { "  " };
            // First and last columns are text; the rest are numbers.
            if c == 0 || c == cols - 1 {
                let _ = write!(text, "{sep}{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(text, "{sep}{cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (cols - 1)));
            out.push('\n');
        }
    }
    Ok(out)
}
