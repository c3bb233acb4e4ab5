//! CSV tables written and read by the commands.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use viewprune::metrics::{MetricsReport, MetricsSummary};

pub const METRICS_COLUMNS: [&str; 5] = [
    "run",
    "views_at_end",
    "reloc_distance",
    "avg_dist_between_cross_obs",
    "fraction_cross_observed",
];

pub const SUMMARY_COLUMNS: [&str; 7] = [
    "runs",
    "seed",
    "growth_rate",
    "mean_avg_dist_between_cross_obs",
    "mean_fraction_cross_observed",
    "mean_reloc_distance",
    "final_views",
];

/// Absent values become empty cells.
pub fn cell(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    writer.into_inner().map_err(|e| anyhow!("cannot assemble CSV: {e}"))
}

pub fn metrics_csv(reports: &[MetricsReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_COLUMNS)?;
    for r in reports {
        w.write_record([
            r.run_index.to_string(),
            r.views_at_run_end.to_string(),
            cell(r.reloc_distance),
            cell(r.avg_dist_between_cross_obs),
            r.fraction_cross_observed.to_string(),
        ])?;
    }
    finish(w)
}

pub fn summary_csv(summary: &MetricsSummary, seed: u64) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_COLUMNS)?;
    w.write_record([
        summary.runs.to_string(),
        seed.to_string(),
        summary.growth_rate.to_string(),
        cell(summary.mean_avg_dist_between_cross_obs),
        cell(summary.mean_fraction_cross_observed),
        cell(summary.mean_reloc_distance),
        summary.final_views.to_string(),
    ])?;
    finish(w)
}

/// One row of a metrics CSV as read back.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub run: u32,
    pub views_at_end: usize,
    pub reloc_distance: Option<f64>,
    pub avg_dist_between_cross_obs: Option<f64>,
    pub fraction_cross_observed: f64,
}

fn parse_cell<T: std::str::FromStr>(raw: &str, column: &str, line: u64) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| anyhow!("line {line}: cannot parse {column} value `{raw}`"))
}

fn parse_optional(raw: &str, column: &str, line: u64) -> Result<Option<f64>> {
    if raw.trim().is_empty() {
        Ok(None)
    } else {
        parse_cell(raw, column, line).map(Some)
    }
}

/// Parses a metrics CSV. Errors name the offending line; a file without
/// data rows is an error.
pub fn parse_metrics_csv(bytes: &[u8]) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers = reader.headers().context("line 1: cannot read header")?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        bail!("empty CSV: no header row");
    }
    let mut index = [0usize; 5];
    for (slot, name) in index.iter_mut().zip(METRICS_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| anyhow!("line 1: header lacks column `{name}`"))?;
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| match e.position() {
            Some(p) => anyhow!("line {}: {e}", p.line()),
            None => anyhow!("{e}"),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: usize| &record[index[i]];
        let fraction: f64 = parse_cell(get(4), METRICS_COLUMNS[4], line)?;
        if !(0.0..=1.0).contains(&fraction) {
            bail!("line {line}: fraction_cross_observed {fraction} is outside [0, 1]");
        }
        rows.push(MetricsRow {
            run: parse_cell(get(0), METRICS_COLUMNS[0], line)?,
            views_at_end: parse_cell(get(1), METRICS_COLUMNS[1], line)?,
            reloc_distance: parse_optional(get(2), METRICS_COLUMNS[2], line)?,
            avg_dist_between_cross_obs: parse_optional(get(3), METRICS_COLUMNS[3], line)?,
            fraction_cross_observed: fraction,
        });
    }
    if rows.is_empty() {
        bail!("empty CSV: header but no data rows");
    }
    Ok(rows)
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_metrics_csv(&bytes).with_context(|| format!("in {}", path.display()))
}
