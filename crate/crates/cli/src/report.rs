use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};

use crate::output::Outputs;
use crate::tables::{read_metrics_csv, MetricsRow};

pub const SERIES: [&str; 4] = [
    "views_at_end",
    "reloc_distance",
    "fraction_cross_observed",
    "avg_dist_between_cross_obs",
];

#[derive(Clone, Debug)]
pub struct ReportArgs {
    pub inputs: Vec<PathBuf>,
    /// Written to stdout when absent.
    pub out: Option<PathBuf>,
}

fn value(row: &MetricsRow, metric: &str) -> Option<f64> {
    match metric {
        "views_at_end" => Some(row.views_at_end as f64),
        "reloc_distance" => row.reloc_distance,
        "fraction_cross_observed" => Some(row.fraction_cross_observed),
        "avg_dist_between_cross_obs" => row.avg_dist_between_cross_obs,
        _ => unreachable!("unknown series {metric}"),
    }
}

/// Long-format `source,run,metric,value` rows, grouped by source, then
/// metric, then run. Runs where a metric is undefined are left out.
pub fn long_format(sources: &[(String, Vec<MetricsRow>)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["source", "run", "metric", "value"])?;
    for (source, rows) in sources {
        for metric in SERIES {
            for row in rows {
                if let Some(v) = value(row, metric) {
                    w.write_record([source.as_str(), &row.run.to_string(), metric, &v.to_string()])?;
                }
            }
        }
    }
    w.into_inner().map_err(|e| anyhow!("cannot assemble CSV: {e}"))
}

/// Converts simulate metrics CSVs into plot-ready series labeled by input
/// path. Returns the CSV bytes.
pub fn cmd_report(args: &ReportArgs) -> Result<Vec<u8>> {
    if args.inputs.is_empty() {
        bail!("no input CSV given");
    }
    let mut sources = Vec::new();
    for path in &args.inputs {
        sources.push((path.display().to_string(), read_metrics_csv(path)?));
    }
    let bytes = long_format(&sources)?;
    if let Some(out) = &args.out {
        let mut outputs = Outputs::new();
        outputs.write(out, &bytes)?;
        outputs.commit();
    }
    Ok(bytes)
}
