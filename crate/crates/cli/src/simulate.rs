use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use viewprune::metrics::MetricsSummary;
use viewprune::persistence::{map_to_string, parse_map};
use viewprune::simulator::lifelong_experiment;

use crate::config::{load_environment, load_prune_config, load_sim_config};
use crate::output::Outputs;
use crate::tables::{metrics_csv, parse_metrics_csv, summary_csv};

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MAP_FILE: &str = "final_map.txt";

#[derive(Clone, Debug)]
pub struct SimulateArgs {
    pub env: PathBuf,
    pub sim: PathBuf,
    pub prune: PathBuf,
    pub runs: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Runs a lifelong experiment and writes `metrics.csv`, `summary.csv` and
/// `final_map.txt` into the output directory. Nothing is left behind on
/// failure.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<MetricsSummary> {
    if args.runs < 2 {
        bail!("growth rate is undefined for fewer than 2 runs (got {})", args.runs);
    }
    let env = load_environment(&args.env)?;
    let sim = load_sim_config(&args.sim)?;
    let prune = load_prune_config(&args.prune)?;
    let outcome = lifelong_experiment(&env, args.runs, &sim, &prune, args.seed)?;

    let metrics = metrics_csv(&outcome.reports)?;
    let summary = summary_csv(&outcome.summary, args.seed)?;
    let map = map_to_string(&outcome.final_map)?;

    let mut out = Outputs::new();
    out.ensure_dir(&args.out_dir)?;
    let metrics_path = args.out_dir.join(METRICS_FILE);
    out.write(&metrics_path, &metrics)?;
    out.write(&args.out_dir.join(SUMMARY_FILE), &summary)?;
    let map_path = args.out_dir.join(MAP_FILE);
    out.write(&map_path, &map)?;
    verify(&metrics_path, &map_path)?;
    out.commit();
    Ok(outcome.summary)
}

/// Reads the written files back with the tool's own parsers.
fn verify(metrics: &Path, map: &Path) -> Result<()> {
    let bytes = std::fs::read(metrics).with_context(|| format!("cannot re-read {}", metrics.display()))?;
    parse_metrics_csv(&bytes).with_context(|| format!("written {} does not parse", metrics.display()))?;
    let text = std::fs::read_to_string(map).with_context(|| format!("cannot re-read {}", map.display()))?;
    parse_map(&text).with_context(|| format!("written {} does not parse", map.display()))?;
    Ok(())
}
