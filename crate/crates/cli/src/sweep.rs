//! Parameter sweeps over score weights or neighbor-check settings.
//!
//! ```text
//! viewsweep-v1
//! sweep kind=weights runs=22
//! grid w1=0,0.5,1,1.5,2 w3=0,0.5,1,1.5,2,2.5,3
//! select growth_rate_max=5 dist_between_cross_obs_max=0.8 fraction_cross_observed_min=0.075
//! ```
//!
//! ```text
//! viewsweep-v1
//! sweep kind=nn runs=22
//! grid nn_threshold=1,3,5 voxels=1:1:1,1:1:2,2:2:1,2:2:2
//! select growth_rate_min=4.05 growth_rate_max=4.45 reloc_distance_max=11.78
//! ```
//!
//! `prune`, `weights`, `threshold` and `voxel` records, as in a prune config
//! file, adjust the base configuration every cell starts from. A weights
//! sweep starts with the neighbor check disabled and a threshold of 0.25
//! times the maximum score; a neighbor sweep starts from the lifelong
//! defaults.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use rayon::prelude::*;
use viewprune::metrics::MetricsSummary;
use viewprune::pruner::PruneConfig;
use viewprune::record::Record;
use viewprune::scoring::{ScoreThreshold, ScoreWeights};
use viewprune::simulator::{derive_seed, lifelong_experiment, Environment, SimConfig};
use viewprune::spatial_index::VoxelSize;

use crate::config::{
    apply_prune_records, load_environment, load_sim_config, read_file, versioned_records, ConfigError, SWEEP_VERSION,
};
use crate::output::Outputs;
use crate::tables::cell;

#[derive(Clone, Debug, PartialEq)]
pub enum SweepGrid {
    /// Every `w1` with every `w3`, `w1` varying slowest.
    Weights { w1: Vec<f64>, w2: f64, w3: Vec<f64> },
    /// Every neighbor threshold with every voxel, threshold varying slowest.
    Neighbors {
        thresholds: Vec<usize>,
        voxels: Vec<VoxelSize>,
    },
}

/// Row selection; a row is selected when every given bound holds. A bound
/// on a metric the row lacks fails.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Selection {
    pub growth_rate_max: Option<f64>,
    pub growth_rate_min: Option<f64>,
    pub dist_between_cross_obs_max: Option<f64>,
    pub fraction_cross_observed_min: Option<f64>,
    pub reloc_distance_max: Option<f64>,
}

impl Selection {
    pub fn accepts(&self, s: &MetricsSummary) -> bool {
        let le = |v: Option<f64>, bound: Option<f64>| bound.is_none_or(|b| v.is_some_and(|v| v <= b));
        let ge = |v: Option<f64>, bound: Option<f64>| bound.is_none_or(|b| v.is_some_and(|v| v >= b));
        le(Some(s.growth_rate), self.growth_rate_max)
            && ge(Some(s.growth_rate), self.growth_rate_min)
            && le(s.mean_avg_dist_between_cross_obs, self.dist_between_cross_obs_max)
            && ge(s.mean_fraction_cross_observed, self.fraction_cross_observed_min)
            && le(s.mean_reloc_distance, self.reloc_distance_max)
    }
}

/// How cell seeds are chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Seeding {
    /// Cell 0 uses the master seed, cell i > 0 a seed derived from
    /// (master seed, i).
    PerCell,
    /// Every cell replays the master seed, like rerunning the same logs.
    Common,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub grid: SweepGrid,
    pub runs: u32,
    pub base: PruneConfig,
    pub selection: Selection,
    pub seeding: Seeding,
}

impl SweepSpec {
    pub fn cell_count(&self) -> usize {
        match &self.grid {
            SweepGrid::Weights { w1, w3, .. } => w1.len() * w3.len(),
            SweepGrid::Neighbors { thresholds, voxels } => thresholds.len() * voxels.len(),
        }
    }

    /// The prune configuration of cell `index`.
    pub fn cell_config(&self, index: usize) -> Result<PruneConfig> {
        let mut config = self.base;
        match &self.grid {
            SweepGrid::Weights { w1, w2, w3 } => {
                let (a, b) = (index / w3.len(), index % w3.len());
                config.weights = ScoreWeights::new(w1[a], *w2, w3[b])?;
            }
            SweepGrid::Neighbors { thresholds, voxels } => {
                let (a, b) = (index / voxels.len(), index % voxels.len());
                config.nn_threshold = thresholds[a];
                config.voxel = voxels[b];
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn cell_seed(&self, master: u64, index: usize) -> u64 {
        match (self.seeding, index) {
            (Seeding::Common, _) | (Seeding::PerCell, 0) => master,
            (Seeding::PerCell, i) => derive_seed(master, i as u64),
        }
    }
}

fn parse_voxel(rec: &Record, raw: &str) -> Result<VoxelSize, ConfigError> {
    let parts: Vec<f64> = raw
        .split(':')
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| rec.malformed(format!("voxel `{raw}` is not x:y:theta")))?;
    match parts[..] {
        [x, y, th] => VoxelSize::new(x, y, th).map_err(|e| rec.malformed(e.to_string()).into()),
        _ => Err(rec.malformed(format!("voxel `{raw}` is not x:y:theta")).into()),
    }
}

pub fn parse_sweep_spec(text: &str) -> Result<SweepSpec, ConfigError> {
    let records = versioned_records(text, SWEEP_VERSION)?;
    let sweep = records
        .iter()
        .find(|r| r.tag == "sweep")
        .ok_or_else(|| ConfigError::Invalid("sweep file has no `sweep` record".into()))?;
    sweep.only(&["kind", "runs", "seeding"])?;
    let kind = sweep
        .get("kind")
        .ok_or_else(|| sweep.malformed("`sweep` record is missing `kind`"))?;
    let base = match kind {
        "weights" => PruneConfig {
            nn_enabled: false,
            threshold: ScoreThreshold::RelativeToMax(0.25),
            ..PruneConfig::default()
        },
        "nn" => PruneConfig::default(),
        other => {
            return Err(sweep
                .malformed(format!("unknown sweep kind `{other}`, expected weights or nn"))
                .into())
        }
    };
    let seeding = match sweep.get("seeding").unwrap_or("per_cell") {
        "per_cell" => Seeding::PerCell,
        "common" => Seeding::Common,
        other => return Err(sweep.malformed(format!("unknown seeding `{other}`")).into()),
    };
    let runs: u32 = sweep.optional("runs")?.unwrap_or(22);
    if runs < 2 {
        return Err(sweep.malformed("runs must be at least 2").into());
    }
    let (base, rest) = apply_prune_records(&records, base)?;

    let (mut grid, mut selection) = (None, None);
    for rec in rest {
        match rec.tag {
            "sweep" => {
                if rec.line != sweep.line {
                    return Err(ConfigError::Repeated {
                        line: rec.line,
                        tag: "sweep".into(),
                    });
                }
            }
            "grid" if grid.is_none() => grid = Some(rec),
            "select" if selection.is_none() => selection = Some(rec),
            "grid" | "select" => {
                return Err(ConfigError::Repeated {
                    line: rec.line,
                    tag: rec.tag.to_string(),
                })
            }
            _ => {
                return Err(ConfigError::UnknownRecord {
                    line: rec.line,
                    tag: rec.tag.to_string(),
                })
            }
        }
    }
    let grid_rec = grid.ok_or_else(|| ConfigError::Invalid("sweep file has no `grid` record".into()))?;
    let missing = |key: &str| grid_rec.malformed(format!("`grid` record is missing `{key}`"));
    let grid = if kind == "weights" {
        grid_rec.only(&["w1", "w3"])?;
        SweepGrid::Weights {
            w1: grid_rec.list("w1")?.ok_or_else(|| missing("w1"))?,
            w2: base.weights.w2(),
            w3: grid_rec.list("w3")?.ok_or_else(|| missing("w3"))?,
        }
    } else {
        grid_rec.only(&["nn_threshold", "voxels"])?;
        let raw = grid_rec.get("voxels").ok_or_else(|| missing("voxels"))?;
        SweepGrid::Neighbors {
            thresholds: grid_rec.list("nn_threshold")?.ok_or_else(|| missing("nn_threshold"))?,
            voxels: raw
                .split(',')
                .map(|v| parse_voxel(grid_rec, v))
                .collect::<Result<_, _>>()?,
        }
    };
    let sel_rec = selection.ok_or_else(|| ConfigError::Invalid("sweep file has no `select` record".into()))?;
    sel_rec.only(&[
        "growth_rate_max",
        "growth_rate_min",
        "dist_between_cross_obs_max",
        "fraction_cross_observed_min",
        "reloc_distance_max",
    ])?;
    let selection = Selection {
        growth_rate_max: sel_rec.optional("growth_rate_max")?,
        growth_rate_min: sel_rec.optional("growth_rate_min")?,
        dist_between_cross_obs_max: sel_rec.optional("dist_between_cross_obs_max")?,
        fraction_cross_observed_min: sel_rec.optional("fraction_cross_observed_min")?,
        reloc_distance_max: sel_rec.optional("reloc_distance_max")?,
    };
    let bounds = [
        selection.growth_rate_max,
        selection.growth_rate_min,
        selection.dist_between_cross_obs_max,
        selection.fraction_cross_observed_min,
        selection.reloc_distance_max,
    ];
    if bounds.iter().all(Option::is_none) {
        return Err(sel_rec.malformed("`select` needs at least one bound").into());
    }
    if bounds.iter().flatten().any(|b| !b.is_finite()) {
        return Err(sel_rec.malformed("selection bounds must be finite").into());
    }

    let spec = SweepSpec {
        grid,
        runs,
        base,
        selection,
        seeding,
    };
    if spec.cell_count() == 0 {
        return Err(grid_rec.malformed("grid is empty").into());
    }
    for i in 0..spec.cell_count() {
        spec.cell_config(i)
            .map_err(|e| grid_rec.malformed(format!("cell {i}: {e}")))?;
    }
    Ok(spec)
}

#[derive(Clone, Debug)]
pub struct SweepArgs {
    pub spec: PathBuf,
    pub env: PathBuf,
    pub sim: PathBuf,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub cell: usize,
    pub seed: u64,
    pub config: PruneConfig,
    pub summary: MetricsSummary,
    pub selected: bool,
}

/// Runs every cell of the grid; cells run in parallel and rows come back in
/// cell order.
pub fn run_sweep(spec: &SweepSpec, env: &Environment, sim: &SimConfig, seed: u64) -> Result<Vec<SweepRow>> {
    (0..spec.cell_count())
        .into_par_iter()
        .map(|cell| {
            let config = spec.cell_config(cell)?;
            let cell_seed = spec.cell_seed(seed, cell);
            let outcome = lifelong_experiment(env, spec.runs, sim, &config, cell_seed)
                .map_err(|e| anyhow!("cell {cell}: {e}"))?;
            Ok(SweepRow {
                cell,
                seed: cell_seed,
                config,
                selected: spec.selection.accepts(&outcome.summary),
                summary: outcome.summary,
            })
        })
        .collect()
}

pub fn sweep_csv(spec: &SweepSpec, rows: &[SweepRow]) -> Result<Vec<u8>> {
    let metrics = [
        "avg_distance_between_cross_observations",
        "fraction_of_cross_observed_frames",
        "relocalization_distance",
        "growth_rate",
        "final_views",
        "selected",
    ];
    let params: &[&str] = match spec.grid {
        SweepGrid::Weights { .. } => &["w1", "w2", "w3"],
        SweepGrid::Neighbors { .. } => &["nn_thresh", "voxel_x", "voxel_y", "voxel_theta"],
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = ["cell", "seed"].iter().chain(params).chain(&metrics).copied().collect();
    w.write_record(&header)?;
    for row in rows {
        let c = &row.config;
        let mut fields = vec![row.cell.to_string(), row.seed.to_string()];
        match spec.grid {
            SweepGrid::Weights { .. } => {
                fields.extend([c.weights.w1(), c.weights.w2(), c.weights.w3()].map(|v| v.to_string()));
            }
            SweepGrid::Neighbors { .. } => {
                fields.push(c.nn_threshold.to_string());
                fields.extend([c.voxel.sx(), c.voxel.sy(), c.voxel.stheta()].map(|v| v.to_string()));
            }
        }
        let s = &row.summary;
        fields.extend([
            cell(s.mean_avg_dist_between_cross_obs),
            cell(s.mean_fraction_cross_observed),
            cell(s.mean_reloc_distance),
            s.growth_rate.to_string(),
            s.final_views.to_string(),
            u8::from(row.selected).to_string(),
        ]);
        w.write_record(&fields)?;
    }
    w.into_inner().map_err(|e| anyhow!("cannot assemble CSV: {e}"))
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<SweepRow>> {
    let spec = parse_sweep_spec(&read_file(&args.spec)?)?;
    let env = load_environment(&args.env)?;
    let sim = load_sim_config(&args.sim)?;
    let rows = run_sweep(&spec, &env, &sim, args.seed)?;
    let bytes = sweep_csv(&spec, &rows)?;
    let mut out = Outputs::new();
    out.write(&args.out, &bytes)?;
    let written = std::fs::read(&args.out)?;
    let count = csv::Reader::from_reader(written.as_slice()).records().count();
    if count != rows.len() {
        bail!("{} holds {count} rows, expected {}", args.out.display(), rows.len());
    }
    out.commit();
    Ok(rows)
}
