//! Configuration files in the keyed-record syntax shared with map files.
//!
//! Each file starts with a version line and continues with records. Every
//! field is optional unless noted; absent fields keep the library defaults.
//!
//! ```text
//! viewenv-v1
//! env name=apartment seed=3 schedule=cyclic
//! rect x0=0 y0=0 x1=7 y1=6.6
//! dock x=0.5 y=0.5 th=0
//! lighting states=day,dusk,night,lamp
//! ```
//!
//! ```text
//! viewsim-v1
//! sim frames=2400 step=0.05 radius=0.45 fov=0.5 p_matched=0.5 p_mismatched=0.03
//! ```
//!
//! ```text
//! viewprune-v1
//! prune min_views=25 nn=1 nn_threshold=5
//! weights w1=1.5 w2=1 w3=3
//! threshold absolute=1.375
//! voxel x=1 y=1 th=2
//! ```

use std::path::Path;

use thiserror::Error;
use viewprune::map_model::AppearanceKey;
use viewprune::pose::Pose2D;
use viewprune::pruner::PruneConfig;
use viewprune::record::{content_lines, Record, RecordError};
use viewprune::scoring::{ScoreThreshold, ScoreWeights};
use viewprune::simulator::{Environment, LightingSchedule, Rect, Region, SimConfig, SimError};
use viewprune::spatial_index::VoxelSize;

pub const ENV_VERSION: &str = "viewenv-v1";
pub const SIM_VERSION: &str = "viewsim-v1";
pub const PRUNE_VERSION: &str = "viewprune-v1";
pub const SWEEP_VERSION: &str = "viewsweep-v1";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Record(#[from] RecordError),
    #[error("expected `{expected}` on the first line, found {found}")]
    Version { expected: &'static str, found: String },
    #[error("line {line}: unknown record `{tag}`")]
    UnknownRecord { line: usize, tag: String },
    #[error("line {line}: `{tag}` given more than once")]
    Repeated { line: usize, tag: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub fn read_file(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Checks the version line and returns the remaining records.
pub fn versioned_records<'a>(text: &'a str, version: &'static str) -> Result<Vec<Record<'a>>, ConfigError> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, first)) if first == version => {}
        Some((line, first)) => {
            return Err(ConfigError::Version {
                expected: version,
                found: format!("`{first}` on line {line}"),
            })
        }
        None => {
            return Err(ConfigError::Version {
                expected: version,
                found: "an empty file".into(),
            })
        }
    }
    Ok(lines
        .map(|(line, body)| Record::parse(line, body))
        .collect::<Result<_, _>>()?)
}

fn once<'r, 'a>(slot: &mut Option<&'r Record<'a>>, rec: &'r Record<'a>) -> Result<(), ConfigError> {
    if slot.replace(rec).is_some() {
        return Err(ConfigError::Repeated {
            line: rec.line,
            tag: rec.tag.to_string(),
        });
    }
    Ok(())
}

fn unknown(rec: &Record) -> ConfigError {
    ConfigError::UnknownRecord {
        line: rec.line,
        tag: rec.tag.to_string(),
    }
}

pub fn parse_environment(text: &str) -> Result<Environment, ConfigError> {
    let records = versioned_records(text, ENV_VERSION)?;
    let (mut env, mut dock, mut lighting) = (None, None, None);
    let mut rects = Vec::new();
    for rec in &records {
        match rec.tag {
            "env" => once(&mut env, rec)?,
            "dock" => once(&mut dock, rec)?,
            "lighting" => once(&mut lighting, rec)?,
            "rect" => {
                rec.only(&["x0", "y0", "x1", "y1"])?;
                rects.push(Rect::new(
                    rec.require("x0")?,
                    rec.require("y0")?,
                    rec.require("x1")?,
                    rec.require("y1")?,
                ));
            }
            _ => return Err(unknown(rec)),
        }
    }
    let env = env.ok_or_else(|| ConfigError::Invalid("environment file has no `env` record".into()))?;
    env.only(&["name", "seed", "schedule", "sequence"])?;
    let lighting = lighting.ok_or_else(|| ConfigError::Invalid("environment file has no `lighting` record".into()))?;
    lighting.only(&["states"])?;
    let states = lighting
        .list::<String>("states")?
        .ok_or_else(|| lighting.malformed("`lighting` record is missing `states`"))?
        .into_iter()
        .map(AppearanceKey::new)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| lighting.malformed(e.to_string()))?;
    let schedule = match env.get("schedule").unwrap_or("cyclic") {
        "cyclic" => LightingSchedule::Cyclic,
        "random" => LightingSchedule::Random,
        "sequence" => LightingSchedule::Sequence(
            env.list("sequence")?
                .ok_or_else(|| env.malformed("schedule=sequence needs `sequence`"))?,
        ),
        other => return Err(env.malformed(format!("unknown schedule `{other}`")).into()),
    };
    if rects.is_empty() {
        return Err(ConfigError::Invalid("environment file has no `rect` record".into()));
    }
    let dock = match dock {
        Some(d) => {
            d.only(&["x", "y", "th"])?;
            Pose2D::new(d.require("x")?, d.require("y")?, d.optional("th")?.unwrap_or(0.0))
        }
        None => Pose2D::new(0.5, 0.5, 0.0),
    };
    let environment = Environment {
        name: env.require("name")?,
        region: Region::new(rects)?,
        dock,
        lighting_states: states,
        schedule,
        seed: env.optional("seed")?.unwrap_or(0),
    };
    environment.validate()?;
    Ok(environment)
}

pub fn parse_sim_config(text: &str) -> Result<SimConfig, ConfigError> {
    let records = versioned_records(text, SIM_VERSION)?;
    let mut sim = None;
    for rec in &records {
        match rec.tag {
            "sim" => once(&mut sim, rec)?,
            _ => return Err(unknown(rec)),
        }
    }
    let mut config = SimConfig::default();
    if let Some(r) = sim {
        r.only(&[
            "frames",
            "step",
            "radius",
            "fov",
            "p_matched",
            "p_mismatched",
            "create_gap",
            "reloc_min_views",
            "margin",
            "undock",
            "trajectory_seed",
        ])?;
        let d = SimConfig::default();
        config = SimConfig {
            frames_per_run: r.optional("frames")?.unwrap_or(d.frames_per_run),
            step_distance: r.optional("step")?.unwrap_or(d.step_distance),
            observation_radius: r.optional("radius")?.unwrap_or(d.observation_radius),
            observation_fov: r.optional("fov")?.unwrap_or(d.observation_fov),
            p_observe_matched: r.optional("p_matched")?.unwrap_or(d.p_observe_matched),
            p_observe_mismatched: r.optional("p_mismatched")?.unwrap_or(d.p_observe_mismatched),
            create_gap_distance: r.optional("create_gap")?.unwrap_or(d.create_gap_distance),
            reloc_min_views: r.optional("reloc_min_views")?.unwrap_or(d.reloc_min_views),
            waypoint_margin: r.optional("margin")?.unwrap_or(d.waypoint_margin),
            undock_distance: r.optional("undock")?.unwrap_or(d.undock_distance),
            trajectory_seed: r.optional("trajectory_seed")?,
        };
    }
    config.validate()?;
    Ok(config)
}

/// Applies `prune`, `weights`, `threshold` and `voxel` records on top of
/// `base`. Other records are returned untouched for the caller.
pub fn apply_prune_records<'r, 'a>(
    records: &'r [Record<'a>],
    base: PruneConfig,
) -> Result<(PruneConfig, Vec<&'r Record<'a>>), ConfigError> {
    let mut config = base;
    let (mut prune, mut weights, mut threshold, mut voxel) = (None, None, None, None);
    let mut rest = Vec::new();
    for rec in records {
        match rec.tag {
            "prune" => once(&mut prune, rec)?,
            "weights" => once(&mut weights, rec)?,
            "threshold" => once(&mut threshold, rec)?,
            "voxel" => once(&mut voxel, rec)?,
            _ => rest.push(rec),
        }
    }
    if let Some(r) = prune {
        r.only(&["min_views", "nn_threshold", "nn", "cap"])?;
        config.min_views = r.optional("min_views")?.unwrap_or(config.min_views);
        config.nn_threshold = r.optional("nn_threshold")?.unwrap_or(config.nn_threshold);
        config.nn_enabled = r.flag("nn")?.unwrap_or(config.nn_enabled);
        if r.has("cap") {
            config.max_views_cap = r.optional("cap")?;
        }
    }
    if let Some(r) = weights {
        r.only(&["w1", "w2", "w3"])?;
        let w = config.weights;
        config.weights = ScoreWeights::new(
            r.optional("w1")?.unwrap_or(w.w1()),
            r.optional("w2")?.unwrap_or(w.w2()),
            r.optional("w3")?.unwrap_or(w.w3()),
        )
        .map_err(|e| r.malformed(e.to_string()))?;
    }
    if let Some(r) = threshold {
        r.only(&["absolute", "relative"])?;
        config.threshold = match (r.optional("absolute")?, r.optional("relative")?) {
            (Some(a), None) => ScoreThreshold::Absolute(a),
            (None, Some(f)) => ScoreThreshold::RelativeToMax(f),
            _ => {
                return Err(r
                    .malformed("`threshold` needs exactly one of `absolute` or `relative`")
                    .into())
            }
        };
    }
    if let Some(r) = voxel {
        r.only(&["x", "y", "th"])?;
        config.voxel = VoxelSize::new(r.require("x")?, r.require("y")?, r.require("th")?)
            .map_err(|e| r.malformed(e.to_string()))?;
    }
    config
        .validate()
        .map_err(|e| ConfigError::Invalid(format!("prune config: {e}")))?;
    Ok((config, rest))
}

pub fn parse_prune_config(text: &str) -> Result<PruneConfig, ConfigError> {
    let records = versioned_records(text, PRUNE_VERSION)?;
    let (config, rest) = apply_prune_records(&records, PruneConfig::default())?;
    match rest.first() {
        Some(rec) => Err(unknown(rec)),
        None => Ok(config),
    }
}

pub fn load_environment(path: &Path) -> Result<Environment, ConfigError> {
    parse_environment(&read_file(path)?)
}

pub fn load_sim_config(path: &Path) -> Result<SimConfig, ConfigError> {
    parse_sim_config(&read_file(path)?)
}

pub fn load_prune_config(path: &Path) -> Result<PruneConfig, ConfigError> {
    parse_prune_config(&read_file(path)?)
}
