//! Map files: the versioned text format maps are saved in between runs.
//!
//! ```text
//! # comments anywhere
//! viewmap-v1
//! map env=<token> runs=<n> next_view=<n> next_component=<n>
//! component <id> runs=<n>
//! view <id> comp=<id> x=<f> y=<f> th=<f> appearance=<token> n_obs_cur=<n> created_run=<n> created_at=<n> n_runs=<n> n_obs_runs=<n> reloc=<0|1>
//! ```
//!
//! The `map` header line is optional when loading. Components are written in
//! id order, then views sorted by (component id, view id), so equal maps
//! produce identical bytes. Fields not defined by `viewmap-v1` are rejected
//! as a version error.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::map_model::{AppearanceKey, Component, ComponentId, MapGraph, View, ViewId, ViewStats};
use crate::pose::{normalize_angle, Pose2D};
use crate::record::{content_lines, format_decimal, Record, RecordError};

pub const FORMAT_VERSION: &str = "viewmap-v1";

const MAP_FIELDS: &[&str] = &["env", "runs", "next_view", "next_component"];
const COMPONENT_FIELDS: &[&str] = &["runs"];
const VIEW_FIELDS: &[&str] = &[
    "comp",
    "x",
    "y",
    "th",
    "appearance",
    "n_obs_cur",
    "created_run",
    "created_at",
    "n_runs",
    "n_obs_runs",
    "reloc",
];

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: unsupported format: {detail}")]
    Version { line: usize, detail: String },
    #[error("line {line}: malformed record: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("line {line}: duplicate view id {id}")]
    DuplicateView { line: usize, id: ViewId },
    #[error("line {line}: duplicate component id {id}")]
    DuplicateComponent { line: usize, id: ComponentId },
    #[error("line {line}: view {view} refers to undeclared component {component}")]
    UnknownComponent {
        line: usize,
        view: ViewId,
        component: ComponentId,
    },
    #[error("environment name {0:?} is not a single token")]
    InvalidEnvironment(String),
}

impl From<RecordError> for PersistError {
    fn from(err: RecordError) -> Self {
        match err {
            RecordError::Malformed { line, detail } => Self::Malformed { line, detail },
            RecordError::UnknownField { line, tag, field } => Self::Version {
                line,
                detail: format!("field `{field}` is not part of {FORMAT_VERSION} `{tag}` records"),
            },
        }
    }
}

/// A loaded map plus what had to be repaired on the way in.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedMap {
    pub map: MapGraph,
    /// View headings outside (−π, π] that were wrapped into range.
    pub normalized_thetas: usize,
}

fn valid_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c.is_control())
}

/// Serializes `map` to its canonical text form.
pub fn map_to_string(map: &MapGraph) -> Result<String, PersistError> {
    use std::fmt::Write as _;

    if !valid_token(&map.environment) {
        return Err(PersistError::InvalidEnvironment(map.environment.clone()));
    }
    let mut out = String::new();
    out.push_str(FORMAT_VERSION);
    out.push('\n');
    let _ = writeln!(
        out,
        "map env={} runs={} next_view={} next_component={}",
        map.environment,
        map.run_count,
        map.next_view_id(),
        map.next_component_id()
    );
    for comp in map.components() {
        let _ = writeln!(out, "component {} runs={}", comp.id, comp.run_count);
    }
    for comp in map.components() {
        for view in comp.views.values() {
            let s = &view.stats;
            let _ = writeln!(
                out,
                "view {} comp={} x={} y={} th={} appearance={} n_obs_cur={} created_run={} created_at={} n_runs={} n_obs_runs={} reloc={}",
                view.id,
                comp.id,
                format_decimal(view.pose.x),
                format_decimal(view.pose.y),
                format_decimal(view.pose.theta),
                view.appearance,
                s.n_obs_cur,
                s.created_run,
                s.created_at,
                s.n_runs,
                s.n_obs_runs,
                u8::from(s.used_for_reloc),
            );
        }
    }
    Ok(out)
}

/// Writes `map` to `out`, returning the number of bytes written.
pub fn write_map<W: Write>(map: &MapGraph, mut out: W) -> io::Result<usize> {
    let text = map_to_string(map).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
    out.write_all(text.as_bytes())?;
    Ok(text.len())
}

/// Saves `map` to `path`, returning the number of bytes written.
pub fn save_map(map: &MapGraph, path: &Path) -> Result<usize, PersistError> {
    let text = map_to_string(map)?;
    fs::write(path, &text).map_err(|source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text.len())
}

pub fn load_map(path: &Path) -> Result<LoadedMap, PersistError> {
    let text = fs::read_to_string(path).map_err(|source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_map(&text)
}

pub fn parse_map(text: &str) -> Result<LoadedMap, PersistError> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, FORMAT_VERSION)) => {}
        Some((line, other)) => {
            return Err(PersistError::Version {
                line,
                detail: format!("expected `{FORMAT_VERSION}`, found `{other}`"),
            })
        }
        None => {
            return Err(PersistError::Version {
                line: 0,
                detail: format!("empty file, expected `{FORMAT_VERSION}`"),
            })
        }
    }

    let mut header: Option<(String, u32, u64, u64)> = None;
    let mut components: BTreeMap<ComponentId, Component> = BTreeMap::new();
    let mut seen_views: BTreeMap<ViewId, usize> = BTreeMap::new();
    let mut normalized_thetas = 0;
    let mut max_created_run = 0;
    let mut in_views = false;

    for (line, body) in lines {
        let rec = Record::parse(line, body)?;
        match rec.tag {
            "map" => {
                if header.is_some() || !components.is_empty() {
                    return Err(PersistError::Malformed {
                        line,
                        detail: "`map` header must appear once, before any component".into(),
                    });
                }
                rec.only(MAP_FIELDS)?;
                let env: String = rec.require("env")?;
                header = Some((
                    env,
                    rec.require("runs")?,
                    rec.require("next_view")?,
                    rec.require("next_component")?,
                ));
            }
            "component" => {
                if in_views {
                    return Err(PersistError::Malformed {
                        line,
                        detail: "component records must precede view records".into(),
                    });
                }
                rec.only(COMPONENT_FIELDS)?;
                let id = ComponentId(rec.arg(0, "component id")?);
                let runs: u32 = rec.require("runs")?;
                if components.insert(id, Component::new(id, runs)).is_some() {
                    return Err(PersistError::DuplicateComponent { line, id });
                }
            }
            "view" => {
                in_views = true;
                rec.only(VIEW_FIELDS)?;
                let id = ViewId(rec.arg(0, "view id")?);
                if seen_views.insert(id, line).is_some() {
                    return Err(PersistError::DuplicateView { line, id });
                }
                let component = ComponentId(rec.require("comp")?);
                let raw_theta: f64 = rec.require("th")?;
                let x: f64 = rec.require("x")?;
                let y: f64 = rec.require("y")?;
                if !(x.is_finite() && y.is_finite() && raw_theta.is_finite()) {
                    return Err(PersistError::Malformed {
                        line,
                        detail: format!("view {id} has a non-finite pose"),
                    });
                }
                let theta = normalize_angle(raw_theta);
                if theta != raw_theta {
                    normalized_thetas += 1;
                }
                let appearance: String = rec.require("appearance")?;
                let appearance = AppearanceKey::new(appearance).map_err(|e| PersistError::Malformed {
                    line,
                    detail: e.to_string(),
                })?;
                let stats = ViewStats {
                    n_obs_cur: rec.require("n_obs_cur")?,
                    created_run: rec.require("created_run")?,
                    created_at: rec.require("created_at")?,
                    n_runs: rec.require("n_runs")?,
                    n_obs_runs: rec.require("n_obs_runs")?,
                    used_for_reloc: rec
                        .flag("reloc")?
                        .ok_or_else(|| rec.malformed("`view` record is missing `reloc`"))?,
                };
                stats.validate().map_err(|detail| PersistError::Malformed {
                    line,
                    detail: format!("view {id}: {detail}"),
                })?;
                max_created_run = max_created_run.max(stats.created_run);
                let comp = components.get_mut(&component).ok_or(PersistError::UnknownComponent {
                    line,
                    view: id,
                    component,
                })?;
                comp.views.insert(
                    id,
                    View {
                        id,
                        pose: Pose2D { x, y, theta },
                        stats,
                        appearance,
                    },
                );
            }
            other => {
                return Err(PersistError::Version {
                    line,
                    detail: format!("record type `{other}` is not part of {FORMAT_VERSION}"),
                })
            }
        }
    }

    let (environment, run_count, next_view, next_component) = header.unwrap_or_else(|| {
        let runs = components
            .values()
            .map(|c| c.run_count)
            .max()
            .unwrap_or(0)
            .max(max_created_run);
        ("unnamed".to_string(), runs, 0, 0)
    });
    let map = MapGraph::from_parts(environment, run_count, components, next_view, next_component);
    map.check_invariants().map_err(|e| PersistError::Malformed {
        line: 0,
        detail: e.to_string(),
    })?;
    Ok(LoadedMap { map, normalized_thetas })
}
