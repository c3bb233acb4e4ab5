use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use viewprune::map_model::{ComponentId, MapGraph};
use viewprune::persistence::{load_map, map_to_string};
use viewprune::pruner::{find_views_for_deletion, PruneConfig, PruneReport};
use viewprune::scoring::RunObservationContext;

use crate::config::load_prune_config;
use crate::output::Outputs;

#[derive(Clone, Debug)]
pub struct PruneArgs {
    pub map: PathBuf,
    pub config: PathBuf,
    /// Defaults to the largest `n_obs_cur` stored in the map.
    pub max_obs: Option<u32>,
    /// Restricts pruning to one component; all components otherwise.
    pub component: Option<u64>,
    /// Required unless `dry_run`.
    pub out: Option<PathBuf>,
    pub dry_run: bool,
}

#[derive(Clone, Debug)]
pub struct PruneOutcome {
    pub reports: Vec<(ComponentId, usize, PruneReport)>,
    pub deleted: usize,
    /// Human-readable report, printed by the binary.
    pub text: String,
}

/// Prunes a saved map offline. The current run is the map's run counter, so
/// views created in the last saved run and observed in it stay protected.
pub fn cmd_prune(args: &PruneArgs) -> Result<PruneOutcome> {
    let out_path = match (&args.out, args.dry_run) {
        (Some(out), _) => Some(out.clone()),
        (None, true) => None,
        (None, false) => bail!("--out is required unless --dry-run is given"),
    };
    if let Some(out) = &out_path {
        if !args.dry_run && same_file(out, &args.map) {
            bail!("--out must differ from the input map {}", args.map.display());
        }
    }
    let config = load_prune_config(&args.config)?;
    let loaded = load_map(&args.map)?;
    let mut map = loaded.map;
    let stored_max = map.views().map(|v| v.stats.n_obs_cur).max().unwrap_or(0);
    let ctx = RunObservationContext {
        max_obs: args.max_obs.unwrap_or(stored_max),
    };
    let targets: Vec<ComponentId> = match args.component {
        Some(id) => {
            let id = ComponentId(id);
            map.component(id)
                .with_context(|| format!("component {id} is not in {}", args.map.display()))?;
            vec![id]
        }
        None => map.components().map(|c| c.id).collect(),
    };

    let mut text = String::new();
    let _ = writeln!(
        text,
        "map {}: {} views in {} components, run {}, max_obs {}, threshold {}",
        args.map.display(),
        map.view_count(),
        map.component_count(),
        map.current_run(),
        ctx.max_obs,
        config.resolved_threshold()
    );
    if loaded.normalized_thetas > 0 {
        let _ = writeln!(
            text,
            "normalized {} headings outside (-pi, pi]",
            loaded.normalized_thetas
        );
    }
    let mut reports = Vec::new();
    for id in targets {
        let comp = map.component(id).expect("listed above");
        let report = find_views_for_deletion(comp, map.current_run(), &config, ctx)
            .with_context(|| format!("pruning component {id}"))?;
        describe(&mut text, &map, id, &config, &report);
        reports.push((id, comp.len(), report));
    }
    let deleted: usize = reports.iter().map(|(_, _, r)| r.delete_set.len()).sum();
    if deleted == 0 {
        let _ = writeln!(text, "no pruning");
    } else {
        let _ = writeln!(text, "total deleted {deleted}");
    }

    if let (Some(out), false) = (&out_path, args.dry_run) {
        let mut outputs = Outputs::new();
        if deleted == 0 {
            outputs.copy(&args.map, out)?;
        } else {
            for (id, _, report) in &reports {
                map.delete_views(*id, &report.delete_set)?;
            }
            outputs.write(out, map_to_string(&map)?)?;
        }
        load_map(out).with_context(|| format!("written {} does not load", out.display()))?;
        outputs.commit();
    }
    Ok(PruneOutcome { reports, deleted, text })
}

fn same_file(a: &std::path::Path, b: &std::path::Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn ids(set: impl IntoIterator<Item = impl std::fmt::Display>) -> String {
    set.into_iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

fn describe(text: &mut String, map: &MapGraph, id: ComponentId, config: &PruneConfig, report: &PruneReport) {
    let comp = map.component(id).expect("component exists");
    if !report.ran {
        let _ = writeln!(
            text,
            "component {id}: {} views, at or below min_views {}, no pruning",
            comp.len(),
            config.min_views
        );
        return;
    }
    let _ = writeln!(text, "component {id}: {} views", comp.len());
    let _ = writeln!(
        text,
        "  delete {}: {}",
        report.delete_set.len(),
        ids(&report.delete_set)
    );
    let _ = writeln!(
        text,
        "  protected new {}: {}",
        report.protected_new.len(),
        ids(&report.protected_new)
    );
    let _ = writeln!(
        text,
        "  rescued by neighbors {}: {}",
        report.rescued_by_nn.len(),
        ids(&report.rescued_by_nn)
    );
    if !report.capped.is_empty() {
        let _ = writeln!(
            text,
            "  evicted by cap {}: {}",
            report.capped.len(),
            ids(&report.capped)
        );
    }
    for vid in comp.views.keys() {
        let verdict = if report.protected_new.contains(vid) {
            "protected"
        } else if report.capped.contains(vid) {
            "capped"
        } else if report.delete_set.contains(vid) {
            "delete"
        } else if report.rescued_by_nn.contains(vid) {
            "rescued"
        } else {
            "keep"
        };
        match report.scores.get(vid) {
            Some(s) => {
                let _ = writeln!(text, "  view {vid} score {s:.6} {verdict}");
            }
            None => {
                let _ = writeln!(text, "  view {vid} score - {verdict}");
            }
        }
    }
}
