//! Selection of the views to delete from a component.
//!
//! The procedure, for a component with more than `min_views` views:
//!
//! 1. Views created in the current run and observed at least once are kept
//!    unconditionally.
//! 2. Every other view is scored; scores strictly above the threshold keep
//!    the view.
//! 3. The remaining candidates are visited in ascending score order (ties by
//!    ascending id). A candidate with fewer than `nn_threshold` neighbors
//!    among the views still surviving is rescued; otherwise it is confirmed
//!    for deletion and stops counting as a neighbor for later candidates.
//! 4. With a view cap configured, further low-scoring kept views are
//!    deleted until the cap holds.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::map_model::{Component, ViewId};
use crate::scoring::{
    compute_view_score, resolve_threshold, RunObservationContext, ScoreError, ScoreThreshold, ScoreWeights,
};
use crate::spatial_index::{ViewGridIndex, VoxelSize};

#[derive(Debug, Error, PartialEq)]
pub enum PruneError {
    #[error("view cap {cap} is below min_views {min_views}")]
    CapBelowMinViews { cap: usize, min_views: usize },
    #[error("invalid score threshold: {0}")]
    Threshold(ScoreError),
    #[error("cannot score view {view}: {source}")]
    Score { view: ViewId, source: ScoreError },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PruneConfig {
    /// Components with at most this many views are left alone.
    pub min_views: usize,
    /// Candidates with fewer surviving neighbors than this are rescued.
    pub nn_threshold: usize,
    pub voxel: VoxelSize,
    pub threshold: ScoreThreshold,
    pub weights: ScoreWeights,
    /// When false the neighbor rescue pass is skipped.
    pub nn_enabled: bool,
    pub max_views_cap: Option<usize>,
}

impl PruneConfig {
    pub fn validate(&self) -> Result<(), PruneError> {
        self.threshold.validate().map_err(PruneError::Threshold)?;
        if let Some(cap) = self.max_views_cap {
            if cap < self.min_views {
                return Err(PruneError::CapBelowMinViews {
                    cap,
                    min_views: self.min_views,
                });
            }
        }
        Ok(())
    }

    /// A configuration that never deletes anything.
    pub fn never() -> Self {
        Self {
            min_views: usize::MAX,
            max_views_cap: None,
            ..Self::default()
        }
    }

    pub fn resolved_threshold(&self) -> f64 {
        resolve_threshold(self.threshold, &self.weights)
    }
}

impl Default for PruneConfig {
    /// Lifelong-mapping defaults: weights (1.5, 1, 3), threshold 1.375,
    /// voxel (1 m, 1 m, 2 rad), neighbor threshold 5, 25 minimum views.
    fn default() -> Self {
        Self {
            min_views: 25,
            nn_threshold: 5,
            voxel: VoxelSize::default(),
            threshold: ScoreThreshold::Absolute(1.375),
            weights: ScoreWeights::default(),
            nn_enabled: true,
            max_views_cap: None,
        }
    }
}

/// Outcome of one pruning pass.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PruneReport {
    pub delete_set: BTreeSet<ViewId>,
    /// Scores of every view that was scored (protected views are not).
    pub scores: BTreeMap<ViewId, f64>,
    /// Views created and observed in the current run.
    pub protected_new: BTreeSet<ViewId>,
    /// Low-scoring views kept because their neighborhood was too sparse.
    pub rescued_by_nn: BTreeSet<ViewId>,
    /// Views deleted by cap enforcement (a subset of `delete_set`).
    pub capped: BTreeSet<ViewId>,
    /// False when the component was at or below `min_views`.
    pub ran: bool,
}

impl PruneReport {
    pub fn kept_count(&self, total: usize) -> usize {
        total - self.delete_set.len()
    }
}

fn score_order(scores: &BTreeMap<ViewId, f64>) -> impl Fn(&ViewId, &ViewId) -> std::cmp::Ordering + '_ {
    move |a, b| scores[a].total_cmp(&scores[b]).then(a.cmp(b))
}

/// Decides which views of `component` may be deleted at the end of run
/// `current_run`.
pub fn find_views_for_deletion(
    component: &Component,
    current_run: u32,
    config: &PruneConfig,
    ctx: RunObservationContext,
) -> Result<PruneReport, PruneError> {
    config.validate()?;
    let mut report = PruneReport::default();
    let views = &component.views;
    if views.len() <= config.min_views {
        return Ok(report);
    }
    report.ran = true;

    if let Some(v) = views.values().find(|v| v.stats.n_obs_cur > ctx.max_obs) {
        return Err(PruneError::Score {
            view: v.id,
            source: ScoreError::InconsistentMaxObs {
                max_obs: ctx.max_obs,
                n_obs_cur: v.stats.n_obs_cur,
            },
        });
    }

    let threshold = config.resolved_threshold();
    let mut candidates = Vec::new();
    for view in views.values() {
        if view.stats.created_run == current_run && view.stats.n_obs_cur >= 1 {
            report.protected_new.insert(view.id);
            continue;
        }
        let score = compute_view_score(&view.stats, ctx, &config.weights)
            .map_err(|source| PruneError::Score { view: view.id, source })?;
        report.scores.insert(view.id, score);
        if score <= threshold {
            candidates.push((score, view.id, view.pose));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    if config.nn_enabled {
        let mut surviving = ViewGridIndex::with_views(config.voxel, views.values().map(|v| (v.id, &v.pose)));
        for (_, id, pose) in candidates {
            if surviving.count_neighbors(&pose, id) < config.nn_threshold {
                report.rescued_by_nn.insert(id);
            } else {
                surviving.remove(id);
                report.delete_set.insert(id);
            }
        }
    } else {
        report.delete_set.extend(candidates.into_iter().map(|(_, id, _)| id));
    }

    if let Some(cap) = config.max_views_cap {
        enforce_cap(&mut report, views.len(), cap);
    }
    Ok(report)
}

/// Deletes kept, unprotected views until at most `cap` remain: score-kept
/// views first, neighbor-rescued views last, lowest score first within each
/// group.
fn enforce_cap(report: &mut PruneReport, total: usize, cap: usize) {
    let kept = total - report.delete_set.len();
    if kept <= cap {
        return;
    }
    let mut excess = kept - cap;
    let by_score = score_order(&report.scores);
    let mut score_kept: Vec<ViewId> = report
        .scores
        .keys()
        .filter(|id| !report.delete_set.contains(id) && !report.rescued_by_nn.contains(id))
        .copied()
        .collect();
    score_kept.sort_by(&by_score);
    let mut rescued: Vec<ViewId> = report.rescued_by_nn.iter().copied().collect();
    rescued.sort_by(&by_score);

    let mut evicted = Vec::new();
    for id in score_kept.into_iter().chain(rescued) {
        if excess == 0 {
            break;
        }
        evicted.push(id);
        excess -= 1;
    }
    for id in evicted {
        report.rescued_by_nn.remove(&id);
        report.delete_set.insert(id);
        report.capped.insert(id);
    }
}
