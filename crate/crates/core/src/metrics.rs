//! Relocalization-quality metrics computed from run traces.
//!
//! Per run: the average travel between cross-observations (observations of
//! views created in an earlier run), the fraction of frames containing a
//! cross-observation, and the distance traveled before relocalizing. Across
//! runs: the view growth rate `G = (v_n − v_2) / (n − 1)` and per-run means.

use thiserror::Error;

use crate::map_model::{ComponentId, ViewId};
use crate::pose::Pose2D;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("growth rate needs at least 2 runs, got {0}")]
    TooFewRuns(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameEvent {
    pub frame: u32,
    /// Cumulative travel since the run started, meters.
    pub distance: f64,
    /// Robot pose in the frame of the run's starting component.
    pub pose: Pose2D,
    /// Views observed in this frame, ascending.
    pub observed_views: Vec<ViewId>,
    /// Views created in this frame, ascending.
    pub created_views: Vec<ViewId>,
    /// At least one observed view was created in an earlier run.
    pub cross_observation: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelocEvent {
    pub frame: u32,
    pub distance: f64,
    /// Component the run relocalized into.
    pub target: ComponentId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub run_index: u32,
    pub start_component: ComponentId,
    pub frames: Vec<FrameEvent>,
    pub reloc_event: Option<RelocEvent>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub run_index: u32,
    pub avg_dist_between_cross_obs: Option<f64>,
    pub fraction_cross_observed: f64,
    pub reloc_distance: Option<f64>,
    pub views_at_run_end: usize,
}

impl MetricsReport {
    pub fn from_trace(trace: &RunTrace, views_at_run_end: usize) -> Self {
        let (avg, fraction) = cross_observation_stats(trace);
        Self {
            run_index: trace.run_index,
            avg_dist_between_cross_obs: avg,
            fraction_cross_observed: fraction,
            reloc_distance: relocalization_distance(trace),
            views_at_run_end,
        }
    }
}

/// `(v_n − v_2) / (n − 1)` over the view counts at the end of each run.
pub fn growth_rate(view_counts: &[usize]) -> Result<f64, MetricsError> {
    let n = view_counts.len();
    if n < 2 {
        return Err(MetricsError::TooFewRuns(n));
    }
    let v2 = view_counts[1] as f64;
    let vn = view_counts[n - 1] as f64;
    Ok((vn - v2) / (n - 1) as f64)
}

/// Travel between consecutive cross-observation frames, the first gap
/// measured from the start of the run.
pub fn cross_observation_gaps(trace: &RunTrace) -> Vec<f64> {
    let mut last = 0.0;
    trace
        .frames
        .iter()
        .filter(|f| f.cross_observation)
        .map(|f| {
            let gap = f.distance - last;
            last = f.distance;
            gap
        })
        .collect()
}

/// Mean gap between cross-observations (absent when there are none) and the
/// fraction of frames with a cross-observation.
pub fn cross_observation_stats(trace: &RunTrace) -> (Option<f64>, f64) {
    let gaps = cross_observation_gaps(trace);
    if trace.frames.is_empty() {
        return (None, 0.0);
    }
    let fraction = gaps.len() as f64 / trace.frames.len() as f64;
    (mean(gaps.iter().copied()), fraction)
}

pub fn relocalization_distance(trace: &RunTrace) -> Option<f64> {
    trace.reloc_event.map(|e| e.distance)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Means across runs. Each metric is averaged over the runs where it is
/// defined; `None` when it is defined nowhere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsSummary {
    pub runs: usize,
    pub growth_rate: f64,
    pub mean_avg_dist_between_cross_obs: Option<f64>,
    pub mean_fraction_cross_observed: Option<f64>,
    pub mean_reloc_distance: Option<f64>,
    pub final_views: usize,
}

/// Averages per-run reports and computes the growth rate of `view_counts`.
/// Reports of the first run are left out of the means: nothing exists yet
/// to cross-observe or relocalize into.
pub fn aggregate(reports: &[MetricsReport], view_counts: &[usize]) -> Result<MetricsSummary, MetricsError> {
    let growth = growth_rate(view_counts)?;
    let later = || reports.iter().filter(|r| r.run_index > 1);
    Ok(MetricsSummary {
        runs: view_counts.len(),
        growth_rate: growth,
        mean_avg_dist_between_cross_obs: mean(later().filter_map(|r| r.avg_dist_between_cross_obs)),
        mean_fraction_cross_observed: mean(later().map(|r| r.fraction_cross_observed)),
        mean_reloc_distance: mean(later().filter_map(|r| r.reloc_distance)),
        final_views: *view_counts.last().expect("at least two counts"),
    })
}
