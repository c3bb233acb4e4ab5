//! View management for lifelong graph-based visual SLAM.
//!
//! A robot that saves its map after every run and reloads it for the next
//! keeps creating views whenever the scene looks unfamiliar: under new
//! lighting, after furniture moved, in corners it rarely visits. Left alone
//! the view count grows without bound. This crate decides, from observation
//! statistics accumulated across runs, which views can be deleted without
//! hurting the robot's ability to relocalize, while keeping the surviving
//! views spread evenly over the map.
//!
//! * [`map_model`] holds components, views and their per-view statistics.
//! * [`scoring`] turns statistics into a retention score.
//! * [`spatial_index`] counts neighboring views in an (x, y, θ) voxel.
//! * [`pruner`] selects the views to delete.
//! * [`metrics`] measures relocalization quality and view growth.
//! * [`simulator`] drives deterministic multi-run experiments.
//! * [`persistence`] reads and writes the text map format.
//!
//! ```
//! use viewprune::prelude::*;
//!
//! let env = Environment::rectangular("studio", 6.0, 5.0, &["day", "night"], 1)?;
//! let outcome = lifelong_experiment(&env, 6, &SimConfig::default(), &PruneConfig::default(), 7)?;
//! assert_eq!(outcome.view_counts.len(), 6);
//! println!("growth rate {:.2} views/run", outcome.summary.growth_rate);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod map_model;
pub mod metrics;
pub mod persistence;
pub mod pose;
pub mod pruner;
pub mod record;
pub mod scoring;
pub mod simulator;
pub mod spatial_index;

pub mod prelude {
    pub use crate::map_model::{
        AppearanceKey, Component, ComponentId, MapError, MapGraph, RunHandle, View, ViewId, ViewStats,
    };
    pub use crate::metrics::{
        aggregate, cross_observation_stats, growth_rate, relocalization_distance, FrameEvent, MetricsReport,
        MetricsSummary, RunTrace,
    };
    pub use crate::persistence::{load_map, map_to_string, parse_map, save_map, LoadedMap};
    pub use crate::pose::{angular_distance, normalize_angle, Pose2D, RigidTransform2D};
    pub use crate::pruner::{find_views_for_deletion, PruneConfig, PruneReport};
    pub use crate::scoring::{
        compute_view_score, resolve_threshold, RunObservationContext, ScoreThreshold, ScoreWeights,
    };
    pub use crate::simulator::{execute_run, lifelong_experiment, Environment, LifelongOutcome, SimConfig};
    pub use crate::spatial_index::{ViewGridIndex, VoxelSize};
}

// The guide's code listings compile and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/map-model.md")]
    mod map_model {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    mod scoring {}
    #[doc = include_str!("../../../book/src/voxel-neighbors.md")]
    mod voxel_neighbors {}
    #[doc = include_str!("../../../book/src/pruning.md")]
    mod pruning {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
