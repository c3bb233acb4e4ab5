//! Per-view retention score and score thresholds.
//!
//! A view's score is
//!
//! ```text
//! w1 * reloc + w2 * n_obs_cur / max_obs + w3 * n_obs_runs / n_runs
//! ```
//!
//! where `reloc` is 1 for views that helped relocalize into a component and
//! `max_obs` is the largest current-run observation count in the component.
//! Both ratios are at most 1, so no score exceeds `w1 + w2 + w3`.

use thiserror::Error;

use crate::map_model::ViewStats;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("weight {name} must be finite and non-negative, got {value}")]
    InvalidWeight { name: &'static str, value: f64 },
    #[error("threshold must be finite and non-negative, got {0}")]
    InvalidAbsolute(f64),
    #[error("relative threshold must lie in [0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("view has n_runs = 0")]
    ZeroRuns,
    #[error("n_obs_runs ({n_obs_runs}) exceeds n_runs ({n_runs})")]
    RunsOverflow { n_obs_runs: u32, n_runs: u32 },
    #[error("max_obs ({max_obs}) is below the view's n_obs_cur ({n_obs_cur})")]
    InconsistentMaxObs { max_obs: u32, n_obs_cur: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreWeights {
    w1: f64,
    w2: f64,
    w3: f64,
}

impl ScoreWeights {
    /// `w1` weights relocalization use, `w2` the current-run observation
    /// ratio, `w3` the fraction of runs the view was observed in.
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self, ScoreError> {
        for (name, value) in [("w1", w1), ("w2", w2), ("w3", w3)] {
            if !value.is_finite() || value < 0.0 {
                return Err(ScoreError::InvalidWeight { name, value });
            }
        }
        Ok(Self { w1, w2, w3 })
    }

    pub fn w1(&self) -> f64 {
        self.w1
    }

    pub fn w2(&self) -> f64 {
        self.w2
    }

    pub fn w3(&self) -> f64 {
        self.w3
    }

    /// Largest attainable score.
    pub fn max_score(&self) -> f64 {
        self.w1 + self.w2 + self.w3
    }
}

impl Default for ScoreWeights {
    /// (1.5, 1, 3), the weights used for the long lifelong experiments.
    fn default() -> Self {
        Self {
            w1: 1.5,
            w2: 1.0,
            w3: 3.0,
        }
    }
}

/// Views scoring strictly above the resolved threshold are kept.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScoreThreshold {
    Absolute(f64),
    /// Fraction of [`ScoreWeights::max_score`].
    RelativeToMax(f64),
}

impl ScoreThreshold {
    pub fn absolute(value: f64) -> Result<Self, ScoreError> {
        if !value.is_finite() || value < 0.0 {
            return Err(ScoreError::InvalidAbsolute(value));
        }
        Ok(Self::Absolute(value))
    }

    pub fn relative(fraction: f64) -> Result<Self, ScoreError> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(ScoreError::InvalidFraction(fraction));
        }
        Ok(Self::RelativeToMax(fraction))
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        match *self {
            Self::Absolute(v) => Self::absolute(v).map(|_| ()),
            Self::RelativeToMax(f) => Self::relative(f).map(|_| ()),
        }
    }
}

pub fn resolve_threshold(threshold: ScoreThreshold, weights: &ScoreWeights) -> f64 {
    match threshold {
        ScoreThreshold::Absolute(v) => v,
        ScoreThreshold::RelativeToMax(f) => f * weights.max_score(),
    }
}

/// Per-run context shared by all views of a component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunObservationContext {
    /// Largest `n_obs_cur` of any view in the component this run.
    pub max_obs: u32,
}

pub fn compute_view_score(
    stats: &ViewStats,
    ctx: RunObservationContext,
    weights: &ScoreWeights,
) -> Result<f64, ScoreError> {
    if stats.n_runs == 0 {
        return Err(ScoreError::ZeroRuns);
    }
    if stats.n_obs_runs > stats.n_runs {
        return Err(ScoreError::RunsOverflow {
            n_obs_runs: stats.n_obs_runs,
            n_runs: stats.n_runs,
        });
    }
    if ctx.max_obs < stats.n_obs_cur {
        return Err(ScoreError::InconsistentMaxObs {
            max_obs: ctx.max_obs,
            n_obs_cur: stats.n_obs_cur,
        });
    }
    let reloc = if stats.used_for_reloc { 1.0 } else { 0.0 };
    // no observations at all this run: the ratio is taken as 0
    let current = if ctx.max_obs == 0 {
        0.0
    } else {
        f64::from(stats.n_obs_cur) / f64::from(ctx.max_obs)
    };
    let across = f64::from(stats.n_obs_runs) / f64::from(stats.n_runs);
    Ok(weights.w1 * reloc + weights.w2 * current + weights.w3 * across)
}
