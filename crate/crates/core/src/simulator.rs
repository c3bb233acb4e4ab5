//! Deterministic multi-run robot simulator.
//!
//! Stands in for the camera front end with a geometric, lighting-dependent
//! observation model. A view is observable from a robot pose when it lies
//! within `observation_radius` of the robot and its heading is within half
//! of `observation_fov` of the robot's heading. Each observable view is then
//! observed with probability `p_observe_matched` when it was created under
//! the current lighting state and `p_observe_mismatched` otherwise.
//!
//! Runs start at the dock in a fresh component. The robot first drives
//! `undock_distance` straight out along the dock heading, then follows a
//! seeded random-waypoint path inside the navigable region. After traveling
//! `create_gap_distance` without observing anything it creates a view at its
//! pose. Observing `reloc_min_views` distinct views of an earlier component
//! merges the run's component into it (relocalization). Poses are ground
//! truth, so merges use the identity transform. At the end of the run the
//! pruner thins the component the robot finished in.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::map_model::{AppearanceKey, ComponentId, MapError, MapGraph, ViewId};
use crate::metrics::{aggregate, FrameEvent, MetricsError, MetricsReport, MetricsSummary, RelocEvent, RunTrace};
use crate::persistence::{map_to_string, parse_map, PersistError};
use crate::pose::{angular_distance, Pose2D, RigidTransform2D};
use crate::pruner::{find_views_for_deletion, PruneConfig, PruneError, PruneReport};
use crate::scoring::RunObservationContext;
use crate::spatial_index::{ViewGridIndex, VoxelSize};

/// Square feet per square meter.
pub const FT2_PER_M2: f64 = 10.763_910_416_709_722;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid environment: {0}")]
    Environment(String),
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("a lifelong experiment needs at least 2 runs, got {0}")]
    TooFewRuns(u32),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Prune(#[from] PruneError),
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Axis-aligned rectangle, `x0 < x1`, `y0 < y1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    fn overlaps(&self, other: &Rect) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }
}

/// Navigable floor: a union of non-overlapping rectangles, which covers any
/// rectilinear polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    rects: Vec<Rect>,
}

impl Region {
    pub fn new(rects: Vec<Rect>) -> Result<Self, SimError> {
        if rects.is_empty() {
            return Err(SimError::Environment("region needs at least one rectangle".into()));
        }
        for (i, r) in rects.iter().enumerate() {
            let finite = [r.x0, r.y0, r.x1, r.y1].iter().all(|v| v.is_finite());
            if !finite || r.x0 >= r.x1 || r.y0 >= r.y1 {
                return Err(SimError::Environment(format!("rectangle {i} is empty or not finite")));
            }
            if rects[..i].iter().any(|o| o.overlaps(r)) {
                return Err(SimError::Environment(format!("rectangle {i} overlaps an earlier one")));
            }
        }
        Ok(Self { rects })
    }

    pub fn rectangle(width: f64, height: f64) -> Result<Self, SimError> {
        Self::new(vec![Rect::new(0.0, 0.0, width, height)])
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn area_m2(&self) -> f64 {
        self.rects.iter().map(Rect::area).sum()
    }

    pub fn area_ft2(&self) -> f64 {
        self.area_m2() * FT2_PER_M2
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.rects.iter().any(|r| r.contains(x, y))
    }

    /// `(x0, y0, x1, y1)` of the bounding box.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.rects.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), r| (a.min(r.x0), b.min(r.y0), c.max(r.x1), d.max(r.y1)),
        )
    }

    fn sample_point(&self, rng: &mut impl Rng, margin: f64) -> (f64, f64) {
        let total = self.area_m2();
        let mut pick = rng.gen::<f64>() * total;
        let mut rect = self.rects[self.rects.len() - 1];
        for r in &self.rects {
            if pick < r.area() {
                rect = *r;
                break;
            }
            pick -= r.area();
        }
        let mx = margin.min((rect.x1 - rect.x0) / 2.0);
        let my = margin.min((rect.y1 - rect.y0) / 2.0);
        (
            rng.gen_range(rect.x0 + mx..=rect.x1 - mx),
            rng.gen_range(rect.y0 + my..=rect.y1 - my),
        )
    }

    /// Whether the straight segment stays on the floor, sampled every 5 cm.
    fn segment_inside(&self, a: (f64, f64), b: (f64, f64)) -> bool {
        let len = (b.0 - a.0).hypot(b.1 - a.1);
        let steps = (len / 0.05).ceil().max(1.0) as usize;
        (0..=steps).all(|i| {
            let t = i as f64 / steps as f64;
            self.contains(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
        })
    }
}

/// Which lighting state a run happens under.
#[derive(Clone, Debug, PartialEq)]
pub enum LightingSchedule {
    /// State `(run − 1) mod k`.
    Cyclic,
    /// A fixed sequence of state indices, repeated.
    Sequence(Vec<usize>),
    /// Uniformly random per run, from the environment seed.
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    pub name: String,
    pub region: Region,
    pub dock: Pose2D,
    pub lighting_states: Vec<AppearanceKey>,
    pub schedule: LightingSchedule,
    pub seed: u64,
}

impl Environment {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.name.is_empty() || self.name.chars().any(char::is_whitespace) {
            return Err(SimError::Environment(format!(
                "name {:?} is not a single token",
                self.name
            )));
        }
        if !self.dock.is_finite() || !self.region.contains(self.dock.x, self.dock.y) {
            return Err(SimError::Environment(
                "dock pose lies outside the navigable region".into(),
            ));
        }
        if self.lighting_states.is_empty() {
            return Err(SimError::Environment("at least one lighting state is required".into()));
        }
        if let LightingSchedule::Sequence(seq) = &self.schedule {
            if seq.is_empty() || seq.iter().any(|i| *i >= self.lighting_states.len()) {
                return Err(SimError::Environment(
                    "lighting sequence is empty or out of range".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn lighting_for(&self, run_index: u32) -> &AppearanceKey {
        let k = self.lighting_states.len();
        let slot = run_index.saturating_sub(1) as usize;
        let idx = match &self.schedule {
            LightingSchedule::Cyclic => slot % k,
            LightingSchedule::Sequence(seq) => seq[slot % seq.len()],
            LightingSchedule::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, u64::from(run_index)));
                rng.gen_range(0..k)
            }
        };
        &self.lighting_states[idx]
    }

    /// A `width` × `height` meter room with the dock in a corner facing +x.
    pub fn rectangular(name: &str, width: f64, height: f64, lighting: &[&str], seed: u64) -> Result<Self, SimError> {
        let lighting_states = lighting
            .iter()
            .map(|s| AppearanceKey::new(*s))
            .collect::<Result<Vec<_>, _>>()?;
        let env = Self {
            name: name.to_string(),
            region: Region::rectangle(width, height)?,
            dock: Pose2D::new(0.5, 0.5, 0.0),
            lighting_states,
            schedule: LightingSchedule::Cyclic,
            seed,
        };
        env.validate()?;
        Ok(env)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub frames_per_run: u32,
    /// Travel per frame, meters.
    pub step_distance: f64,
    pub observation_radius: f64,
    /// Full width of the heading cone a view is observable within, radians.
    pub observation_fov: f64,
    pub p_observe_matched: f64,
    pub p_observe_mismatched: f64,
    /// Travel without any observation after which a view is created.
    pub create_gap_distance: f64,
    /// Distinct views of an earlier component needed to relocalize into it.
    pub reloc_min_views: usize,
    /// Waypoints keep this clearance from the region boundary.
    pub waypoint_margin: f64,
    /// Every run first drives this far straight out of the dock, along the
    /// dock heading, before wandering.
    pub undock_distance: f64,
    /// When set, every run drives the same path (like replaying one log);
    /// otherwise each run gets its own path.
    pub trajectory_seed: Option<u64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            frames_per_run: 2400,
            step_distance: 0.05,
            observation_radius: 0.45,
            observation_fov: 0.5,
            p_observe_matched: 0.5,
            p_observe_mismatched: 0.03,
            create_gap_distance: 0.7,
            reloc_min_views: 3,
            waypoint_margin: 0.3,
            undock_distance: 1.0,
            trajectory_seed: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SimError::Config(format!("{name} must be finite and positive, got {v}")))
            }
        };
        positive("step_distance", self.step_distance)?;
        positive("observation_radius", self.observation_radius)?;
        positive("observation_fov", self.observation_fov)?;
        positive("create_gap_distance", self.create_gap_distance)?;
        if self.observation_fov > TAU {
            return Err(SimError::Config("observation_fov exceeds 2π".into()));
        }
        for (name, v) in [
            ("waypoint_margin", self.waypoint_margin),
            ("undock_distance", self.undock_distance),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::Config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        for (name, p) in [
            ("p_observe_matched", self.p_observe_matched),
            ("p_observe_mismatched", self.p_observe_mismatched),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.p_observe_mismatched > self.p_observe_matched {
            return Err(SimError::Config(
                "p_observe_mismatched exceeds p_observe_matched".into(),
            ));
        }
        if self.reloc_min_views == 0 {
            return Err(SimError::Config("reloc_min_views must be at least 1".into()));
        }
        if self.frames_per_run == 0 {
            return Err(SimError::Config("frames_per_run must be at least 1".into()));
        }
        Ok(())
    }

    /// Geometric part of the observation model.
    pub fn in_view(&self, robot: &Pose2D, view: &Pose2D) -> bool {
        robot.distance_to(view) <= self.observation_radius
            && angular_distance(robot.theta, view.theta) <= self.observation_fov / 2.0
    }
}

/// SplitMix64 finalizer over `(seed, stream)`; used to derive independent
/// seeds for runs, cells and random streams.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random-waypoint motion starting at the dock.
struct Trajectory<'a> {
    region: &'a Region,
    rng: ChaCha8Rng,
    margin: f64,
    pose: Pose2D,
    target: (f64, f64),
}

impl<'a> Trajectory<'a> {
    fn new(region: &'a Region, dock: Pose2D, seed: u64, margin: f64, undock: f64) -> Self {
        let mut t = Self {
            region,
            rng: ChaCha8Rng::seed_from_u64(seed),
            margin,
            pose: dock,
            target: (dock.x, dock.y),
        };
        let (s, c) = dock.theta.sin_cos();
        let exit = (dock.x + undock * c, dock.y + undock * s);
        if undock > 0.0 && region.segment_inside((dock.x, dock.y), exit) {
            t.target = exit;
        } else {
            t.pick_target();
        }
        t
    }

    fn pick_target(&mut self) {
        let from = (self.pose.x, self.pose.y);
        for _ in 0..64 {
            let candidate = self.region.sample_point(&mut self.rng, self.margin);
            let far_enough = (candidate.0 - from.0).hypot(candidate.1 - from.1) > 0.2;
            if far_enough && self.region.segment_inside(from, candidate) {
                self.target = candidate;
                return;
            }
        }
        // boxed in: head back to where we are, the next pick retries
        self.target = from;
    }

    /// Advances `step` meters along the path; returns distance moved.
    fn advance(&mut self, step: f64) -> f64 {
        let mut remaining = step;
        let mut moved = 0.0;
        for _ in 0..8 {
            if remaining <= 0.0 {
                break;
            }
            let dx = self.target.0 - self.pose.x;
            let dy = self.target.1 - self.pose.y;
            let dist = dx.hypot(dy);
            if dist <= remaining {
                self.pose = Pose2D::new(self.target.0, self.target.1, self.pose.theta);
                remaining -= dist;
                moved += dist;
                self.pick_target();
                let (tx, ty) = self.target;
                if (tx - self.pose.x).hypot(ty - self.pose.y) > 0.0 {
                    self.pose = Pose2D::new(self.pose.x, self.pose.y, (ty - self.pose.y).atan2(tx - self.pose.x));
                }
            } else {
                let heading = dy.atan2(dx);
                self.pose = Pose2D::new(
                    self.pose.x + remaining * dx / dist,
                    self.pose.y + remaining * dy / dist,
                    heading,
                );
                moved += remaining;
                remaining = 0.0;
            }
        }
        moved
    }
}

/// Everything one run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub trace: RunTrace,
    pub lighting: AppearanceKey,
    /// Component the robot finished the run in (the one that was pruned).
    pub final_component: ComponentId,
    pub prune_report: PruneReport,
    pub views_at_end: usize,
}

/// Executes one run on `map`: drive, observe, create views, relocalize, and
/// prune at the end. Configuration errors are reported before the map is
/// touched.
pub fn execute_run(
    env: &Environment,
    map: &mut MapGraph,
    sim: &SimConfig,
    prune: &PruneConfig,
    run_seed: u64,
) -> Result<RunOutcome, SimError> {
    env.validate()?;
    sim.validate()?;
    prune.validate()?;

    let handle = map.begin_run();
    let run_index = handle.run_index;
    let lighting = env.lighting_for(run_index).clone();
    let trajectory_seed = sim.trajectory_seed.unwrap_or_else(|| derive_seed(run_seed, 1));
    let mut trajectory = Trajectory::new(
        &env.region,
        env.dock,
        trajectory_seed,
        sim.waypoint_margin,
        sim.undock_distance,
    );
    let mut obs_rng = ChaCha8Rng::seed_from_u64(derive_seed(run_seed, 2));

    let lookup_voxel = VoxelSize::new(
        2.0 * sim.observation_radius,
        2.0 * sim.observation_radius,
        sim.observation_fov.min(TAU),
    )
    .map_err(|e| SimError::Config(e.to_string()))?;
    let mut lookup = ViewGridIndex::with_views(lookup_voxel, map.views().map(|v| (v.id, &v.pose)));

    // views of earlier components, by component; shrinks as the run merges
    let mut prior: BTreeMap<ViewId, ComponentId> = BTreeMap::new();
    for comp in map.components().filter(|c| c.id != handle.component) {
        for id in comp.views.keys() {
            prior.insert(*id, comp.id);
        }
    }
    let mut seen_prior: BTreeMap<ComponentId, BTreeSet<ViewId>> = BTreeMap::new();

    let mut current = handle.component;
    let mut reloc_event = None;
    let mut frames = Vec::with_capacity(sim.frames_per_run as usize);
    let mut distance = 0.0;
    let mut since_last_obs = 0.0;

    for frame in 0..sim.frames_per_run {
        if frame > 0 {
            let moved = trajectory.advance(sim.step_distance);
            distance += moved;
            since_last_obs += moved;
        }
        let pose = trajectory.pose;

        let mut observed = Vec::new();
        for id in lookup.neighbors(&pose) {
            let view = map.view(id).expect("lookup mirrors the map");
            if !sim.in_view(&pose, &view.pose) {
                continue;
            }
            let p = if view.appearance == lighting {
                sim.p_observe_matched
            } else {
                sim.p_observe_mismatched
            };
            if obs_rng.gen::<f64>() < p {
                observed.push(id);
            }
        }

        let mut cross = false;
        for id in &observed {
            let stats = map.record_observation(*id, frame)?;
            cross |= stats.created_run < run_index;
            if let Some(comp) = prior.get(id) {
                seen_prior.entry(*comp).or_default().insert(*id);
            }
        }

        // relocalize into any earlier component seen often enough
        let ready: Vec<ComponentId> = seen_prior
            .iter()
            .filter(|(_, seen)| seen.len() >= sim.reloc_min_views)
            .map(|(c, _)| *c)
            .collect();
        for target in ready {
            let trigger: Vec<ViewId> = seen_prior.remove(&target).unwrap_or_default().into_iter().collect();
            current = map.merge_components(current, target, RigidTransform2D::identity(), &trigger)?;
            prior.retain(|_, c| *c != target);
            if reloc_event.is_none() {
                reloc_event = Some(RelocEvent {
                    frame,
                    distance,
                    target,
                });
            }
        }

        let mut created = Vec::new();
        if observed.is_empty() {
            if since_last_obs >= sim.create_gap_distance {
                let id = map.create_view(current, pose, lighting.clone(), frame)?;
                lookup.insert(id, pose);
                created.push(id);
                since_last_obs = 0.0;
            }
        } else {
            since_last_obs = 0.0;
        }

        observed.sort_unstable();
        frames.push(FrameEvent {
            frame,
            distance,
            pose,
            observed_views: observed,
            created_views: created,
            cross_observation: cross,
        });
    }

    let component = map.component(current).expect("current component exists");
    let ctx = RunObservationContext {
        max_obs: component.max_obs(),
    };
    let prune_report = find_views_for_deletion(component, run_index, prune, ctx)?;
    map.delete_views(current, &prune_report.delete_set)?;

    Ok(RunOutcome {
        trace: RunTrace {
            run_index,
            start_component: handle.component,
            frames,
            reloc_event,
        },
        lighting,
        final_component: current,
        prune_report,
        views_at_end: map.view_count(),
    })
}

/// Result of a lifelong experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct LifelongOutcome {
    pub runs: Vec<RunOutcome>,
    pub reports: Vec<MetricsReport>,
    /// Total views at the end of each run.
    pub view_counts: Vec<usize>,
    pub summary: MetricsSummary,
    pub final_map: MapGraph,
}

/// Seed of run `run_index` (1-based) of an experiment.
pub fn run_seed(env: &Environment, master_seed: u64, run_index: u32) -> u64 {
    derive_seed(master_seed ^ env.seed.rotate_left(17), u64::from(run_index))
}

/// Runs `n_runs` consecutive runs, saving the map to text after each run and
/// loading it back before the next, as a robot would between sessions.
pub fn lifelong_experiment(
    env: &Environment,
    n_runs: u32,
    sim: &SimConfig,
    prune: &PruneConfig,
    master_seed: u64,
) -> Result<LifelongOutcome, SimError> {
    if n_runs < 2 {
        return Err(SimError::TooFewRuns(n_runs));
    }
    env.validate()?;
    sim.validate()?;
    prune.validate()?;

    let mut saved = map_to_string(&MapGraph::new(env.name.clone()))?;
    let mut runs = Vec::with_capacity(n_runs as usize);
    let mut reports = Vec::with_capacity(n_runs as usize);
    let mut view_counts = Vec::with_capacity(n_runs as usize);
    let mut last_map = None;
    for run in 1..=n_runs {
        let mut map = parse_map(&saved)?.map;
        let outcome = execute_run(env, &mut map, sim, prune, run_seed(env, master_seed, run))?;
        saved = map_to_string(&map)?;
        reports.push(MetricsReport::from_trace(&outcome.trace, outcome.views_at_end));
        view_counts.push(outcome.views_at_end);
        runs.push(outcome);
        last_map = Some(map);
    }
    let summary = aggregate(&reports, &view_counts)?;
    Ok(LifelongOutcome {
        runs,
        reports,
        view_counts,
        summary,
        final_map: last_map.expect("at least two runs"),
    })
}
