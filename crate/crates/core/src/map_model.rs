//! Persistent view-level map state: components, views and their cross-run
//! observation statistics.
//!
//! Pose-graph nodes and edges are not modeled. Every view carries an absolute
//! pose in the frame of the component that owns it, and that is all the
//! pruner and the metrics ever consume.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::pose::{Pose2D, RigidTransform2D};

/// Unique view identifier. Allocated monotonically and never reused, even
/// after the view is deleted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ViewId(pub u64);

impl fmt::Display for ViewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(pub u64);

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Appearance signature a view was created under (the lighting state, in the
/// simulator). A single whitespace-free token so it survives the text format.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AppearanceKey(String);

impl AppearanceKey {
    pub fn new(token: impl Into<String>) -> Result<Self, MapError> {
        let token = token.into();
        if token.is_empty() || token.chars().any(|c| c.is_whitespace() || c.is_control()) {
            return Err(MapError::InvalidAppearance(token));
        }
        Ok(Self(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AppearanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Observation bookkeeping the view score is computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ViewStats {
    /// Observations in the current run; reset at every run start.
    pub n_obs_cur: u32,
    /// Run index (1-based) in which the view was created.
    pub created_run: u32,
    /// Frame index within the creating run.
    pub created_at: u32,
    /// Runs during which the view was present in its component, creating run
    /// included.
    pub n_runs: u32,
    /// Runs in which the view was observed at least once.
    pub n_obs_runs: u32,
    /// Whether the view ever contributed to a relocalization. Sticky.
    pub used_for_reloc: bool,
}

impl ViewStats {
    pub fn fresh(created_run: u32, created_at: u32) -> Self {
        Self {
            n_obs_cur: 0,
            created_run,
            created_at,
            n_runs: 1,
            n_obs_runs: 0,
            used_for_reloc: false,
        }
    }

    /// Checks the counter invariants, returning a description of the first
    /// violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.n_runs == 0 {
            return Err("n_runs must be at least 1".into());
        }
        if self.n_obs_runs > self.n_runs {
            return Err(format!(
                "n_obs_runs ({}) exceeds n_runs ({})",
                self.n_obs_runs, self.n_runs
            ));
        }
        if self.used_for_reloc && self.n_obs_runs == 0 {
            return Err("view used for relocalization was never observed".into());
        }
        if self.n_obs_cur > 0 && self.n_obs_runs == 0 {
            return Err("view observed this run but n_obs_runs is 0".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct View {
    pub id: ViewId,
    pub pose: Pose2D,
    pub stats: ViewStats,
    pub appearance: AppearanceKey,
}

/// A disjoint piece of the map with its own coordinate frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub id: ComponentId,
    pub views: BTreeMap<ViewId, View>,
    /// Runs this component has been part of the map for.
    pub run_count: u32,
}

impl Component {
    pub fn new(id: ComponentId, run_count: u32) -> Self {
        Self {
            id,
            views: BTreeMap::new(),
            run_count,
        }
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn view(&self, id: ViewId) -> Option<&View> {
        self.views.get(&id)
    }

    /// Largest `n_obs_cur` over the component's views.
    pub fn max_obs(&self) -> u32 {
        self.views.values().map(|v| v.stats.n_obs_cur).max().unwrap_or(0)
    }
}

/// Handle to the run started by [`MapGraph::begin_run`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunHandle {
    /// 1-based index of the run.
    pub run_index: u32,
    /// The fresh component the run starts in.
    pub component: ComponentId,
}

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("unknown view {0}")]
    UnknownView(ViewId),
    #[error("unknown component {0}")]
    UnknownComponent(ComponentId),
    #[error("cannot merge component {0} into itself")]
    SelfMerge(ComponentId),
    #[error("view {view} does not belong to component {component}")]
    NotInComponent { view: ViewId, component: ComponentId },
    #[error("view {0} was not observed this run and cannot be credited with a relocalization")]
    RelocViewNotObserved(ViewId),
    #[error("view {view} observed at frame {frame}, before its creation at frame {created_at}")]
    ObservedBeforeCreation { view: ViewId, frame: u32, created_at: u32 },
    #[error("no run has been started on this map")]
    NoRun,
    #[error("invalid appearance key {0:?}")]
    InvalidAppearance(String),
    #[error("pose is not finite")]
    NonFinitePose,
    #[error("map invariant violated: {0}")]
    Invariant(String),
}

/// The whole saved map: every component and the id allocators.
#[derive(Clone, Debug, PartialEq)]
pub struct MapGraph {
    /// Identifier of the environment the map was built in.
    pub environment: String,
    /// Number of runs started on this map; the current run's index.
    pub run_count: u32,
    components: BTreeMap<ComponentId, Component>,
    next_view_id: u64,
    next_component_id: u64,
}

impl MapGraph {
    pub fn new(environment: impl Into<String>) -> Self {
        Self {
            environment: environment.into(),
            run_count: 0,
            components: BTreeMap::new(),
            next_view_id: 0,
            next_component_id: 0,
        }
    }

    /// Rebuilds a map from persisted parts. Allocators are raised above any
    /// id in use.
    pub(crate) fn from_parts(
        environment: String,
        run_count: u32,
        components: BTreeMap<ComponentId, Component>,
        next_view_id: u64,
        next_component_id: u64,
    ) -> Self {
        let max_view = components
            .values()
            .flat_map(|c| c.views.keys())
            .map(|id| id.0 + 1)
            .max()
            .unwrap_or(0);
        let max_comp = components.keys().map(|id| id.0 + 1).max().unwrap_or(0);
        Self {
            environment,
            run_count,
            components,
            next_view_id: next_view_id.max(max_view),
            next_component_id: next_component_id.max(max_comp),
        }
    }

    pub fn current_run(&self) -> u32 {
        self.run_count
    }

    pub fn next_view_id(&self) -> u64 {
        self.next_view_id
    }

    pub fn next_component_id(&self) -> u64 {
        self.next_component_id
    }

    pub fn components(&self) -> impl Iterator<Item = &Component> {
        self.components.values()
    }

    pub fn component(&self, id: ComponentId) -> Option<&Component> {
        self.components.get(&id)
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn view_count(&self) -> usize {
        self.components.values().map(Component::len).sum()
    }

    pub fn views(&self) -> impl Iterator<Item = &View> {
        self.components.values().flat_map(|c| c.views.values())
    }

    pub fn view(&self, id: ViewId) -> Option<&View> {
        self.components.values().find_map(|c| c.views.get(&id))
    }

    pub fn component_of(&self, id: ViewId) -> Option<ComponentId> {
        self.components
            .values()
            .find(|c| c.views.contains_key(&id))
            .map(|c| c.id)
    }

    /// Starts a run: ages every existing view by one run, clears the
    /// current-run counters and opens a fresh component for the robot.
    pub fn begin_run(&mut self) -> RunHandle {
        self.run_count += 1;
        for component in self.components.values_mut() {
            component.run_count += 1;
            for view in component.views.values_mut() {
                view.stats.n_runs += 1;
                view.stats.n_obs_cur = 0;
            }
        }
        let id = self.allocate_component();
        self.components.insert(id, Component::new(id, 1));
        RunHandle {
            run_index: self.run_count,
            component: id,
        }
    }

    fn allocate_component(&mut self) -> ComponentId {
        let id = ComponentId(self.next_component_id);
        self.next_component_id += 1;
        id
    }

    /// Adds an empty component, for callers assembling a map by hand.
    pub fn add_component(&mut self) -> ComponentId {
        let id = self.allocate_component();
        self.components.insert(id, Component::new(id, self.run_count.max(1)));
        id
    }

    /// Creates a view in `component` stamped with the current run.
    pub fn create_view(
        &mut self,
        component: ComponentId,
        pose: Pose2D,
        appearance: AppearanceKey,
        frame: u32,
    ) -> Result<ViewId, MapError> {
        if self.run_count == 0 {
            return Err(MapError::NoRun);
        }
        self.insert_view(component, pose, appearance, ViewStats::fresh(self.run_count, frame))
    }

    /// Inserts a view with explicit statistics. Used when assembling maps for
    /// offline pruning, tests and loading.
    pub fn insert_view(
        &mut self,
        component: ComponentId,
        pose: Pose2D,
        appearance: AppearanceKey,
        stats: ViewStats,
    ) -> Result<ViewId, MapError> {
        if !pose.is_finite() {
            return Err(MapError::NonFinitePose);
        }
        stats.validate().map_err(MapError::Invariant)?;
        let id = ViewId(self.next_view_id);
        let comp = self
            .components
            .get_mut(&component)
            .ok_or(MapError::UnknownComponent(component))?;
        self.next_view_id += 1;
        comp.views.insert(
            id,
            View {
                id,
                pose: Pose2D::new(pose.x, pose.y, pose.theta),
                stats,
                appearance,
            },
        );
        Ok(id)
    }

    fn view_mut(&mut self, id: ViewId) -> Option<&mut View> {
        self.components.values_mut().find_map(|c| c.views.get_mut(&id))
    }

    /// Counts one observation of `view_id` at `frame` of the current run.
    pub fn record_observation(&mut self, view_id: ViewId, frame: u32) -> Result<ViewStats, MapError> {
        let run = self.run_count;
        let view = self.view_mut(view_id).ok_or(MapError::UnknownView(view_id))?;
        let stats = &mut view.stats;
        if stats.created_run == run && frame < stats.created_at {
            return Err(MapError::ObservedBeforeCreation {
                view: view_id,
                frame,
                created_at: stats.created_at,
            });
        }
        if stats.n_obs_cur == 0 {
            stats.n_obs_runs += 1;
        }
        stats.n_obs_cur += 1;
        Ok(*stats)
    }

    /// Relocalization: moves every view of `active` into `target`, expressed
    /// in the target frame through `transform`, and removes `active`.
    /// `reloc_views` (the views whose observation triggered the merge) are
    /// flagged as used for relocalization. Returns `target`.
    pub fn merge_components(
        &mut self,
        active: ComponentId,
        target: ComponentId,
        transform: RigidTransform2D,
        reloc_views: &[ViewId],
    ) -> Result<ComponentId, MapError> {
        if active == target {
            return Err(MapError::SelfMerge(active));
        }
        if !self.components.contains_key(&target) {
            return Err(MapError::UnknownComponent(target));
        }
        let source = self.components.get(&active).ok_or(MapError::UnknownComponent(active))?;
        let target_comp = &self.components[&target];
        for id in reloc_views {
            let view = source
                .views
                .get(id)
                .or_else(|| target_comp.views.get(id))
                .ok_or(MapError::UnknownView(*id))?;
            if view.stats.n_obs_cur == 0 {
                return Err(MapError::RelocViewNotObserved(*id));
            }
        }

        let source = self.components.remove(&active).expect("checked above");
        let target_comp = self.components.get_mut(&target).expect("checked above");
        for (id, mut view) in source.views {
            view.pose = transform.apply(&view.pose);
            target_comp.views.insert(id, view);
        }
        for id in reloc_views {
            if let Some(view) = target_comp.views.get_mut(id) {
                view.stats.used_for_reloc = true;
            }
        }
        Ok(target)
    }

    /// Removes `ids` from `component`. All-or-nothing: if any id is not in
    /// the component nothing is deleted.
    pub fn delete_views(&mut self, component: ComponentId, ids: &BTreeSet<ViewId>) -> Result<usize, MapError> {
        let comp = self
            .components
            .get_mut(&component)
            .ok_or(MapError::UnknownComponent(component))?;
        if let Some(missing) = ids.iter().find(|id| !comp.views.contains_key(id)) {
            return Err(MapError::NotInComponent {
                view: *missing,
                component,
            });
        }
        for id in ids {
            comp.views.remove(id);
        }
        Ok(ids.len())
    }

    /// Checks every structural and statistical invariant of the map.
    pub fn check_invariants(&self) -> Result<(), MapError> {
        let mut seen = BTreeSet::new();
        for (cid, comp) in &self.components {
            if *cid != comp.id {
                return Err(MapError::Invariant(format!(
                    "component keyed {cid} carries id {}",
                    comp.id
                )));
            }
            if cid.0 >= self.next_component_id {
                return Err(MapError::Invariant(format!(
                    "component {cid} not below allocator {}",
                    self.next_component_id
                )));
            }
            for (vid, view) in &comp.views {
                if *vid != view.id || !seen.insert(*vid) {
                    return Err(MapError::Invariant(format!("view id {vid} duplicated or mis-keyed")));
                }
                if vid.0 >= self.next_view_id {
                    return Err(MapError::Invariant(format!(
                        "view {vid} not below allocator {}",
                        self.next_view_id
                    )));
                }
                let th = view.pose.theta;
                if !view.pose.is_finite() || th <= -std::f64::consts::PI || th > std::f64::consts::PI {
                    return Err(MapError::Invariant(format!("view {vid} has invalid pose")));
                }
                view.stats
                    .validate()
                    .map_err(|e| MapError::Invariant(format!("view {vid}: {e}")))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn key(s: &str) -> AppearanceKey {
        AppearanceKey::new(s).unwrap()
    }

    fn map_with_views(n: usize, n_runs: u32) -> (MapGraph, ComponentId) {
        let mut map = MapGraph::new("test");
        map.run_count = n_runs;
        let c = map.add_component();
        for i in 0..n {
            let stats = ViewStats {
                n_obs_cur: 2,
                created_run: 1,
                created_at: 0,
                n_runs,
                n_obs_runs: 1,
                used_for_reloc: false,
            };
            map.insert_view(c, Pose2D::new(i as f64, 0.0, 0.0), key("day"), stats)
                .unwrap();
        }
        (map, c)
    }

    #[test]
    fn begin_run_ages_views_and_opens_component() {
        let (mut map, c) = map_with_views(10, 3);
        let handle = map.begin_run();
        assert_eq!(handle.run_index, 4);
        assert_ne!(handle.component, c);
        assert!(map.component(handle.component).unwrap().is_empty());
        for v in map.views() {
            assert_eq!(v.stats.n_runs, 4);
            assert_eq!(v.stats.n_obs_cur, 0);
        }
    }

    #[test]
    fn begin_run_on_empty_map() {
        let mut map = MapGraph::new("e");
        let h = map.begin_run();
        assert_eq!(map.component_count(), 1);
        assert_eq!(h.run_index, 1);
        assert_eq!(map.view_count(), 0);
    }

    #[test]
    fn view_from_last_run_has_two_runs_after_begin() {
        let mut map = MapGraph::new("e");
        let h = map.begin_run();
        let v = map.create_view(h.component, Pose2D::origin(), key("day"), 5).unwrap();
        assert_eq!(map.view(v).unwrap().stats.n_runs, 1);
        map.begin_run();
        assert_eq!(map.view(v).unwrap().stats.n_runs, 2);
    }

    #[test]
    fn record_observation_counts_runs_once() {
        let mut map = MapGraph::new("e");
        let h = map.begin_run();
        let v = map.create_view(h.component, Pose2D::origin(), key("day"), 0).unwrap();
        let s = map.record_observation(v, 1).unwrap();
        assert_eq!((s.n_obs_cur, s.n_obs_runs), (1, 1));
        let s = map.record_observation(v, 2).unwrap();
        assert_eq!((s.n_obs_cur, s.n_obs_runs), (2, 1));
        assert_eq!(
            map.record_observation(ViewId(99), 3),
            Err(MapError::UnknownView(ViewId(99)))
        );
    }

    #[test]
    fn observation_before_creation_is_rejected() {
        let mut map = MapGraph::new("e");
        let h = map.begin_run();
        let v = map.create_view(h.component, Pose2D::origin(), key("day"), 10).unwrap();
        assert!(matches!(
            map.record_observation(v, 9),
            Err(MapError::ObservedBeforeCreation { .. })
        ));
    }

    #[test]
    fn merge_identity_keeps_poses() {
        let mut map = MapGraph::new("e");
        let h1 = map.begin_run();
        let target = h1.component;
        map.create_view(target, Pose2D::new(5.0, 5.0, 0.0), key("day"), 0)
            .unwrap();
        let h2 = map.begin_run();
        let a = map
            .create_view(h2.component, Pose2D::new(0.0, 0.0, 0.0), key("day"), 0)
            .unwrap();
        let b = map
            .create_view(h2.component, Pose2D::new(1.0, 0.0, 0.0), key("day"), 1)
            .unwrap();
        let merged = map
            .merge_components(h2.component, target, RigidTransform2D::identity(), &[])
            .unwrap();
        assert_eq!(merged, target);
        assert!(map.component(h2.component).is_none());
        let comp = map.component(target).unwrap();
        assert_eq!(comp.len(), 3);
        assert_eq!(comp.view(a).unwrap().pose, Pose2D::new(0.0, 0.0, 0.0));
        assert_eq!(comp.view(b).unwrap().pose, Pose2D::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn merge_applies_rigid_transform() {
        let mut map = MapGraph::new("e");
        let target = map.begin_run().component;
        let active = map.begin_run().component;
        let v = map
            .create_view(active, Pose2D::new(1.0, 0.0, PI / 2.0), key("day"), 0)
            .unwrap();
        map.merge_components(active, target, RigidTransform2D::new(2.0, 0.0, 0.0), &[])
            .unwrap();
        let p = map.view(v).unwrap().pose;
        assert_eq!((p.x, p.y), (3.0, 0.0));
        assert!((p.theta - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn merge_flags_exactly_the_reloc_views() {
        let mut map = MapGraph::new("e");
        let target = map.begin_run().component;
        let ids: Vec<_> = (0..5)
            .map(|i| {
                map.create_view(target, Pose2D::new(i as f64, 0.0, 0.0), key("day"), i)
                    .unwrap()
            })
            .collect();
        let active = map.begin_run().component;
        for id in &ids[..3] {
            map.record_observation(*id, 1).unwrap();
        }
        map.merge_components(active, target, RigidTransform2D::identity(), &ids[..3])
            .unwrap();
        let flagged: Vec<_> = map.views().filter(|v| v.stats.used_for_reloc).map(|v| v.id).collect();
        assert_eq!(flagged, ids[..3].to_vec());
        map.check_invariants().unwrap();
    }

    #[test]
    fn merge_rejects_self_and_unobserved_reloc_views() {
        let mut map = MapGraph::new("e");
        let target = map.begin_run().component;
        let v = map.create_view(target, Pose2D::origin(), key("day"), 0).unwrap();
        let active = map.begin_run().component;
        assert_eq!(
            map.merge_components(active, active, RigidTransform2D::identity(), &[]),
            Err(MapError::SelfMerge(active))
        );
        assert_eq!(
            map.merge_components(active, target, RigidTransform2D::identity(), &[v]),
            Err(MapError::RelocViewNotObserved(v))
        );
        // nothing moved
        assert!(map.component(active).is_some());
    }

    #[test]
    fn delete_views_is_all_or_nothing() {
        let (mut map, c) = map_with_views(10, 2);
        assert_eq!(map.delete_views(c, &BTreeSet::new()).unwrap(), 0);
        assert_eq!(map.view_count(), 10);

        let bad: BTreeSet<_> = [ViewId(0), ViewId(1), ViewId(500)].into();
        assert!(matches!(
            map.delete_views(c, &bad),
            Err(MapError::NotInComponent { view: ViewId(500), .. })
        ));
        assert_eq!(map.view_count(), 10);

        let ok: BTreeSet<_> = [ViewId(0), ViewId(4), ViewId(9)].into();
        assert_eq!(map.delete_views(c, &ok).unwrap(), 3);
        assert_eq!(map.view_count(), 7);
        assert!(map.view(ViewId(4)).is_none());
        assert!(map.record_observation(ViewId(4), 0).is_err());
    }

    #[test]
    fn deleted_ids_are_not_reused() {
        let mut map = MapGraph::new("e");
        let c = map.begin_run().component;
        let a = map.create_view(c, Pose2D::origin(), key("day"), 0).unwrap();
        map.delete_views(c, &[a].into()).unwrap();
        let b = map.create_view(c, Pose2D::origin(), key("day"), 1).unwrap();
        assert!(b > a);
    }

    #[test]
    fn appearance_keys_are_tokens() {
        assert!(AppearanceKey::new("night").is_ok());
        assert!(AppearanceKey::new("").is_err());
        assert!(AppearanceKey::new("two words").is_err());
    }

    #[derive(Clone, Debug)]
    enum Op {
        Begin,
        Create(u8),
        Observe(u8),
        Delete(u8),
        Merge,
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            1 => Just(Op::Begin),
            3 => any::<u8>().prop_map(Op::Create),
            4 => any::<u8>().prop_map(Op::Observe),
            1 => any::<u8>().prop_map(Op::Delete),
            1 => Just(Op::Merge),
        ]
    }

    proptest! {
        #[test]
        fn random_operation_sequences_keep_invariants(ops in proptest::collection::vec(op(), 1..80)) {
            let mut map = MapGraph::new("p");
            let mut active = map.begin_run().component;
            let mut frame = 0u32;
            let mut observed_this_run: std::collections::BTreeMap<ViewId, u32> = Default::default();
            let mut deleted = Vec::new();
            for op in ops {
                frame += 1;
                let ids: Vec<ViewId> = map.views().map(|v| v.id).collect();
                match op {
                    Op::Begin => {
                        active = map.begin_run().component;
                        observed_this_run.clear();
                    }
                    Op::Create(k) => {
                        map.create_view(active, Pose2D::new(k as f64, 0.0, k as f64), key("day"), frame).unwrap();
                    }
                    Op::Observe(k) if !ids.is_empty() => {
                        let id = ids[k as usize % ids.len()];
                        map.record_observation(id, frame).unwrap();
                        *observed_this_run.entry(id).or_default() += 1;
                    }
                    Op::Delete(k) if !ids.is_empty() => {
                        let id = ids[k as usize % ids.len()];
                        let comp = map.component_of(id).unwrap();
                        map.delete_views(comp, &[id].into()).unwrap();
                        deleted.push(id);
                    }
                    Op::Merge => {
                        let other = map.components().map(|c| c.id).find(|c| *c != active);
                        if let Some(target) = other {
                            let before = map.component(active).unwrap().len() + map.component(target).unwrap().len();
                            active = map.merge_components(active, target, RigidTransform2D::new(0.5, -0.25, 1.0), &[]).unwrap();
                            prop_assert_eq!(map.component(active).unwrap().len(), before);
                        }
                    }
                    _ => {}
                }
                prop_assert!(map.check_invariants().is_ok());
                for v in map.views() {
                    prop_assert!(v.stats.n_obs_runs <= v.stats.n_runs);
                    prop_assert_eq!(v.stats.n_obs_cur, observed_this_run.get(&v.id).copied().unwrap_or(0));
                }
                for id in &deleted {
                    prop_assert!(map.view(*id).is_none());
                }
            }
        }

        #[test]
        fn k_run_starts_add_k_runs(k in 1u32..20) {
            let (mut map, _) = map_with_views(4, 1);
            for _ in 0..k {
                map.begin_run();
            }
            for v in map.views() {
                prop_assert_eq!(v.stats.n_runs, 1 + k);
            }
        }
    }
}
