//! Neighbor counting in an (x, y, θ) box around a view.
//!
//! A voxel of size `(sx, sy, sθ)` is a box of that total extent centered on
//! the query view: another view `u` is a neighbor of `q` when
//! `|u.x − q.x| ≤ sx/2`, `|u.y − q.y| ≤ sy/2` and the wrapped heading
//! difference is at most `sθ/2`.
//!
//! [`ViewGridIndex`] buckets views into cells at least as large as the voxel
//! on every axis, so a query only inspects the 3×3×3 block of cells around
//! the query cell. Heading cells wrap around at ±π.

use std::collections::HashMap;
use std::f64::consts::TAU;

use thiserror::Error;

use crate::map_model::ViewId;
pub use crate::pose::angular_distance;
use crate::pose::Pose2D;

#[derive(Debug, Error, PartialEq)]
#[error("voxel size must be finite and positive with theta at most 2π, got ({sx}, {sy}, {stheta})")]
pub struct InvalidVoxel {
    pub sx: f64,
    pub sy: f64,
    pub stheta: f64,
}

/// Total extent of the neighbor box along x, y (meters) and θ (radians).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VoxelSize {
    sx: f64,
    sy: f64,
    stheta: f64,
}

impl VoxelSize {
    pub fn new(sx: f64, sy: f64, stheta: f64) -> Result<Self, InvalidVoxel> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(sx) && ok(sy) && ok(stheta)) || stheta > TAU {
            return Err(InvalidVoxel { sx, sy, stheta });
        }
        Ok(Self { sx, sy, stheta })
    }

    pub fn sx(&self) -> f64 {
        self.sx
    }

    pub fn sy(&self) -> f64 {
        self.sy
    }

    pub fn stheta(&self) -> f64 {
        self.stheta
    }

    /// Box membership of `other` in the voxel centered on `center`.
    pub fn contains(&self, center: &Pose2D, other: &Pose2D) -> bool {
        (other.x - center.x).abs() <= self.sx / 2.0
            && (other.y - center.y).abs() <= self.sy / 2.0
            && angular_distance(other.theta, center.theta) <= self.stheta / 2.0
    }
}

impl Default for VoxelSize {
    /// (1 m, 1 m, 2 rad).
    fn default() -> Self {
        Self {
            sx: 1.0,
            sy: 1.0,
            stheta: 2.0,
        }
    }
}

type CellKey = (i64, i64, u32);

/// Bucketed (id, pose) store supporting insert, remove and neighbor counts.
#[derive(Clone, Debug)]
pub struct ViewGridIndex {
    voxel: VoxelSize,
    theta_bins: u32,
    theta_width: f64,
    cells: HashMap<CellKey, Vec<(ViewId, Pose2D)>>,
    locations: HashMap<ViewId, CellKey>,
}

impl ViewGridIndex {
    pub fn new(voxel: VoxelSize) -> Self {
        // Equal-width heading bins no narrower than stheta, so a half-extent
        // step never skips a bin.
        let theta_bins = ((TAU / voxel.stheta).floor() as u32).max(1);
        Self {
            voxel,
            theta_bins,
            theta_width: TAU / f64::from(theta_bins),
            cells: HashMap::new(),
            locations: HashMap::new(),
        }
    }

    pub fn with_views<'a>(voxel: VoxelSize, views: impl IntoIterator<Item = (ViewId, &'a Pose2D)>) -> Self {
        let mut index = Self::new(voxel);
        for (id, pose) in views {
            index.insert(id, *pose);
        }
        index
    }

    pub fn voxel(&self) -> VoxelSize {
        self.voxel
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn contains(&self, id: ViewId) -> bool {
        self.locations.contains_key(&id)
    }

    fn theta_bin(&self, theta: f64) -> u32 {
        let wrapped = theta.rem_euclid(TAU);
        ((wrapped / self.theta_width).floor() as u32).min(self.theta_bins - 1)
    }

    fn key(&self, pose: &Pose2D) -> CellKey {
        (
            (pose.x / self.voxel.sx).floor() as i64,
            (pose.y / self.voxel.sy).floor() as i64,
            self.theta_bin(pose.theta),
        )
    }

    /// Inserts or moves `id` to `pose`.
    pub fn insert(&mut self, id: ViewId, pose: Pose2D) {
        self.remove(id);
        let key = self.key(&pose);
        self.cells.entry(key).or_default().push((id, pose));
        self.locations.insert(id, key);
    }

    /// Returns whether `id` was present.
    pub fn remove(&mut self, id: ViewId) -> bool {
        let Some(key) = self.locations.remove(&id) else {
            return false;
        };
        if let Some(bucket) = self.cells.get_mut(&key) {
            bucket.retain(|(other, _)| *other != id);
            if bucket.is_empty() {
                self.cells.remove(&key);
            }
        }
        true
    }

    /// Heading bins to visit around `bin`: all of them when there are at
    /// most three, else the bin and its two wrap-around neighbors.
    fn theta_neighborhood(&self, bin: u32) -> ([u32; 3], usize) {
        let n = self.theta_bins;
        if n <= 3 {
            return ([0, 1, 2], n as usize);
        }
        ([(bin + n - 1) % n, bin, (bin + 1) % n], 3)
    }

    /// Calls `f` for every stored view inside the voxel around `query`,
    /// including one stored under the query's own id.
    fn for_each_in_voxel(&self, query: &Pose2D, mut f: impl FnMut(ViewId, &Pose2D)) {
        let (cx, cy, ct) = self.key(query);
        let (thetas, used) = self.theta_neighborhood(ct);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &t in &thetas[..used] {
                    let Some(bucket) = self.cells.get(&(cx + dx, cy + dy, t)) else {
                        continue;
                    };
                    for (id, pose) in bucket {
                        if self.voxel.contains(query, pose) {
                            f(*id, pose);
                        }
                    }
                }
            }
        }
    }

    /// Number of stored views other than `query_id` inside the voxel
    /// centered on `query`.
    pub fn count_neighbors(&self, query: &Pose2D, query_id: ViewId) -> usize {
        let mut count = 0;
        self.for_each_in_voxel(query, |id, _| {
            if id != query_id {
                count += 1;
            }
        });
        count
    }

    /// Ids of the stored views inside the voxel centered on `query`, sorted.
    pub fn neighbors(&self, query: &Pose2D) -> Vec<ViewId> {
        let mut out = Vec::new();
        self.for_each_in_voxel(query, |id, _| out.push(id));
        out.sort_unstable();
        out
    }
}

/// Free-function form of [`ViewGridIndex::count_neighbors`]; `voxel` must be
/// the voxel the index was built with.
pub fn count_neighbors(query: &Pose2D, query_id: ViewId, index: &ViewGridIndex, voxel: VoxelSize) -> usize {
    assert_eq!(index.voxel(), voxel, "index was built for a different voxel size");
    index.count_neighbors(query, query_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn unit() -> VoxelSize {
        VoxelSize::new(1.0, 1.0, 1.0).unwrap()
    }

    fn brute(query: &Pose2D, qid: ViewId, all: &[(ViewId, Pose2D)], voxel: VoxelSize) -> usize {
        all.iter()
            .filter(|(id, p)| {
                *id != qid
                    && (p.x - query.x).abs() <= voxel.sx() / 2.0
                    && (p.y - query.y).abs() <= voxel.sy() / 2.0
                    && {
                        let d = (p.theta - query.theta).rem_euclid(TAU);
                        d.min(TAU - d) <= voxel.stheta() / 2.0
                    }
            })
            .count()
    }

    #[test]
    fn box_membership_examples() {
        let q = Pose2D::new(0.0, 0.0, 0.0);
        let mut index = ViewGridIndex::new(unit());
        index.insert(ViewId(0), q);
        index.insert(ViewId(1), Pose2D::new(0.4, 0.0, 0.0));
        assert_eq!(count_neighbors(&q, ViewId(0), &index, unit()), 1);

        index.insert(ViewId(1), Pose2D::new(0.6, 0.0, 0.0));
        assert_eq!(index.count_neighbors(&q, ViewId(0)), 0);
    }

    #[test]
    fn heading_wraps_across_pi() {
        let q = Pose2D::new(0.0, 0.0, 3.1);
        let mut index = ViewGridIndex::new(unit());
        index.insert(ViewId(0), q);
        index.insert(ViewId(1), Pose2D::new(0.0, 0.0, -3.1));
        assert_eq!(index.count_neighbors(&q, ViewId(0)), 1);
    }

    #[test]
    fn query_itself_is_never_counted() {
        let q = Pose2D::new(2.0, 2.0, 1.0);
        let mut index = ViewGridIndex::new(unit());
        index.insert(ViewId(7), q);
        assert_eq!(index.count_neighbors(&q, ViewId(7)), 0);
        // a query id absent from the index still skips nothing else
        assert_eq!(index.count_neighbors(&q, ViewId(8)), 1);
    }

    #[test]
    fn full_circle_voxel_ignores_heading() {
        let voxel = VoxelSize::new(1.0, 1.0, TAU).unwrap();
        let mut index = ViewGridIndex::new(voxel);
        for (i, th) in [0.0, PI, -PI / 2.0, 2.0].iter().enumerate() {
            index.insert(ViewId(i as u64), Pose2D::new(0.1 * i as f64, 0.0, *th));
        }
        assert_eq!(index.count_neighbors(&Pose2D::new(0.0, 0.0, 0.0), ViewId(0)), 3);
    }

    #[test]
    fn invalid_voxels_rejected() {
        assert!(VoxelSize::new(0.0, 1.0, 1.0).is_err());
        assert!(VoxelSize::new(1.0, -1.0, 1.0).is_err());
        assert!(VoxelSize::new(1.0, 1.0, 7.0).is_err());
        assert!(VoxelSize::new(1.0, f64::INFINITY, 1.0).is_err());
    }

    fn arb_pose() -> impl Strategy<Value = Pose2D> {
        (-5.0f64..5.0, -5.0f64..5.0, -PI..PI).prop_map(|(x, y, t)| Pose2D::new(x, y, t))
    }

    fn arb_voxel() -> impl Strategy<Value = VoxelSize> {
        (0.2f64..4.0, 0.2f64..4.0, 0.05f64..=TAU).prop_map(|(a, b, c)| VoxelSize::new(a, b, c).unwrap())
    }

    proptest! {
        #[test]
        fn grid_matches_brute_force(poses in proptest::collection::vec(arb_pose(), 0..120), voxel in arb_voxel()) {
            let all: Vec<_> = poses.iter().enumerate().map(|(i, p)| (ViewId(i as u64), *p)).collect();
            let index = ViewGridIndex::with_views(voxel, all.iter().map(|(id, p)| (*id, p)));
            for (id, p) in &all {
                prop_assert_eq!(index.count_neighbors(p, *id), brute(p, *id, &all, voxel));
            }
        }

        #[test]
        fn neighbor_relation_is_symmetric(a in arb_pose(), b in arb_pose(), voxel in arb_voxel()) {
            prop_assert_eq!(voxel.contains(&a, &b), voxel.contains(&b, &a));
        }

        #[test]
        fn insert_then_remove_restores_counts(
            poses in proptest::collection::vec(arb_pose(), 1..60),
            extra in arb_pose(),
            voxel in arb_voxel(),
        ) {
            let all: Vec<_> = poses.iter().enumerate().map(|(i, p)| (ViewId(i as u64), *p)).collect();
            let mut index = ViewGridIndex::with_views(voxel, all.iter().map(|(id, p)| (*id, p)));
            let before: Vec<_> = all.iter().map(|(id, p)| index.count_neighbors(p, *id)).collect();
            index.insert(ViewId(10_000), extra);
            prop_assert!(index.remove(ViewId(10_000)));
            let after: Vec<_> = all.iter().map(|(id, p)| index.count_neighbors(p, *id)).collect();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn full_heading_extent_reduces_to_planar_box(poses in proptest::collection::vec(arb_pose(), 1..60), sx in 0.2f64..3.0, sy in 0.2f64..3.0) {
            let voxel = VoxelSize::new(sx, sy, TAU).unwrap();
            let all: Vec<_> = poses.iter().enumerate().map(|(i, p)| (ViewId(i as u64), *p)).collect();
            let index = ViewGridIndex::with_views(voxel, all.iter().map(|(id, p)| (*id, p)));
            for (id, q) in &all {
                let planar = all.iter().filter(|(o, p)| o != id && (p.x - q.x).abs() <= sx / 2.0 && (p.y - q.y).abs() <= sy / 2.0).count();
                prop_assert_eq!(index.count_neighbors(q, *id), planar);
            }
        }
    }
}
