//! Planar poses and rigid transforms.

use std::f64::consts::{PI, TAU};

/// Wraps an angle into the half-open interval (−π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    if !theta.is_finite() {
        return theta;
    }
    let mut r = (theta + PI).rem_euclid(TAU);
    // rem_euclid may round up to exactly TAU
    if r >= TAU {
        r -= TAU;
    }
    let wrapped = r - PI;
    if wrapped <= -PI {
        PI
    } else {
        wrapped
    }
}

/// Smallest unsigned difference between two headings, in [0, π].
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b).abs();
    d.min(TAU - d)
}

/// Position and heading of a view (or of the robot) in a component frame.
///
/// `theta` is kept in (−π, π]; construct through [`Pose2D::new`] to get the
/// normalization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Euclidean distance between the positions, ignoring heading.
    pub fn distance_to(&self, other: &Pose2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Rigid 2D transform: rotate by `rotation`, then translate by `(dx, dy)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform2D {
    pub dx: f64,
    pub dy: f64,
    pub rotation: f64,
}

impl RigidTransform2D {
    pub fn identity() -> Self {
        Self {
            dx: 0.0,
            dy: 0.0,
            rotation: 0.0,
        }
    }

    pub fn new(dx: f64, dy: f64, rotation: f64) -> Self {
        Self { dx, dy, rotation }
    }

    pub fn apply(&self, pose: &Pose2D) -> Pose2D {
        let (s, c) = self.rotation.sin_cos();
        Pose2D::new(
            c * pose.x - s * pose.y + self.dx,
            s * pose.x + c * pose.y + self.dy,
            pose.theta + self.rotation,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_keeps_pi_and_maps_minus_pi_to_pi() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert_eq!(normalize_angle(0.0), 0.0);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-0.5 - TAU) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn angular_distance_examples() {
        assert_eq!(angular_distance(0.0, 0.0), 0.0);
        // 3.1 − (−3.1) = 6.2 wraps to 6.2 − 2π
        let expected = TAU - 6.2;
        assert!((angular_distance(3.1, -3.1) - expected).abs() < 1e-12);
        assert!((angular_distance(3.1, -3.1) - 0.08319).abs() < 1e-5);
        assert!((angular_distance(PI / 2.0, -PI / 2.0) - PI).abs() < 1e-12);
    }

    #[test]
    fn transform_translates_and_rotates() {
        let t = RigidTransform2D::new(2.0, 0.0, 0.0);
        let p = t.apply(&Pose2D::new(1.0, 0.0, PI / 2.0));
        assert_eq!((p.x, p.y), (3.0, 0.0));
        assert!((p.theta - PI / 2.0).abs() < 1e-15);

        let quarter = RigidTransform2D::new(0.0, 0.0, PI / 2.0);
        let q = quarter.apply(&Pose2D::new(1.0, 0.0, PI));
        assert!(q.x.abs() < 1e-12 && (q.y - 1.0).abs() < 1e-12);
        assert!((q.theta + PI / 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn normalized_angle_in_half_open_interval(theta in -100.0f64..100.0) {
            let n = normalize_angle(theta);
            prop_assert!(n > -PI && n <= PI);
            // same direction
            prop_assert!((n.sin() - theta.sin()).abs() < 1e-9);
            prop_assert!((n.cos() - theta.cos()).abs() < 1e-9);
        }

        #[test]
        fn angular_distance_is_symmetric_and_bounded(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let d = angular_distance(a, b);
            prop_assert!((0.0..=PI).contains(&d));
            prop_assert!((d - angular_distance(b, a)).abs() < 1e-12);
        }
    }
}
