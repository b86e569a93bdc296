//! Left-bypass, over-the-top and right-bypass camera orbits around a point
//! ahead of the current camera.
//!
//! Every trajectory is a rigid rotation of the anchor camera about an axis
//! through the orbit center `c = anchor.t + d_c * forward(anchor)`. Camera `i`
//! is rotated by `θ_i = i * (d_v / d_c) / (n - 1)`, so the cameras keep looking
//! at `c`, stay exactly `d_c` away from it, and camera 0 is the anchor itself.

use std::fmt;

use nalgebra::{Rotation3, Unit};
use thiserror::Error;

use crate::geometry::{Intrinsics, Mat3, Pose, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("anchor pose has no well-defined forward axis (rotation not orthonormal)")]
    DegenerateAnchor,
    #[error("invalid trajectory parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrajectoryKind {
    /// Bypass on the anchor's left, horizontal plane.
    L,
    /// Rise over the top, vertical plane through forward and world up.
    U,
    /// Bypass on the anchor's right, horizontal plane.
    R,
}

impl TrajectoryKind {
    pub const ALL: [TrajectoryKind; 3] = [TrajectoryKind::L, TrajectoryKind::U, TrajectoryKind::R];
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TrajectoryKind::L => "L",
            TrajectoryKind::U => "U",
            TrajectoryKind::R => "R",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryParams {
    pub k: Intrinsics,
    /// Number of cameras, at least 1.
    pub n: usize,
    /// Total arc length in meters.
    pub d_v: f64,
    /// Orbit radius in meters.
    pub d_c: f64,
}

impl TrajectoryParams {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.n < 1 {
            return Err(TrajectoryError::InvalidParams("camera count must be at least 1"));
        }
        if !(self.d_v >= 0.0 && self.d_v.is_finite()) {
            return Err(TrajectoryError::InvalidParams("arc length must be non-negative"));
        }
        if !(self.d_c > 0.0 && self.d_c.is_finite()) {
            return Err(TrajectoryError::InvalidParams("orbit radius must be positive"));
        }
        Ok(())
    }

    /// Angle between consecutive cameras in radians.
    pub fn angular_step(&self) -> f64 {
        if self.n <= 1 {
            0.0
        } else {
            self.d_v / self.d_c / (self.n - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraTrajectory {
    pub kind: TrajectoryKind,
    pub poses: Vec<Pose>,
    pub orbit_center: Vec3,
}

impl CameraTrajectory {
    pub fn anchor(&self) -> &Pose {
        &self.poses[0]
    }
}

fn rotation_axis(kind: TrajectoryKind, anchor: &Pose) -> Vec3 {
    match kind {
        // Positive rotation about -z carries the camera towards the anchor's left.
        TrajectoryKind::L => -Vec3::z(),
        TrajectoryKind::R => Vec3::z(),
        TrajectoryKind::U => {
            let axis = Vec3::z().cross(&anchor.forward());
            if axis.norm() > 1e-9 {
                axis.normalize()
            } else {
                anchor.left()
            }
        }
    }
}

pub fn generate_trajectory(
    kind: TrajectoryKind,
    params: &TrajectoryParams,
    anchor: &Pose,
) -> Result<CameraTrajectory, TrajectoryError> {
    params.validate()?;
    if !anchor.is_valid(1e-6) {
        return Err(TrajectoryError::DegenerateAnchor);
    }
    let center = anchor.translation + anchor.forward() * params.d_c;
    let axis = Unit::new_normalize(rotation_axis(kind, anchor));
    let step = params.angular_step();
    let offset = anchor.translation - center;
    let poses = (0..params.n)
        .map(|i| {
            let theta = step * i as f64;
            if theta == 0.0 {
                return *anchor;
            }
            let rot: Mat3 = *Rotation3::from_axis_angle(&axis, theta).matrix();
            Pose::new(rot * anchor.rotation, center + rot * offset)
        })
        .collect();
    Ok(CameraTrajectory { kind, poses, orbit_center: center })
}

/// The three candidate trajectories in `[L, U, R]` order.
pub fn sample_tri(params: &TrajectoryParams, anchor: &Pose) -> Result<Vec<CameraTrajectory>, TrajectoryError> {
    TrajectoryKind::ALL.iter().map(|&k| generate_trajectory(k, params, anchor)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::intrinsics_from_hfov;
    use crate::geometry::testutil::random_pose;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn params(n: usize, d_v: f64, d_c: f64) -> TrajectoryParams {
        TrajectoryParams { k: intrinsics_from_hfov(64, 64, 90.0).unwrap(), n, d_v, d_c }
    }

    #[test]
    fn zero_sweep_repeats_anchor() {
        let anchor = Pose::level_camera(Vec3::new(1.0, 2.0, 0.5), 0.3);
        for n in [1, 2, 24] {
            let t = generate_trajectory(TrajectoryKind::U, &params(n, 0.0, 2.0), &anchor).unwrap();
            assert_eq!(t.poses.len(), n);
            assert!(t.poses.iter().all(|p| *p == anchor));
        }
    }

    #[test]
    fn quarter_turn_left() {
        let anchor = Pose::level_camera(Vec3::zeros(), 0.0);
        let t = generate_trajectory(TrajectoryKind::L, &params(2, PI / 2.0, 1.0), &anchor).unwrap();
        let c = t.orbit_center;
        assert!((c - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        // offset from c rotates from -x to +y (the anchor's left)
        let p = t.poses[1].translation;
        assert!((p - Vec3::new(1.0, 1.0, 0.0)).norm() < 1e-12, "{p:?}");
        assert!(((p - c).norm() - 1.0).abs() < 1e-12);
        let r = generate_trajectory(TrajectoryKind::R, &params(2, PI / 2.0, 1.0), &anchor).unwrap();
        assert!((r.poses[1].translation - Vec3::new(1.0, -1.0, 0.0)).norm() < 1e-12);
        let u = generate_trajectory(TrajectoryKind::U, &params(2, PI / 2.0, 1.0), &anchor).unwrap();
        assert!((u.poses[1].translation - Vec3::new(1.0, 0.0, 1.0)).norm() < 1e-12);
        // at the apex the camera looks straight down
        assert!((u.poses[1].forward() + Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn tri_order_and_length() {
        let anchor = Pose::level_camera(Vec3::zeros(), 1.0);
        let tri = sample_tri(&params(24, PI, 2.0), &anchor).unwrap();
        assert_eq!(tri.len(), 3);
        let kinds: Vec<_> = tri.iter().map(|t| t.kind).collect();
        assert_eq!(kinds, vec![TrajectoryKind::L, TrajectoryKind::U, TrajectoryKind::R]);
    }

    #[test]
    fn degenerate_inputs() {
        let mut bad = Pose::identity();
        bad.rotation[(0, 0)] = 2.0;
        assert_eq!(
            generate_trajectory(TrajectoryKind::L, &params(3, 1.0, 1.0), &bad),
            Err(TrajectoryError::DegenerateAnchor)
        );
        assert!(generate_trajectory(TrajectoryKind::L, &params(0, 1.0, 1.0), &Pose::identity()).is_err());
        assert!(generate_trajectory(TrajectoryKind::L, &params(3, 1.0, 0.0), &Pose::identity()).is_err());
        assert!(generate_trajectory(TrajectoryKind::L, &params(3, -1.0, 1.0), &Pose::identity()).is_err());
    }

    #[test]
    fn orbit_invariants_on_random_anchors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = params(24, 3.0, 2.0);
        for _ in 0..50 {
            let anchor = random_pose(&mut rng);
            for t in sample_tri(&p, &anchor).unwrap() {
                let c = t.orbit_center;
                assert_eq!(t.poses[0], anchor);
                let chord = (t.poses[1].translation - t.poses[0].translation).norm();
                for (i, pose) in t.poses.iter().enumerate() {
                    assert!(((pose.translation - c).norm() - p.d_c).abs() < 1e-9);
                    let to_c = (c - pose.translation).normalize();
                    assert!((pose.forward() - to_c).norm() < 1e-9);
                    if i + 1 < t.poses.len() {
                        let d = (t.poses[i + 1].translation - pose.translation).norm();
                        assert!((d - chord).abs() < 1e-9);
                    }
                }
                assert!(((p.n - 1) as f64 * p.angular_step() * p.d_c - p.d_v).abs() < 1e-12);
            }
        }
    }
}
