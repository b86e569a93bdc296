//! Rigid-body poses, pinhole intrinsics and projection.
//!
//! Camera frame convention: +z forward, +x right, +y down. The world frame is
//! z-up. A [`Pose`] maps points from its local frame into the parent frame,
//! `x_parent = R * x_local + t`.

use nalgebra::{Matrix3, Point2, UnitQuaternion, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point has non-positive depth z = {0}")]
    NonPositiveDepth(f64),
    #[error("horizontal field of view {0} deg outside (0, 180)")]
    InvalidFov(f64),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
}

/// Rigid transform in SE(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), translation: Vec3::zeros() }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self { rotation: Mat3::identity(), translation: t }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64, translation: Vec3) -> Self {
        let rot = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        Self { rotation: *rot.to_rotation_matrix().matrix(), translation }
    }

    /// Level camera standing at `position` looking along yaw angle `yaw`
    /// (radians, counter-clockwise from world +x).
    pub fn level_camera(position: Vec3, yaw: f64) -> Self {
        let forward = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
        let right = Vec3::new(yaw.sin(), -yaw.cos(), 0.0);
        let down = Vec3::new(0.0, 0.0, -1.0);
        Self { rotation: Mat3::from_columns(&[right, down, forward]), translation: position }
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn invert(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose { rotation: rt, translation: -(rt * self.translation) }
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.rotation * x + self.translation
    }

    /// Camera optical axis (+z of the local frame) in the parent frame.
    pub fn forward(&self) -> Vec3 {
        self.rotation.column(2).into_owned()
    }

    /// Camera right axis (+x of the local frame).
    pub fn right(&self) -> Vec3 {
        self.rotation.column(0).into_owned()
    }

    pub fn left(&self) -> Vec3 {
        -self.right()
    }

    /// True when the rotation is orthonormal with determinant +1 within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let r = &self.rotation;
        if !r.iter().all(|v| v.is_finite()) || !self.translation.iter().all(|v| v.is_finite()) {
            return false;
        }
        let err = (r.transpose() * r - Mat3::identity()).abs().max();
        err <= tol && (r.determinant() - 1.0).abs() <= tol
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_matrix(&self.rotation)
    }

    pub fn from_quaternion(q: UnitQuaternion<f64>, translation: Vec3) -> Pose {
        Pose { rotation: *q.to_rotation_matrix().matrix(), translation }
    }
}

pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn invert(p: &Pose) -> Pose {
    p.invert()
}

pub fn apply(p: &Pose, x: &Vec3) -> Vec3 {
    p.apply(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics("focal lengths must be positive"));
        }
        if !(cx >= 0.0 && cx < width as f64 && cy >= 0.0 && cy < height as f64) {
            return Err(GeometryError::InvalidIntrinsics("principal point outside the image"));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }

    /// Horizontal field of view in degrees.
    pub fn hfov_deg(&self) -> f64 {
        (2.0 * (self.width as f64 / (2.0 * self.fx)).atan()).to_degrees()
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// Square-pixel intrinsics from image size and horizontal field of view in degrees.
pub fn intrinsics_from_hfov(width: usize, height: usize, hfov_deg: f64) -> Result<Intrinsics, GeometryError> {
    if !(hfov_deg > 0.0 && hfov_deg < 180.0) {
        return Err(GeometryError::InvalidFov(hfov_deg));
    }
    let f = (width as f64 / 2.0) / (hfov_deg.to_radians() / 2.0).tan();
    Intrinsics::new(f, f, width as f64 / 2.0, height as f64 / 2.0, width, height)
}

/// Pinhole projection of a camera-frame point to continuous pixel coordinates.
pub fn project(point_cam: &Vec3, k: &Intrinsics) -> Result<Point2<f64>, GeometryError> {
    let z = point_cam.z;
    if !(z > 0.0) {
        return Err(GeometryError::NonPositiveDepth(z));
    }
    Ok(Point2::new(k.fx * point_cam.x / z + k.cx, k.fy * point_cam.y / z + k.cy))
}

/// Inverse of [`project`] for a pixel and depth along the optical axis.
pub fn unproject(u: f64, v: f64, depth: f64, k: &Intrinsics) -> Vec3 {
    Vec3::new((u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use nalgebra::Matrix4;
    use rand::Rng;

    pub fn random_pose<R: Rng>(rng: &mut R) -> Pose {
        let axis = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let axis = if axis.norm() < 1e-3 { Vec3::z() } else { axis };
        let t = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        Pose::from_axis_angle(axis, rng.gen_range(-3.1..3.1), t)
    }

    /// 4×4 homogeneous matrix, written element by element.
    pub fn homogeneous(p: &Pose) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = p.rotation[(i, j)];
            }
            m[(i, 3)] = p.translation[i];
        }
        m[(3, 3)] = 1.0;
        m
    }

    pub fn matmul4(a: &Matrix4<f64>, b: &Matrix4<f64>) -> Matrix4<f64> {
        let mut c = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += a[(i, k)] * b[(k, j)];
                }
                c[(i, j)] = s;
            }
        }
        c
    }

    pub fn apply4(m: &Matrix4<f64>, x: &Vec3) -> Vec3 {
        let mut out = Vec3::zeros();
        for i in 0..3 {
            out[i] = m[(i, 0)] * x.x + m[(i, 1)] * x.y + m[(i, 2)] * x.z + m[(i, 3)];
        }
        out
    }

    pub fn pose_close(a: &Pose, b: &Pose, tol: f64) -> bool {
        (a.rotation - b.rotation).abs().max() <= tol && (a.translation - b.translation).abs().max() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k150() -> Intrinsics {
        intrinsics_from_hfov(300, 300, 90.0).unwrap()
    }

    #[test]
    fn principal_point_projection() {
        let p = project(&Vec3::new(0.0, 0.0, 2.0), &k150()).unwrap();
        assert!((p.x - 150.0).abs() < 1e-12 && (p.y - 150.0).abs() < 1e-12);
    }

    #[test]
    fn off_axis_projection() {
        // 150 * 1 / 2 + 150
        let p = project(&Vec3::new(1.0, 0.0, 2.0), &k150()).unwrap();
        assert!((p.x - 225.0).abs() < 1e-12 && (p.y - 150.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_depth() {
        assert!(matches!(project(&Vec3::zeros(), &k150()), Err(GeometryError::NonPositiveDepth(_))));
        assert!(project(&Vec3::new(0.0, 0.0, -1.0), &k150()).is_err());
    }

    #[test]
    fn hfov_intrinsics() {
        let k = k150();
        assert!((k.fx - 150.0).abs() < 1e-9);
        assert_eq!((k.cx, k.cy), (150.0, 150.0));
        // 320 / tan(34.7 deg)
        let k = intrinsics_from_hfov(640, 480, 69.4).unwrap();
        assert!((k.fx - 462.1387).abs() < 1e-4, "{}", k.fx);
        assert_eq!(k.fy, k.fx);
        assert!(matches!(intrinsics_from_hfov(300, 300, 180.0), Err(GeometryError::InvalidFov(_))));
        assert!(intrinsics_from_hfov(300, 300, 0.0).is_err());
    }

    #[test]
    fn identity_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = random_pose(&mut rng);
            assert!(p.is_valid(1e-9));
            assert!(pose_close(&p.compose(&p.invert()), &Pose::identity(), 1e-9));
            let x = Vec3::new(1.0, -2.0, 0.5);
            assert_eq!(Pose::identity().apply(&x), x);
        }
    }

    #[test]
    fn compose_matches_homogeneous_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            let x = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let via_pose = a.compose(&b).apply(&x);
            let via_nested = a.apply(&b.apply(&x));
            let via_matrix = apply4(&matmul4(&homogeneous(&a), &homogeneous(&b)), &x);
            assert!((via_pose - via_matrix).norm() < 1e-9);
            assert!((via_nested - via_matrix).norm() < 1e-9);
        }
    }

    #[test]
    fn level_camera_axes() {
        let p = Pose::level_camera(Vec3::new(1.0, 2.0, 0.5), 0.0);
        assert!(p.is_valid(1e-12));
        assert!((p.forward() - Vec3::x()).norm() < 1e-12);
        assert!((p.left() - Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn quaternion_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = random_pose(&mut rng);
            let q = Pose::from_quaternion(p.quaternion(), p.translation);
            assert!(pose_close(&p, &q, 1e-9));
        }
    }

    use rand::Rng;

    proptest! {
        #[test]
        fn double_inverse(seed in any::<u64>()) {
            let p = random_pose(&mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert!(pose_close(&p.invert().invert(), &p, 1e-9));
        }

        #[test]
        fn projection_is_homogeneous(x in -5.0..5.0f64, y in -5.0..5.0f64, z in 0.1..10.0f64, lambda in 0.01..100.0f64) {
            let k = k150();
            let a = project(&Vec3::new(x, y, z), &k).unwrap();
            let b = project(&(Vec3::new(x, y, z) * lambda), &k).unwrap();
            prop_assert!((a - b).norm() < 1e-9);
        }

        #[test]
        fn hfov_round_trip(w in 16usize..2000, h in 16usize..2000, hfov in 1.0..179.0f64) {
            let k = intrinsics_from_hfov(w, h, hfov).unwrap();
            prop_assert!((k.hfov_deg() - hfov).abs() < 1e-9);
        }
    }
}
