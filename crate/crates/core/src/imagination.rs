//! World-model interface and the ground-truth oracle backend.
//!
//! A world model receives the current observation and a camera trajectory
//! anchored at the observing camera, and returns a Gaussian scene expressed in
//! a local frame of unknown scale, together with depth and color renders along
//! the trajectory. The oracle produces exactly that from a hidden world scene:
//! it keeps what the trajectory cameras can see, perturbs it, strips labels and
//! shrinks everything by a random factor.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Intrinsics, Pose};
use crate::gsscene::{render, DepthImage, Frame, GaussianScene, RgbImage};
use crate::trajectory::{CameraTrajectory, TrajectoryKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImaginationError {
    #[error("imagination failed: {0}")]
    ImaginationFailed(String),
    #[error("no hidden Gaussian is visible along the {0} trajectory")]
    EmptyVisibleSet(TrajectoryKind),
    #[error("trajectory does not start at the observation pose")]
    AnchorMismatch,
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Egocentric RGB-D observation with the camera pose in the world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub rgb: RgbImage,
    pub depth: DepthImage,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImaginedScene {
    pub kind: TrajectoryKind,
    /// Non-metric scene in the local frame.
    pub scene: GaussianScene,
    /// Trajectory cameras in the local frame; camera 0 is the local anchor.
    pub local_poses: Vec<Pose>,
    pub rendered_depths: Vec<DepthImage>,
    pub rendered_rgbs: Vec<RgbImage>,
}

impl ImaginedScene {
    pub fn local_anchor(&self) -> &Pose {
        &self.local_poses[0]
    }
}

/// Trajectory-conditioned scene generator.
pub trait WorldModel: Sync {
    fn imagine(&self, obs: &Observation, traj: &CameraTrajectory) -> Result<ImaginedScene, ImaginationError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub scale_min: f64,
    pub scale_max: f64,
    /// Fraction of visible Gaussians withheld.
    pub dropout: f64,
    /// Standard deviation of per-axis position noise in meters.
    pub position_noise_sigma: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { scale_min: 0.5, scale_max: 2.0, dropout: 0.05, position_noise_sigma: 0.01, seed: 0 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), ImaginationError> {
        if !(self.scale_min > 0.0 && self.scale_min <= self.scale_max && self.scale_max.is_finite()) {
            return Err(ImaginationError::InvalidConfig("scale range must satisfy 0 < min <= max"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ImaginationError::InvalidConfig("dropout must lie in [0, 1)"));
        }
        if !(self.position_noise_sigma >= 0.0 && self.position_noise_sigma.is_finite()) {
            return Err(ImaginationError::InvalidConfig("noise sigma must be non-negative"));
        }
        Ok(())
    }
}

/// Indices of Gaussians that own at least one pixel from at least one pose.
pub fn visible_set(hidden: &GaussianScene, poses: &[Pose], k: &Intrinsics) -> BTreeSet<usize> {
    let per_pose: Vec<BTreeSet<usize>> = poses
        .par_iter()
        .map(|pose| render(hidden, pose, k).owner.data.iter().flatten().map(|&i| i as usize).collect())
        .collect();
    per_pose.into_iter().flatten().collect()
}

fn kind_salt(kind: TrajectoryKind) -> u64 {
    match kind {
        TrajectoryKind::L => 0x4c,
        TrajectoryKind::U => 0x55,
        TrajectoryKind::R => 0x52,
    }
}

/// Ground-truth imagination of `hidden` along `traj`.
pub fn oracle_imagine(
    hidden: &GaussianScene,
    obs: &Observation,
    traj: &CameraTrajectory,
    k: &Intrinsics,
    cfg: &OracleConfig,
) -> Result<ImaginedScene, ImaginationError> {
    cfg.validate()?;
    let anchor = *traj.anchor();
    let mismatch = (anchor.rotation - obs.pose.rotation).abs().max().max((anchor.translation - obs.pose.translation).abs().max());
    if !(mismatch <= 1e-6) {
        return Err(ImaginationError::AnchorMismatch);
    }

    let visible = visible_set(hidden, &traj.poses, k);
    if visible.is_empty() {
        return Err(ImaginationError::EmptyVisibleSet(traj.kind));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ kind_salt(traj.kind).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let noise = (cfg.position_noise_sigma > 0.0).then(|| Normal::new(0.0, cfg.position_noise_sigma).expect("sigma checked"));
    let mut survivors = Vec::with_capacity(visible.len());
    for &i in &visible {
        let keep = cfg.dropout == 0.0 || rng.gen::<f64>() >= cfg.dropout;
        if !keep {
            continue;
        }
        let mut g = hidden.gaussians[i];
        if let Some(n) = &noise {
            for c in 0..3 {
                g.pos[c] += n.sample(&mut rng);
            }
        }
        survivors.push(g);
    }
    let s_true = if cfg.scale_min == cfg.scale_max { cfg.scale_min } else { rng.gen_range(cfg.scale_min..=cfg.scale_max) };
    let inv = 1.0 / s_true;

    let to_local = anchor.invert();
    let gaussians = survivors
        .into_iter()
        .map(|mut g| {
            g.pos = to_local.apply(&g.pos) * inv;
            g.rad *= inv;
            g.label = 0;
            g
        })
        .collect();
    let scene = GaussianScene::new(gaussians, Frame::LocalImagined, false);
    let local_poses: Vec<Pose> = traj
        .poses
        .iter()
        .map(|p| {
            let l = to_local.compose(p);
            Pose::new(l.rotation, l.translation * inv)
        })
        .collect();
    let renders: Vec<_> = local_poses.par_iter().map(|p| render(&scene, p, k)).collect();
    let (rendered_depths, rendered_rgbs) = renders.into_iter().map(|r| (r.depth, r.rgb)).unzip();
    Ok(ImaginedScene { kind: traj.kind, scene, local_poses, rendered_depths, rendered_rgbs })
}

/// World model backed by a known hidden scene.
#[derive(Debug, Clone, Copy)]
pub struct OracleModel<'a> {
    pub hidden: &'a GaussianScene,
    pub k: Intrinsics,
    pub cfg: OracleConfig,
}

impl WorldModel for OracleModel<'_> {
    fn imagine(&self, obs: &Observation, traj: &CameraTrajectory) -> Result<ImaginedScene, ImaginationError> {
        oracle_imagine(self.hidden, obs, traj, &self.k, &self.cfg)
    }
}

/// Imagines each trajectory (concurrently) and returns results in input
/// order; failed entries are `None`.
pub fn imagine_tri<M: WorldModel + ?Sized>(
    obs: &Observation,
    trajectories: &[CameraTrajectory],
    model: &M,
) -> Vec<Option<ImaginedScene>> {
    trajectories.par_iter().map(|t| model.imagine(obs, t).ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{intrinsics_from_hfov, Vec3};
    use crate::grounding::{align_imagined, global_scale};
    use crate::gsscene::Gaussian9;
    use crate::trajectory::{generate_trajectory, sample_tri, TrajectoryParams};

    fn k() -> Intrinsics {
        intrinsics_from_hfov(64, 64, 90.0).unwrap()
    }

    fn g(x: f64, y: f64, z: f64, label: u32) -> Gaussian9 {
        Gaussian9::new(Vec3::new(x, y, z), [0.3, 0.4, 0.5], 0.08, 1.0, label)
    }

    /// A wall at x = 2 in front of a target at x = 3, camera at the origin
    /// looking along +x.
    fn walled_scene() -> GaussianScene {
        let mut gs = Vec::new();
        for i in -20..=20 {
            for j in -20..=20 {
                gs.push(g(2.0, i as f64 * 0.1, j as f64 * 0.1, 2));
            }
        }
        gs.push(g(3.0, 0.0, 0.0, 4));
        GaussianScene::world(gs)
    }

    fn observe(scene: &GaussianScene, pose: Pose) -> Observation {
        let r = render(scene, &pose, &k());
        Observation { rgb: r.rgb, depth: r.depth, pose }
    }

    fn params(n: usize, d_v: f64) -> TrajectoryParams {
        TrajectoryParams { k: k(), n, d_v, d_c: 2.0 }
    }

    fn exact_cfg(scale: f64) -> OracleConfig {
        OracleConfig { scale_min: scale, scale_max: scale, dropout: 0.0, position_noise_sigma: 0.0, seed: 1 }
    }

    #[test]
    fn wall_hides_everything_behind_it() {
        let scene = walled_scene();
        let anchor = Pose::level_camera(Vec3::zeros(), 0.0);
        let traj = generate_trajectory(TrajectoryKind::L, &params(4, 0.0), &anchor).unwrap();
        let vis = visible_set(&scene, &traj.poses, &k());
        assert!(vis.iter().all(|&i| scene.gaussians[i].label == 2));
        assert!(!vis.contains(&(scene.len() - 1)));
    }

    #[test]
    fn output_shape_and_labels_stripped() {
        let scene = walled_scene();
        let anchor = Pose::level_camera(Vec3::zeros(), 0.0);
        let obs = observe(&scene, anchor);
        let traj = generate_trajectory(TrajectoryKind::U, &params(5, 1.0), &anchor).unwrap();
        let im = oracle_imagine(&scene, &obs, &traj, &k(), &OracleConfig::default()).unwrap();
        assert_eq!(im.rendered_depths.len(), 5);
        assert_eq!(im.local_poses.len(), 5);
        assert!(!im.scene.metric);
        assert_eq!(im.scene.frame, Frame::LocalImagined);
        assert!(im.scene.gaussians.iter().all(|g| g.label == 0));
        assert_eq!(im.local_poses[0], Pose::identity());
    }

    #[test]
    fn fixed_distortion_halves_depth() {
        let scene = walled_scene();
        let anchor = Pose::level_camera(Vec3::new(0.0, 0.0, 0.0), 0.0);
        let obs = observe(&scene, anchor);
        let traj = generate_trajectory(TrajectoryKind::L, &params(3, 0.5), &anchor).unwrap();
        let im = oracle_imagine(&scene, &obs, &traj, &k(), &exact_cfg(2.0)).unwrap();
        let d = &im.rendered_depths[0];
        let mut checked = 0;
        for (a, b) in obs.depth.data.iter().zip(&d.data) {
            if *a > 0.0 {
                assert!((b - a / 2.0).abs() < 1e-12);
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn noise_free_round_trip_through_alignment() {
        let scene = walled_scene();
        let anchor = Pose::level_camera(Vec3::new(0.2, -0.1, 0.1), 0.1);
        let obs = observe(&scene, anchor);
        let traj = generate_trajectory(TrajectoryKind::R, &params(6, 1.5), &anchor).unwrap();
        let vis = visible_set(&scene, &traj.poses, &k());
        let im = oracle_imagine(&scene, &obs, &traj, &k(), &exact_cfg(0.73)).unwrap();
        let s = global_scale(&obs.depth, &im.rendered_depths[0]).unwrap().s;
        let aligned = align_imagined(&im.scene, im.local_anchor(), &obs.pose, s).unwrap();
        assert_eq!(aligned.len(), vis.len());
        for (g, &i) in aligned.gaussians.iter().zip(&vis) {
            assert!((g.pos - scene.gaussians[i].pos).norm() < 1e-6);
        }
    }

    #[test]
    fn dropout_is_reproducible() {
        let mut gs = Vec::new();
        for i in 0..40 {
            for j in 0..25 {
                gs.push(g(4.0, -2.0 + i as f64 * 0.1, -1.25 + j as f64 * 0.1, 1));
            }
        }
        let scene = GaussianScene::world(gs);
        let anchor = Pose::level_camera(Vec3::zeros(), 0.0);
        let k = intrinsics_from_hfov(200, 200, 90.0).unwrap();
        let r = render(&scene, &anchor, &k);
        let obs = Observation { rgb: r.rgb, depth: r.depth, pose: anchor };
        let traj = generate_trajectory(TrajectoryKind::L, &params(1, 0.0), &anchor).unwrap();
        let cfg = OracleConfig { dropout: 0.5, ..exact_cfg(1.0) };
        let a = oracle_imagine(&scene, &obs, &traj, &k, &cfg).unwrap();
        let b = oracle_imagine(&scene, &obs, &traj, &k, &cfg).unwrap();
        assert_eq!(a, b);
        let n_vis = visible_set(&scene, &traj.poses, &k).len();
        assert!(n_vis > 900, "{n_vis}");
        assert!(a.scene.len() > n_vis / 3 && a.scene.len() < 2 * n_vis / 3);
    }

    #[test]
    fn rejects_foreign_anchor_and_empty_view() {
        let scene = walled_scene();
        let anchor = Pose::level_camera(Vec3::zeros(), 0.0);
        let obs = observe(&scene, anchor);
        let other = Pose::level_camera(Vec3::new(0.0, 0.0, 0.0), 2.5);
        let traj = generate_trajectory(TrajectoryKind::L, &params(2, 0.1), &other).unwrap();
        assert_eq!(oracle_imagine(&scene, &obs, &traj, &k(), &exact_cfg(1.0)), Err(ImaginationError::AnchorMismatch));
        let obs = observe(&scene, other);
        assert_eq!(
            oracle_imagine(&scene, &obs, &traj, &k(), &exact_cfg(1.0)),
            Err(ImaginationError::EmptyVisibleSet(TrajectoryKind::L))
        );
    }

    struct FailsOn(TrajectoryKind);

    impl WorldModel for FailsOn {
        fn imagine(&self, obs: &Observation, traj: &CameraTrajectory) -> Result<ImaginedScene, ImaginationError> {
            if traj.kind == self.0 {
                return Err(ImaginationError::ImaginationFailed("scripted".into()));
            }
            Ok(ImaginedScene {
                kind: traj.kind,
                scene: GaussianScene::new(vec![], Frame::LocalImagined, false),
                local_poses: vec![obs.pose; traj.poses.len()],
                rendered_depths: vec![obs.depth.clone(); traj.poses.len()],
                rendered_rgbs: vec![obs.rgb.clone(); traj.poses.len()],
            })
        }
    }

    #[test]
    fn tri_keeps_order_and_skips_failures() {
        let scene = walled_scene();
        let anchor = Pose::level_camera(Vec3::zeros(), 0.0);
        let obs = observe(&scene, anchor);
        let tri = sample_tri(&params(4, 1.0), &anchor).unwrap();
        let model = OracleModel { hidden: &scene, k: k(), cfg: exact_cfg(1.0) };
        let out = imagine_tri(&obs, &tri, &model);
        let kinds: Vec<_> = out.iter().map(|o| o.as_ref().unwrap().kind).collect();
        assert_eq!(kinds, TrajectoryKind::ALL.to_vec());
        let out = imagine_tri(&obs, &tri, &FailsOn(TrajectoryKind::U));
        let kinds: Vec<_> = out.iter().flatten().map(|o| o.kind).collect();
        assert_eq!(kinds, vec![TrajectoryKind::L, TrajectoryKind::R]);

        // union of visible sets covers each individual one
        let sets: Vec<_> = tri.iter().map(|t| visible_set(&scene, &t.poses, &k())).collect();
        let union: BTreeSet<usize> = sets.iter().flatten().copied().collect();
        assert!(sets.iter().all(|s| s.is_subset(&union)));
    }
}
