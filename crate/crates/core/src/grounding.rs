//! Metric grounding of imagined scenes.
//!
//! An imagined scene lives in a local frame with arbitrary scale. It is brought
//! into the world in two steps: a global scale factor estimated as the median
//! ratio between sensed and rendered depth at the anchor view, then the rigid
//! transform that maps the (scaled) local anchor camera onto the world anchor
//! camera. Semantic labels are lifted from 2D label images onto Gaussian
//! centers and fused across views by majority vote.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{Intrinsics, Pose};
use crate::gsscene::{depth_is_valid, transform_scene, DepthImage, Frame, GaussianScene, LabelImage, SceneError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroundingError {
    #[error("no pixel has valid depth in both images")]
    NoValidPixels,
    #[error("image dimensions disagree: {0}")]
    DimensionMismatch(String),
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("expected a scene in the local imagined frame")]
    FrameMismatch,
}

impl From<SceneError> for GroundingError {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::NonPositiveScale(s) => GroundingError::NonPositiveScale(s),
            _ => GroundingError::FrameMismatch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundingConfig {
    /// Depth-consistency tolerance in meters.
    pub tau_d: f64,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        Self { tau_d: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleEstimate {
    pub s: f64,
    /// Pixels with valid depth in both images.
    pub n_valid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelAssignment {
    pub gaussian_index: usize,
    pub label: u32,
    pub view_index: usize,
}

/// Transform taking local-frame coordinates to world coordinates, given the
/// same camera's pose in both frames: `T_world * T_local^-1`.
pub fn coord_transform(t_world: &Pose, t_local: &Pose) -> Pose {
    t_world.compose(&t_local.invert())
}

/// Median over shared valid pixels of `d_gt / d_render`.
pub fn global_scale(d_gt: &DepthImage, d_render: &DepthImage) -> Result<ScaleEstimate, GroundingError> {
    if !d_gt.same_size(d_render) {
        return Err(GroundingError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            d_gt.width, d_gt.height, d_render.width, d_render.height
        )));
    }
    let mut ratios: Vec<f64> = d_gt
        .data
        .iter()
        .zip(&d_render.data)
        .filter(|(g, r)| depth_is_valid(**g) && depth_is_valid(**r))
        .map(|(g, r)| g / r)
        .collect();
    let n = ratios.len();
    if n == 0 {
        return Err(GroundingError::NoValidPixels);
    }
    ratios.sort_unstable_by(f64::total_cmp);
    let s = if n % 2 == 1 { ratios[n / 2] } else { 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]) };
    Ok(ScaleEstimate { s, n_valid: n })
}

/// Similarity that brings local imagined coordinates into the world frame:
/// scale by `s` first, then apply the rigid `transform`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub scale: f64,
    pub transform: Pose,
}

impl Alignment {
    pub fn new(local_anchor: &Pose, world_anchor: &Pose, s: f64) -> Result<Self, GroundingError> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(GroundingError::NonPositiveScale(s));
        }
        let scaled_anchor = Pose::new(local_anchor.rotation, local_anchor.translation * s);
        Ok(Self { scale: s, transform: coord_transform(world_anchor, &scaled_anchor) })
    }

    /// World pose of a camera given in the local frame.
    pub fn pose(&self, local: &Pose) -> Pose {
        self.transform.compose(&Pose::new(local.rotation, local.translation * self.scale))
    }
}

pub fn align_imagined(
    scene: &GaussianScene,
    local_anchor: &Pose,
    world_anchor: &Pose,
    s: f64,
) -> Result<GaussianScene, GroundingError> {
    let alignment = Alignment::new(local_anchor, world_anchor, s)?;
    if scene.frame != Frame::LocalImagined {
        return Err(GroundingError::FrameMismatch);
    }
    let scaled = transform_scene(scene, &Pose::identity(), s)?;
    let mut out = transform_scene(&scaled, &alignment.transform, 1.0)?;
    out.frame = Frame::World;
    out.metric = true;
    Ok(out)
}

/// Lifts labels from `sem` onto Gaussians seen by camera `cam`.
///
/// A Gaussian receives the label under its (nearest-pixel) projected center
/// when: it lies in front of the camera and inside the image, the label is
/// non-zero, both depths are valid there, `|d_render - d_gt| < tau_d`, and the
/// Gaussian itself is the rendered surface at that pixel
/// (`|z - d_render| < tau_d`).
#[allow(clippy::too_many_arguments)]
pub fn transfer_labels(
    scene: &GaussianScene,
    cam: &Pose,
    k: &Intrinsics,
    sem: &LabelImage,
    d_gt: &DepthImage,
    d_render: &DepthImage,
    cfg: &GroundingConfig,
    view_index: usize,
) -> Result<Vec<LabelAssignment>, GroundingError> {
    for (name, w, h) in [
        ("semantic", sem.width, sem.height),
        ("sensed depth", d_gt.width, d_gt.height),
        ("rendered depth", d_render.width, d_render.height),
    ] {
        if w != k.width || h != k.height {
            return Err(GroundingError::DimensionMismatch(format!(
                "{name} image is {w}x{h}, camera is {}x{}",
                k.width, k.height
            )));
        }
    }
    let world_to_cam = cam.invert();
    let mut out = Vec::new();
    for (i, g) in scene.gaussians.iter().enumerate() {
        let pc = world_to_cam.apply(&g.pos);
        if !(pc.z > 0.0) {
            continue;
        }
        let u = (k.fx * pc.x / pc.z + k.cx).round();
        let v = (k.fy * pc.y / pc.z + k.cy).round();
        if !(u >= 0.0 && v >= 0.0 && u < k.width as f64 && v < k.height as f64) {
            continue;
        }
        let (u, v) = (u as usize, v as usize);
        let label = sem.get(u, v);
        if label == 0 {
            continue;
        }
        let (dg, dr) = (d_gt.get(u, v), d_render.get(u, v));
        if !depth_is_valid(dg) || !depth_is_valid(dr) {
            continue;
        }
        if (dr - dg).abs() >= cfg.tau_d || (pc.z - dr).abs() >= cfg.tau_d {
            continue;
        }
        out.push(LabelAssignment { gaussian_index: i, label, view_index });
    }
    Ok(out)
}

/// Per-Gaussian majority label; ties go to the smallest label id.
pub fn vote_labels(assignments: &[LabelAssignment]) -> BTreeMap<usize, u32> {
    let mut tallies: BTreeMap<usize, BTreeMap<u32, usize>> = BTreeMap::new();
    for a in assignments.iter().filter(|a| a.label > 0) {
        *tallies.entry(a.gaussian_index).or_default().entry(a.label).or_default() += 1;
    }
    tallies
        .into_iter()
        .map(|(idx, counts)| {
            // BTreeMap iterates labels ascending; keep the first maximum.
            let mut best = (0u32, 0usize);
            for (label, count) in counts {
                if count > best.1 {
                    best = (label, count);
                }
            }
            (idx, best.0)
        })
        .collect()
}

/// Writes voted labels into a scene.
pub fn apply_votes(scene: &mut GaussianScene, votes: &BTreeMap<usize, u32>) {
    for (&i, &label) in votes {
        if let Some(g) = scene.gaussians.get_mut(i) {
            g.label = label;
        }
    }
}
