//! Nine-field Gaussian scenes: persistence, rigid/scale transforms, voxel
//! merging and an opaque z-buffer splat renderer.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{Intrinsics, Pose, Vec3};

pub const CSV_HEADER: &str = "x,y,z,r,g,b,rad,opa,label";

/// Gaussians below this opacity are not drawn by [`render`].
pub const OPACITY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: constraint violated: {reason}")]
    ConstraintViolation { line: usize, reason: String },
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("voxel edge must be positive, got {0}")]
    NonPositiveVoxel(f64),
    #[error("scene frame mismatch: {0}")]
    FrameMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One scene primitive: position, color, radius, opacity and semantic label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian9 {
    pub pos: Vec3,
    pub color: [f64; 3],
    pub rad: f64,
    pub opa: f64,
    pub label: u32,
}

impl Gaussian9 {
    pub fn new(pos: Vec3, color: [f64; 3], rad: f64, opa: f64, label: u32) -> Self {
        Self { pos, color, rad, opa, label }
    }

    /// Describes the first violated invariant, if any.
    pub fn violation(&self) -> Option<String> {
        if !self.pos.iter().all(|v| v.is_finite()) {
            return Some("position must be finite".into());
        }
        if !(self.rad > 0.0 && self.rad.is_finite()) {
            return Some(format!("rad must be positive, got {}", self.rad));
        }
        if !(0.0..=1.0).contains(&self.opa) {
            return Some(format!("opa must lie in [0,1], got {}", self.opa));
        }
        if let Some(c) = self.color.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Some(format!("color channel must lie in [0,1], got {c}"));
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    World,
    LocalImagined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianScene {
    pub gaussians: Vec<Gaussian9>,
    pub frame: Frame,
    pub metric: bool,
}

impl GaussianScene {
    pub fn new(gaussians: Vec<Gaussian9>, frame: Frame, metric: bool) -> Self {
        Self { gaussians, frame, metric }
    }

    pub fn world(gaussians: Vec<Gaussian9>) -> Self {
        Self::new(gaussians, Frame::World, true)
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn is_world_metric(&self) -> bool {
        self.frame == Frame::World && self.metric
    }
}

/// Row-major single-channel or multi-channel image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Copy> Image<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn get(&self, u: usize, v: usize) -> T {
        self.data[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, value: T) {
        self.data[v * self.width + u] = value;
    }

    pub fn same_size<U>(&self, other: &Image<U>) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Metric depth; values `<= 0` (or non-finite) are invalid.
pub type DepthImage = Image<f64>;
/// Semantic ids; 0 means no hit / no prediction.
pub type LabelImage = Image<u32>;
pub type RgbImage = Image<[f64; 3]>;

pub fn depth_is_valid(d: f64) -> bool {
    d.is_finite() && d > 0.0
}

// ---------------------------------------------------------------------------
// CSV persistence

/// Serializes with Rust's shortest round-trip float formatting.
pub fn to_csv_string(scene: &GaussianScene) -> String {
    let mut out = String::with_capacity(64 * (scene.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for g in &scene.gaussians {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            g.pos.x, g.pos.y, g.pos.z, g.color[0], g.color[1], g.color[2], g.rad, g.opa, g.label
        );
    }
    out
}

/// Parses the scene CSV format. The result is tagged as a metric world scene.
pub fn parse_csv(text: &str) -> Result<GaussianScene, SceneError> {
    let mut lines = text.split('\n').enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => {
            return Err(SceneError::MalformedRow { line: 1, reason: format!("expected header `{CSV_HEADER}`") })
        }
    }
    let mut gaussians = Vec::new();
    let mut trailing_empty = false;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if trailing_empty {
            return Err(SceneError::MalformedRow { line: lineno - 1, reason: "empty line".into() });
        }
        if line.is_empty() {
            trailing_empty = true;
            continue;
        }
        gaussians.push(parse_row(line, lineno)?);
    }
    Ok(GaussianScene::world(gaussians))
}

fn parse_row(line: &str, lineno: usize) -> Result<Gaussian9, SceneError> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != 9 {
        return Err(SceneError::MalformedRow { line: lineno, reason: format!("expected 9 columns, found {}", cols.len()) });
    }
    let mut vals = [0.0f64; 8];
    for (i, c) in cols[..8].iter().enumerate() {
        vals[i] = c
            .parse::<f64>()
            .map_err(|_| SceneError::MalformedRow { line: lineno, reason: format!("unparsable number `{c}`") })?;
    }
    let label = cols[8]
        .parse::<u32>()
        .map_err(|_| SceneError::MalformedRow { line: lineno, reason: format!("unparsable label `{}`", cols[8]) })?;
    let g = Gaussian9::new(
        Vec3::new(vals[0], vals[1], vals[2]),
        [vals[3], vals[4], vals[5]],
        vals[6],
        vals[7],
        label,
    );
    if let Some(reason) = g.violation() {
        return Err(SceneError::ConstraintViolation { line: lineno, reason });
    }
    Ok(g)
}

pub fn save_csv(scene: &GaussianScene, path: impl AsRef<Path>) -> Result<(), SceneError> {
    std::fs::write(path, to_csv_string(scene))?;
    Ok(())
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<GaussianScene, SceneError> {
    parse_csv(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Transforms and voxel dedup

/// `x' = R (s x) + t`, `rad' = s rad`.
pub fn transform_scene(scene: &GaussianScene, t: &Pose, s: f64) -> Result<GaussianScene, SceneError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(SceneError::NonPositiveScale(s));
    }
    let gaussians = scene
        .gaussians
        .iter()
        .map(|g| Gaussian9 { pos: t.rotation * (g.pos * s) + t.translation, rad: g.rad * s, ..*g })
        .collect();
    Ok(GaussianScene { gaussians, frame: scene.frame, metric: scene.metric })
}

fn voxel_key(p: &Vec3, edge: f64) -> (i64, i64, i64) {
    ((p.x / edge).floor() as i64, (p.y / edge).floor() as i64, (p.z / edge).floor() as i64)
}

fn keep_first_per_voxel<'a>(gaussians: impl Iterator<Item = &'a Gaussian9>, edge: f64) -> Vec<Gaussian9> {
    let mut seen = HashSet::new();
    gaussians.filter(|g| seen.insert(voxel_key(&g.pos, edge))).copied().collect()
}

/// Concatenates world scenes in order and keeps the first Gaussian per voxel.
pub fn merge_scenes(scenes: &[GaussianScene], eps_merge: f64) -> Result<GaussianScene, SceneError> {
    if !(eps_merge > 0.0) {
        return Err(SceneError::NonPositiveVoxel(eps_merge));
    }
    if let Some(i) = scenes.iter().position(|s| !s.is_world_metric()) {
        return Err(SceneError::FrameMismatch(format!("input {i} is not a metric world scene")));
    }
    let gaussians = keep_first_per_voxel(scenes.iter().flat_map(|s| s.gaussians.iter()), eps_merge);
    Ok(GaussianScene::world(gaussians))
}

pub fn downsample(scene: &GaussianScene, voxel: f64) -> Result<GaussianScene, SceneError> {
    if !(voxel > 0.0) {
        return Err(SceneError::NonPositiveVoxel(voxel));
    }
    Ok(GaussianScene {
        gaussians: keep_first_per_voxel(scene.gaussians.iter(), voxel),
        frame: scene.frame,
        metric: scene.metric,
    })
}

// ---------------------------------------------------------------------------
// Rendering

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub depth: DepthImage,
    pub labels: LabelImage,
    pub rgb: RgbImage,
    /// Index of the Gaussian owning each pixel, `None` where nothing was drawn.
    pub owner: Image<Option<u32>>,
}

/// Opaque disk splatting with a z-buffer.
///
/// Each Gaussian with `opa >= 0.5` and positive camera depth `z` covers every
/// integer pixel within `max(1, fx * rad / z)` pixels of its projected center.
/// A pixel takes the Gaussian's depth, label and color when `z` is strictly
/// nearer than what the pixel already holds.
pub fn render(scene: &GaussianScene, camera_pose: &Pose, k: &Intrinsics) -> RenderOutput {
    let (w, h) = (k.width, k.height);
    let mut depth = DepthImage::filled(w, h, 0.0);
    let mut labels = LabelImage::filled(w, h, 0);
    let mut rgb = RgbImage::filled(w, h, [0.0; 3]);
    let mut owner = Image::filled(w, h, None);
    let world_to_cam = camera_pose.invert();

    for (idx, g) in scene.gaussians.iter().enumerate() {
        if g.opa < OPACITY_THRESHOLD {
            continue;
        }
        let pc = world_to_cam.apply(&g.pos);
        let z = pc.z;
        if !(z > 0.0) {
            continue;
        }
        let pu = k.fx * pc.x / z + k.cx;
        let pv = k.fy * pc.y / z + k.cy;
        let rho = (k.fx * g.rad / z).max(1.0);
        let u0 = (pu - rho).ceil().max(0.0);
        let u1 = (pu + rho).floor().min(w as f64 - 1.0);
        let v0 = (pv - rho).ceil().max(0.0);
        let v1 = (pv + rho).floor().min(h as f64 - 1.0);
        if !(u0 <= u1 && v0 <= v1) {
            continue;
        }
        let rho2 = rho * rho;
        for v in v0 as usize..=v1 as usize {
            let dv = v as f64 - pv;
            let row = v * w;
            for u in u0 as usize..=u1 as usize {
                let du = u as f64 - pu;
                if du * du + dv * dv > rho2 {
                    continue;
                }
                let i = row + u;
                let cur = depth.data[i];
                if cur <= 0.0 || z < cur {
                    depth.data[i] = z;
                    labels.data[i] = g.label;
                    rgb.data[i] = g.color;
                    owner.data[i] = Some(idx as u32);
                }
            }
        }
    }
    RenderOutput { depth, labels, rgb, owner }
}
