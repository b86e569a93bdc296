//! Synthetic rooms, a simulated robot and the per-step navigation loop.

mod episode;
pub mod grid;
mod metrics;
mod scenes;
mod trace;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{intrinsics_from_hfov, Intrinsics, Pose, Vec3};
use crate::gsscene::{depth_is_valid, DepthImage, Gaussian9, GaussianScene, LabelImage, RgbImage};
use crate::imagination::OracleConfig;
use crate::valuemap::ValueWeights;

pub use episode::{
    decision_step, landmark_stub, run_episode, sense, EpisodeResult, LandmarkPair, ModelProvider, NavigationState,
    OracleProvider, Sensed, StepOutcome,
};
pub use metrics::{metrics, spl_term, MetricRow, Metrics};
pub use scenes::{generate_scene_suite, GenParams};
pub use trace::{parse_snapshot, parse_trace, snapshot_to_string, trace_to_string, Snapshot, TraceRecord, TRACE_HEADER};

pub mod labels {
    pub const UNLABELED: u32 = 0;
    pub const FLOOR: u32 = 1;
    pub const WALL: u32 = 2;
    pub const PARTITION: u32 = 3;
    pub const TARGET: u32 = 4;
    pub const OBSTACLE: u32 = 5;
}

/// Exact render color of each semantic class.
pub const PALETTE: [(u32, [f64; 3]); 5] = [
    (labels::FLOOR, [0.6, 0.6, 0.6]),
    (labels::WALL, [0.85, 0.8, 0.7]),
    (labels::PARTITION, [0.3, 0.4, 0.8]),
    (labels::TARGET, [0.9, 0.1, 0.1]),
    (labels::OBSTACLE, [0.2, 0.7, 0.2]),
];

pub fn palette_color(label: u32) -> [f64; 3] {
    PALETTE.iter().find(|(l, _)| *l == label).map_or([0.5; 3], |(_, c)| *c)
}

/// Color-keyed segmenter standing in for an open-vocabulary model.
pub fn segment(rgb: &RgbImage, depth: &DepthImage) -> LabelImage {
    let mut out = LabelImage::filled(rgb.width, rgb.height, labels::UNLABELED);
    for (i, c) in rgb.data.iter().enumerate() {
        if !depth_is_valid(depth.data[i]) {
            continue;
        }
        if let Some((l, _)) = PALETTE.iter().find(|(_, p)| p == c) {
            out.data[i] = *l;
        }
    }
    out
}

/// Non-floor Gaussians below this height block the robot.
pub const OBSTACLE_HEIGHT: f64 = 1.0;

pub fn is_obstacle(g: &Gaussian9) -> bool {
    g.label != labels::UNLABELED && g.label != labels::FLOOR && g.pos.z < OBSTACLE_HEIGHT
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("could not generate a {family} episode for seed {seed} in 100 attempts")]
    GenerationFailed { family: Scenario, seed: u64 },
    #[error("no path to the selected waypoint")]
    PlanningFailed,
    #[error("no candidate waypoint is reachable")]
    UnreachableEverything,
    #[error("metrics need at least one episode")]
    EmptyResults,
    #[error("invalid episode: {0}")]
    InvalidSpec(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    StaticOccluded,
    DynamicTarget,
    SuddenObstacle,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::StaticOccluded, Scenario::DynamicTarget, Scenario::SuddenObstacle];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::StaticOccluded => "static",
            Scenario::DynamicTarget => "dynamic",
            Scenario::SuddenObstacle => "sudden",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSpec {
    /// World-frame, metric, fully labeled.
    pub hidden_scene: GaussianScene,
    pub start_pose: Pose,
    pub target_label: u32,
    pub scenario: Scenario,
    /// Meters per step; zero unless dynamic.
    pub target_velocity: Vec3,
    /// Step after which `sudden_obstacle` joins the scene.
    pub obstacle_insert_step: Option<usize>,
    pub sudden_obstacle: Vec<Gaussian9>,
    pub max_steps: usize,
    pub success_dist: f64,
    pub seed: u64,
}

impl EpisodeSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.success_dist > 0.0) {
            return Err(SimError::InvalidSpec("success_dist must be positive".into()));
        }
        if !self.hidden_scene.gaussians.iter().any(|g| g.label == self.target_label) {
            return Err(SimError::InvalidSpec(format!("target label {} absent from scene", self.target_label)));
        }
        if !self.start_pose.is_valid(1e-6) {
            return Err(SimError::InvalidSpec("start pose is not a rigid transform".into()));
        }
        Ok(())
    }
}

/// Every tunable of the simulated pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub weights: ValueWeights,
    pub tau_d: f64,
    pub n_cameras: usize,
    pub d_c: f64,
    pub d_v: f64,
    pub eps_merge: f64,
    pub eps_match: f64,
    pub camera: Intrinsics,
    pub camera_height: f64,
    /// Pixel stride when lifting depth into the observed map.
    pub pixel_stride: usize,
    pub grid_cell: f64,
    pub robot_radius: f64,
    pub step_len: f64,
    pub k_move: usize,
    pub max_steps: usize,
    pub success_dist: f64,
    /// False runs without a world model (imagination disabled).
    pub imagination: bool,
    pub oracle: OracleConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            weights: ValueWeights::default(),
            tau_d: 0.1,
            n_cameras: 24,
            d_c: 2.0,
            d_v: 2.0 * std::f64::consts::FRAC_PI_2,
            eps_merge: 0.1,
            eps_match: 0.1,
            camera: intrinsics_from_hfov(96, 96, 90.0).expect("valid default camera"),
            camera_height: 0.45,
            pixel_stride: 2,
            grid_cell: 0.1,
            robot_radius: 0.3,
            step_len: 0.25,
            k_move: 5,
            max_steps: 500,
            success_dist: 0.5,
            imagination: true,
            oracle: OracleConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.weights.validate().map_err(|e| e.to_string())?;
        self.oracle.validate().map_err(|e| e.to_string())?;
        let positive = [
            ("tau_d", self.tau_d),
            ("d_c", self.d_c),
            ("eps_merge", self.eps_merge),
            ("eps_match", self.eps_match),
            ("camera.height", self.camera_height),
            ("grid_cell", self.grid_cell),
            ("robot_radius", self.robot_radius),
            ("step_len", self.step_len),
            ("success_dist", self.success_dist),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.d_v >= 0.0 && self.d_v.is_finite()) {
            return Err(format!("d_v must be non-negative, got {}", self.d_v));
        }
        if self.n_cameras == 0 || self.k_move == 0 || self.pixel_stride == 0 {
            return Err("n_cameras, k_move and pixel_stride must be at least 1".into());
        }
        Ok(())
    }

    /// Whether the imagination branch runs at all; with `beta = 1` its output
    /// would carry zero weight.
    pub fn imagination_active(&self) -> bool {
        self.imagination && self.weights.beta < 1.0
    }
}

/// Camera pose of a robot standing at `xy` with heading `yaw`.
pub fn robot_camera(xy: &Vec3, yaw: f64, height: f64) -> Pose {
    Pose::level_camera(Vec3::new(xy.x, xy.y, height), yaw)
}

pub fn yaw_of(pose: &Pose) -> f64 {
    let f = pose.forward();
    f.y.atan2(f.x)
}
