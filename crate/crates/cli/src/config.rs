//! `key = value` configuration text.

use std::fmt::Write as _;

use fanav::geometry::intrinsics_from_hfov;
use fanav::imagination::OracleConfig;
use fanav::simworld::{Scenario, SimConfig};
use fanav::valuemap::ValueWeights;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{origin}: expected `key = value`, found `{text}`")]
    Syntax { origin: String, text: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { origin: String, key: String },
    #[error("{origin}: invalid value `{value}` for `{key}`: {reason}")]
    BadValue { origin: String, key: String, value: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorldModelKind {
    Oracle,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioSel {
    One(Scenario),
    All,
}

impl ScenarioSel {
    pub fn families(self) -> Vec<Scenario> {
        match self {
            ScenarioSel::One(s) => vec![s],
            ScenarioSel::All => Scenario::ALL.to_vec(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            ScenarioSel::One(s) => s.name(),
            ScenarioSel::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub alpha_sem: f64,
    pub alpha_exp: f64,
    pub beta: f64,
    pub lambda_sem: f64,
    pub r_vis: f64,
    pub sigma_s: f64,
    pub sigma_t: f64,
    pub tau_d: f64,
    pub n_cameras: usize,
    pub d_c: f64,
    /// `None` follows `d_c` (a quarter orbit).
    pub d_v: Option<f64>,
    pub eps_merge: f64,
    pub eps_match: f64,
    pub camera_width: usize,
    pub camera_height: usize,
    pub camera_hfov_deg: f64,
    pub camera_mount_height: f64,
    pub pixel_stride: usize,
    pub grid_cell: f64,
    pub robot_radius: f64,
    pub step_len: f64,
    pub k_move: usize,
    pub max_steps: usize,
    pub success_dist: f64,
    pub world_model: WorldModelKind,
    pub oracle_scale_min: f64,
    pub oracle_scale_max: f64,
    pub oracle_dropout: f64,
    pub oracle_noise: f64,
    pub seed: u64,
    pub episodes: usize,
    pub scenario: ScenarioSel,
}

impl Default for Config {
    fn default() -> Self {
        let w = ValueWeights::default();
        let s = SimConfig::default();
        let o = OracleConfig::default();
        Self {
            alpha_sem: w.alpha_sem,
            alpha_exp: w.alpha_exp,
            beta: w.beta,
            lambda_sem: w.lambda_sem,
            r_vis: w.r_vis,
            sigma_s: w.sigma_s,
            sigma_t: w.sigma_t,
            tau_d: s.tau_d,
            n_cameras: s.n_cameras,
            d_c: s.d_c,
            d_v: None,
            eps_merge: s.eps_merge,
            eps_match: s.eps_match,
            camera_width: s.camera.width,
            camera_height: s.camera.height,
            camera_hfov_deg: 90.0,
            camera_mount_height: s.camera_height,
            pixel_stride: s.pixel_stride,
            grid_cell: s.grid_cell,
            robot_radius: s.robot_radius,
            step_len: s.step_len,
            k_move: s.k_move,
            max_steps: s.max_steps,
            success_dist: s.success_dist,
            world_model: WorldModelKind::Oracle,
            oracle_scale_min: o.scale_min,
            oracle_scale_max: o.scale_max,
            oracle_dropout: o.dropout,
            oracle_noise: o.position_noise_sigma,
            seed: 0,
            episodes: 10,
            scenario: ScenarioSel::All,
        }
    }
}

pub const KEYS: &[&str] = &[
    "alpha_sem",
    "alpha_exp",
    "beta",
    "lambda_sem",
    "r_vis",
    "sigma_s",
    "sigma_t",
    "tau_d",
    "n_cameras",
    "d_c",
    "d_v",
    "eps_merge",
    "eps_match",
    "camera.width",
    "camera.height",
    "camera.hfov_deg",
    "camera.mount_height",
    "pixel_stride",
    "grid_cell",
    "robot_radius",
    "step_len",
    "k_move",
    "max_steps",
    "success_dist",
    "world_model",
    "oracle.scale_min",
    "oracle.scale_max",
    "oracle.dropout",
    "oracle.noise",
    "seed",
    "episodes",
    "scenario",
];

fn parse_num<T: std::str::FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| e.to_string())
}

fn parse_f64(value: &str) -> Result<f64, String> {
    let v: f64 = parse_num(value)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("must be finite".into())
    }
}

impl Config {
    /// Sets one key; `origin` names the source for error messages.
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), ConfigError> {
        let bad = |reason: String| ConfigError::BadValue {
            origin: origin.to_string(),
            key: key.to_string(),
            value: value.to_string(),
            reason,
        };
        let f = || parse_f64(value).map_err(bad);
        let u = || parse_num::<usize>(value).map_err(bad);
        match key {
            "alpha_sem" => self.alpha_sem = f()?,
            "alpha_exp" => self.alpha_exp = f()?,
            "beta" => self.beta = f()?,
            "lambda_sem" => self.lambda_sem = f()?,
            "r_vis" => self.r_vis = f()?,
            "sigma_s" => self.sigma_s = f()?,
            "sigma_t" => self.sigma_t = f()?,
            "tau_d" => self.tau_d = f()?,
            "n_cameras" => self.n_cameras = u()?,
            "d_c" => self.d_c = f()?,
            "d_v" => self.d_v = Some(f()?),
            "eps_merge" => self.eps_merge = f()?,
            "eps_match" => self.eps_match = f()?,
            "camera.width" => self.camera_width = u()?,
            "camera.height" => self.camera_height = u()?,
            "camera.hfov_deg" => self.camera_hfov_deg = f()?,
            "camera.mount_height" => self.camera_mount_height = f()?,
            "pixel_stride" => self.pixel_stride = u()?,
            "grid_cell" => self.grid_cell = f()?,
            "robot_radius" => self.robot_radius = f()?,
            "step_len" => self.step_len = f()?,
            "k_move" => self.k_move = u()?,
            "max_steps" => self.max_steps = u()?,
            "success_dist" => self.success_dist = f()?,
            "world_model" => {
                self.world_model = match value {
                    "oracle" => WorldModelKind::Oracle,
                    "none" => WorldModelKind::None,
                    _ => return Err(bad("expected `oracle` or `none`".into())),
                }
            }
            "oracle.scale_min" => self.oracle_scale_min = f()?,
            "oracle.scale_max" => self.oracle_scale_max = f()?,
            "oracle.dropout" => self.oracle_dropout = f()?,
            "oracle.noise" => self.oracle_noise = f()?,
            "seed" => self.seed = parse_num(value).map_err(bad)?,
            "episodes" => self.episodes = u()?,
            "scenario" => {
                self.scenario = if value == "all" {
                    ScenarioSel::All
                } else {
                    ScenarioSel::One(value.parse().map_err(bad)?)
                }
            }
            _ => return Err(ConfigError::UnknownKey { origin: origin.to_string(), key: key.to_string() }),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str, source: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = format!("{source}:{}", i + 1);
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { origin, text: line.to_string() });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax { origin, text: line.to_string() });
            }
            self.set(k, v, &origin)?;
        }
        Ok(())
    }

    /// Applies a `key=value` command-line override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), ConfigError> {
        let origin = format!("--set {kv}");
        let Some((k, v)) = kv.split_once('=') else {
            return Err(ConfigError::Syntax { origin, text: kv.to_string() });
        };
        self.set(k.trim(), v.trim(), &origin)
    }

    pub fn parse(text: &str, source: &str) -> Result<Self, ConfigError> {
        let mut c = Config::default();
        c.apply_text(text, source)?;
        Ok(c)
    }

    pub fn effective_d_v(&self) -> f64 {
        self.d_v.unwrap_or(self.d_c * std::f64::consts::FRAC_PI_2)
    }

    /// Every key with its effective value, in a form `parse` reads back.
    pub fn dump(&self) -> String {
        let model = match self.world_model {
            WorldModelKind::Oracle => "oracle",
            WorldModelKind::None => "none",
        };
        let values: Vec<String> = vec![
            self.alpha_sem.to_string(),
            self.alpha_exp.to_string(),
            self.beta.to_string(),
            self.lambda_sem.to_string(),
            self.r_vis.to_string(),
            self.sigma_s.to_string(),
            self.sigma_t.to_string(),
            self.tau_d.to_string(),
            self.n_cameras.to_string(),
            self.d_c.to_string(),
            self.effective_d_v().to_string(),
            self.eps_merge.to_string(),
            self.eps_match.to_string(),
            self.camera_width.to_string(),
            self.camera_height.to_string(),
            self.camera_hfov_deg.to_string(),
            self.camera_mount_height.to_string(),
            self.pixel_stride.to_string(),
            self.grid_cell.to_string(),
            self.robot_radius.to_string(),
            self.step_len.to_string(),
            self.k_move.to_string(),
            self.max_steps.to_string(),
            self.success_dist.to_string(),
            model.to_string(),
            self.oracle_scale_min.to_string(),
            self.oracle_scale_max.to_string(),
            self.oracle_dropout.to_string(),
            self.oracle_noise.to_string(),
            self.seed.to_string(),
            self.episodes.to_string(),
            self.scenario.name().to_string(),
        ];
        let mut out = String::new();
        for (k, v) in KEYS.iter().zip(values) {
            writeln!(out, "{k} = {v}").expect("writing to a String");
        }
        out
    }

    pub fn weights(&self) -> ValueWeights {
        ValueWeights {
            alpha_sem: self.alpha_sem,
            alpha_exp: self.alpha_exp,
            beta: self.beta,
            lambda_sem: self.lambda_sem,
            r_vis: self.r_vis,
            sigma_s: self.sigma_s,
            sigma_t: self.sigma_t,
        }
    }

    pub fn sim_config(&self) -> Result<SimConfig, ConfigError> {
        let camera = intrinsics_from_hfov(self.camera_width, self.camera_height, self.camera_hfov_deg)
            .map_err(|e| ConfigError::Invalid(format!("camera: {e}")))?;
        let sim = SimConfig {
            weights: self.weights(),
            tau_d: self.tau_d,
            n_cameras: self.n_cameras,
            d_c: self.d_c,
            d_v: self.effective_d_v(),
            eps_merge: self.eps_merge,
            eps_match: self.eps_match,
            camera,
            camera_height: self.camera_mount_height,
            pixel_stride: self.pixel_stride,
            grid_cell: self.grid_cell,
            robot_radius: self.robot_radius,
            step_len: self.step_len,
            k_move: self.k_move,
            max_steps: self.max_steps,
            success_dist: self.success_dist,
            imagination: self.world_model == WorldModelKind::Oracle,
            oracle: OracleConfig {
                scale_min: self.oracle_scale_min,
                scale_max: self.oracle_scale_max,
                dropout: self.oracle_dropout,
                position_noise_sigma: self.oracle_noise,
                seed: self.seed,
            },
        };
        sim.validate().map_err(ConfigError::Invalid)?;
        if self.episodes == 0 {
            return Err(ConfigError::Invalid("episodes must be at least 1".into()));
        }
        Ok(sim)
    }
}
