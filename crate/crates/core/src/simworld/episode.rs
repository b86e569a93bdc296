//! Sensing, map upkeep and the decision loop of one episode.

use std::collections::HashSet;

use super::grid::{CellState, GridSpec, PlanGrid, TrueGrid};
use super::scenes::{geodesic_to_target, mix, scene_grid, true_grid};
use super::trace::{Snapshot, TraceRecord};
use super::{is_obstacle, labels, robot_camera, segment, yaw_of, EpisodeSpec, SimConfig, SimError};
use crate::geometry::{unproject, Intrinsics, Pose, Vec3};
use crate::grounding::{align_imagined, global_scale, transfer_labels, vote_labels, apply_votes, Alignment, GroundingConfig};
use crate::gsscene::{depth_is_valid, render, DepthImage, Gaussian9, GaussianScene, LabelImage};
use crate::imagination::{imagine_tri, ImaginedScene, Observation, OracleConfig, OracleModel, WorldModel};
use crate::trajectory::{sample_tri, TrajectoryParams};
use crate::valuemap::{
    fuse_affordance, future_aware_scores, multi_source_map, select_waypoint_filtered, AffordanceField,
    MultiSourceInputs, NavigableSet, PointIndex, Source, TargetSets,
};

const MAX_CANDIDATES: usize = 20_000;
/// Observed Gaussians this far in front of the sensed surface are erased.
const CARVE_MARGIN: f64 = 0.2;
const ANCHOR_RANGE: f64 = 3.0;
const ANCHOR_CONE_COS: f64 = 0.866_025_403_784_438_6;
const FACE_TARGET_RANGE: f64 = 2.0;

/// An observation together with the simulator's ground-truth segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensed {
    pub obs: Observation,
    pub labels: LabelImage,
}

pub fn sense(hidden: &GaussianScene, pose: &Pose, k: &Intrinsics) -> Sensed {
    let r = render(hidden, pose, k);
    Sensed { obs: Observation { rgb: r.rgb, depth: r.depth, pose: *pose }, labels: r.labels }
}

/// Supplies a world model for the hidden scene as it stands at a given step.
pub trait ModelProvider: Sync {
    fn model<'a>(&'a self, hidden: &'a GaussianScene, seed: u64) -> Box<dyn WorldModel + 'a>;
}

#[derive(Debug, Clone, Copy)]
pub struct OracleProvider {
    pub k: Intrinsics,
    pub cfg: OracleConfig,
}

impl ModelProvider for OracleProvider {
    fn model<'a>(&'a self, hidden: &'a GaussianScene, seed: u64) -> Box<dyn WorldModel + 'a> {
        Box::new(OracleModel { hidden, k: self.k, cfg: OracleConfig { seed, ..self.cfg } })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StubAction {
    Approach,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkPair {
    pub action: StubAction,
    pub landmark: u32,
    /// Horizontal unit vector (zero when undefined).
    pub preferred_dir: Vec3,
}

fn voxel(p: &Vec3, e: f64) -> (i64, i64, i64) {
    ((p.x / e).floor() as i64, (p.y / e).floor() as i64, (p.z / e).floor() as i64)
}

fn flat(p: &Vec3) -> Vec3 {
    Vec3::new(p.x, p.y, 0.0)
}

fn unit_or_zero(v: Vec3) -> Vec3 {
    let n = v.norm();
    if n > 1e-12 {
        v / n
    } else {
        Vec3::zeros()
    }
}

#[derive(Debug, Clone)]
pub struct NavigationState {
    /// Robot footprint center (z = 0).
    pub position: Vec3,
    pub yaw: f64,
    pub plan: Vec<LandmarkPair>,
    pub current: LandmarkPair,
    pub last_motion_dir: Vec3,
    pub visited: Vec<Vec3>,
    pub observed: Vec<Gaussian9>,
    /// Grounded imagination of the latest step.
    pub imagined: Vec<Gaussian9>,
    pub grid: PlanGrid,
    pub path_length: f64,
    pub last_field: Option<AffordanceField>,
    seen_free: Vec<bool>,
    observed_keys: HashSet<(i64, i64, i64)>,
    stub_candidates: Vec<Vec3>,
    stub_semantic: Vec<f64>,
    targets_known: bool,
}

impl NavigationState {
    pub fn new(spec: &EpisodeSpec, grid: GridSpec, robot_radius: f64) -> Self {
        let yaw = yaw_of(&spec.start_pose);
        let heading = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
        let current = LandmarkPair { action: StubAction::Approach, landmark: spec.target_label, preferred_dir: heading };
        Self {
            position: flat(&spec.start_pose.translation),
            yaw,
            plan: Vec::new(),
            current,
            last_motion_dir: heading,
            visited: Vec::new(),
            observed: Vec::new(),
            imagined: Vec::new(),
            grid: PlanGrid::new(grid, vec![CellState::Unknown; grid.len()], robot_radius),
            path_length: 0.0,
            last_field: None,
            seen_free: vec![false; grid.len()],
            observed_keys: HashSet::new(),
            stub_candidates: Vec::new(),
            stub_semantic: Vec::new(),
            targets_known: false,
        }
    }

    pub fn camera(&self, cfg: &SimConfig) -> Pose {
        robot_camera(&self.position, self.yaw, cfg.camera_height)
    }

    /// Fuses a new observation into the observed map and refreshes the grid.
    fn integrate(&mut self, sensed: &Sensed, cfg: &SimConfig) {
        let k = &cfg.camera;
        let cam = sensed.obs.pose;
        let depth = &sensed.obs.depth;
        let to_cam = cam.invert();
        let before = self.observed.len();
        self.observed.retain(|g| {
            let pc = to_cam.apply(&g.pos);
            if !(pc.z > 0.0) {
                return true;
            }
            let u = (k.fx * pc.x / pc.z + k.cx).round();
            let v = (k.fy * pc.y / pc.z + k.cy).round();
            if !(u >= 0.0 && v >= 0.0 && u < k.width as f64 && v < k.height as f64) {
                return true;
            }
            let d = depth.get(u as usize, v as usize);
            depth_is_valid(d) && d <= pc.z + CARVE_MARGIN
        });
        if self.observed.len() != before {
            self.observed_keys = self.observed.iter().map(|g| voxel(&g.pos, cfg.eps_merge)).collect();
        }

        let spec = self.grid.spec;
        let eye = flat(&cam.translation);
        for v in (0..k.height).step_by(cfg.pixel_stride) {
            for u in (0..k.width).step_by(cfg.pixel_stride) {
                let d = depth.get(u, v);
                let label = sensed.labels.get(u, v);
                if !depth_is_valid(d) || label == labels::UNLABELED {
                    continue;
                }
                let p = cam.apply(&unproject(u as f64, v as f64, d, k));
                if self.observed_keys.insert(voxel(&p, cfg.eps_merge)) {
                    self.observed.push(Gaussian9::new(p, sensed.obs.rgb.get(u, v), cfg.eps_merge / 2.0, 1.0, label));
                }
                if label == labels::FLOOR {
                    let to = flat(&p);
                    let len = (to - eye).norm();
                    let n = (len / (spec.cell * 0.5)).ceil() as usize;
                    for i in 0..=n {
                        let q = eye + (to - eye) * (i as f64 / n.max(1) as f64);
                        if let Some(c) = spec.cell_of(&q) {
                            self.seen_free[c] = true;
                        }
                    }
                }
            }
        }

        let mut state: Vec<CellState> =
            self.seen_free.iter().map(|&f| if f { CellState::Free } else { CellState::Unknown }).collect();
        for g in &self.observed {
            if let Some(c) = spec.cell_of(&g.pos) {
                if is_obstacle(g) {
                    state[c] = CellState::Occupied;
                } else if g.label == labels::FLOOR && state[c] == CellState::Unknown {
                    state[c] = CellState::Free;
                }
            }
        }
        self.grid = PlanGrid::new(spec, state, self.grid_radius(cfg));
    }

    fn grid_radius(&self, cfg: &SimConfig) -> f64 {
        cfg.robot_radius
    }

    /// Heading and orbit radius for this step's trajectories: toward the
    /// occupied cell closest to the preferred-direction ray within range.
    fn anchor(&self, cfg: &SimConfig) -> (f64, f64) {
        let pref = unit_or_zero(flat(&self.current.preferred_dir));
        let pref = if pref == Vec3::zeros() { Vec3::new(self.yaw.cos(), self.yaw.sin(), 0.0) } else { pref };
        let spec = self.grid.spec;
        let mut best: Option<(f64, f64, Vec3)> = None;
        for (i, s) in self.grid.state.iter().enumerate() {
            if *s != CellState::Occupied {
                continue;
            }
            let v = spec.center(i) - self.position;
            let dist = v.norm();
            if !(1e-9..=ANCHOR_RANGE).contains(&dist) || v.dot(&pref) / dist < ANCHOR_CONE_COS {
                continue;
            }
            let perp = (v.x * pref.y - v.y * pref.x).abs();
            let better = match best {
                None => true,
                Some((bp, bd, _)) => perp < bp || (perp == bp && dist < bd),
            };
            if better {
                best = Some((perp, dist, v));
            }
        }
        match best {
            Some((_, dist, v)) => (v.y.atan2(v.x), dist.clamp(0.5, ANCHOR_RANGE)),
            None => (pref.y.atan2(pref.x), cfg.d_c),
        }
    }
}

/// Scripted stand-in for the language planner: always approach the target,
/// heading for the candidate with the best semantic score once any target
/// evidence exists, else keep the last motion direction.
pub fn landmark_stub(spec: &EpisodeSpec, state: &NavigationState) -> LandmarkPair {
    let mut dir = state.last_motion_dir;
    if state.targets_known {
        let mut best: Option<(usize, f64)> = None;
        for (i, &s) in state.stub_semantic.iter().enumerate() {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        if let Some((i, _)) = best {
            let v = unit_or_zero(flat(&(state.stub_candidates[i] - state.position)));
            if v != Vec3::zeros() {
                dir = v;
            }
        }
    }
    LandmarkPair { action: StubAction::Approach, landmark: spec.target_label, preferred_dir: dir }
}

fn scale_depth(d: &DepthImage, s: f64) -> DepthImage {
    let mut out = d.clone();
    for v in out.data.iter_mut() {
        if depth_is_valid(*v) {
            *v *= s;
        }
    }
    out
}

/// Metric, labeled Gaussians recovered from one imagined scene.
fn ground(im: &ImaginedScene, sensed: &Sensed, cfg: &SimConfig) -> Option<Vec<Gaussian9>> {
    let obs = &sensed.obs;
    let s = global_scale(&obs.depth, &im.rendered_depths[0]).ok()?.s;
    let mut aligned = align_imagined(&im.scene, im.local_anchor(), &obs.pose, s).ok()?;
    let alignment = Alignment::new(im.local_anchor(), &obs.pose, s).ok()?;
    let gcfg = GroundingConfig { tau_d: cfg.tau_d };
    let mut assignments = Vec::new();
    for (j, local) in im.local_poses.iter().enumerate() {
        let cam = alignment.pose(local);
        let d_render = scale_depth(&im.rendered_depths[j], s);
        let found = if j == 0 {
            transfer_labels(&aligned, &cam, &cfg.camera, &sensed.labels, &obs.depth, &d_render, &gcfg, j)
        } else {
            let sem = segment(&im.rendered_rgbs[j], &im.rendered_depths[j]);
            transfer_labels(&aligned, &cam, &cfg.camera, &sem, &d_render, &d_render, &gcfg, j)
        };
        assignments.extend(found.ok()?);
    }
    apply_votes(&mut aligned, &vote_labels(&assignments));
    Some(aligned.gaussians.into_iter().filter(|g| g.label != labels::UNLABELED).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub record: TraceRecord,
    /// The top-scoring candidate was unreachable and a lower one was used.
    pub fallback: bool,
    pub moved: f64,
}

/// One pass of the pipeline after the termination check: anchor and
/// imagine, ground, rebuild the value maps, pick a waypoint, plan, move.
#[allow(clippy::too_many_arguments)]
pub fn decision_step(
    state: &mut NavigationState,
    spec: &EpisodeSpec,
    hidden: &GaussianScene,
    truth: &TrueGrid,
    sensed: Sensed,
    provider: Option<&dyn ModelProvider>,
    cfg: &SimConfig,
    step: usize,
) -> Result<StepOutcome, SimError> {
    state.integrate(&sensed, cfg);

    let (anchor_yaw, d_c) = state.anchor(cfg);
    let mut sensed = sensed;
    if (anchor_yaw - state.yaw).abs() > 1e-12 {
        state.yaw = anchor_yaw;
        sensed = sense(hidden, &state.camera(cfg), &cfg.camera);
        state.integrate(&sensed, cfg);
    }

    state.imagined.clear();
    if let (true, Some(provider)) = (cfg.imagination_active(), provider) {
        let sweep = if cfg.d_c > 0.0 { cfg.d_v / cfg.d_c } else { 0.0 };
        let params = TrajectoryParams { k: cfg.camera, n: cfg.n_cameras, d_v: sweep * d_c, d_c };
        if let Ok(trajectories) = sample_tri(&params, &sensed.obs.pose) {
            let model = provider.model(hidden, mix(cfg.oracle.seed ^ spec.seed, step as u64));
            let imagined = imagine_tri(&sensed.obs, &trajectories, model.as_ref());
            let mut keys = state.observed_keys.clone();
            for im in imagined.iter().flatten() {
                for g in ground(im, &sensed, cfg).unwrap_or_default() {
                    if keys.insert(voxel(&g.pos, cfg.eps_merge)) {
                        state.imagined.push(g);
                    }
                }
            }
        }
    }

    // global navigable / semantic sets
    let r = cfg.robot_radius;
    let blockers: Vec<Vec3> = state.observed.iter().chain(&state.imagined).filter(|g| is_obstacle(g)).map(|g| flat(&g.pos)).collect();
    let blockers = PointIndex::new(blockers, r.max(0.05));
    let mut entries = Vec::new();
    for (set, src) in [(&state.observed, Source::Observed), (&state.imagined, Source::Imagined)] {
        for g in set.iter().filter(|g| g.label == labels::FLOOR) {
            if blockers.min_dist(&flat(&g.pos)) > r {
                entries.push((g.pos, src));
            }
        }
    }
    entries.truncate(MAX_CANDIDATES);
    let nav = NavigableSet::new(entries, 0.5);
    let t_real: Vec<Vec3> = state.observed.iter().filter(|g| g.label == spec.target_label).map(|g| g.pos).collect();
    let t_hyp: Vec<Vec3> = state.imagined.iter().filter(|g| g.label == spec.target_label).map(|g| g.pos).collect();
    let (n_sem, n_hyp) = (t_real.len(), t_hyp.len());
    let observed_nav = PointIndex::new(nav.with_source(Source::Observed).copied().collect(), 0.5);
    let f_new: Vec<Vec3> =
        nav.with_source(Source::Imagined).filter(|p| observed_nav.min_dist(p) > cfg.eps_match).copied().collect();
    let gspec = state.grid.spec;
    let frontiers: Vec<Vec3> = nav
        .with_source(Source::Observed)
        .filter(|p| {
            gspec.cell_of(p).is_some_and(|c| gspec.neighbours(c).any(|(j, _, _)| state.grid.state[j] == CellState::Unknown))
        })
        .copied()
        .collect();
    let face_set = if t_real.is_empty() { t_hyp.clone() } else { t_real.clone() };
    let landmark = PointIndex::new(t_real.clone(), 0.5);
    let targets = TargetSets::new(t_real, t_hyp);

    let w = cfg.weights;
    let fa = future_aware_scores(&nav.positions, &targets, &PointIndex::new(f_new, w.r_vis), &w);
    state.stub_candidates = nav.positions.clone();
    state.stub_semantic = fa.semantic.clone();
    state.targets_known = !targets.t_real.is_empty() || !targets.t_hyp.is_empty();
    state.current = landmark_stub(spec, state);
    state.plan.push(state.current);

    let camera = state.camera(cfg);
    let mut record = TraceRecord {
        step,
        quat: [1.0, 0.0, 0.0, 0.0],
        translation: Vec3::zeros(),
        waypoint_index: 0,
        waypoint: state.position,
        n_nav: nav.len(),
        n_sem,
        n_hyp,
        score: 0.0,
    };
    record.set_pose(&camera);

    if nav.is_empty() {
        // nothing navigable in view: turn and look elsewhere
        state.yaw += std::f64::consts::FRAC_PI_2;
        state.last_field = None;
        return Ok(StepOutcome { record, fallback: false, moved: 0.0 });
    }

    let inputs = MultiSourceInputs {
        robot: state.position,
        preferred_dir: state.current.preferred_dir,
        landmark,
        visited: PointIndex::new(state.visited.clone(), 0.5),
        frontiers: PointIndex::new(frontiers, 0.5),
        sigma_s: w.sigma_s,
        sigma_t: w.sigma_t,
    };
    let m = multi_source_map(&nav.positions, &inputs);
    let m_aff = fuse_affordance(&m, &fa.m_fa, w.beta).map_err(|_| SimError::PlanningFailed)?;

    let start = gspec.cell_of(&state.position).ok_or(SimError::UnreachableEverything)?;
    let robot = state.position;
    let mut fallback = false;
    let first = select_waypoint_filtered(&m_aff, &nav.positions, &robot, |_| true);
    let mut chosen = first.and_then(|i| gspec.cell_of(&nav.positions[i]).and_then(|c| state.grid.astar(start, c)).map(|p| (i, p)));
    if chosen.is_none() {
        fallback = true;
        let reach = state.grid.reachable(start);
        let i = select_waypoint_filtered(&m_aff, &nav.positions, &robot, |i| {
            gspec.cell_of(&nav.positions[i]).is_some_and(|c| reach[c])
        })
        .ok_or(SimError::UnreachableEverything)?;
        let goal = gspec.cell_of(&nav.positions[i]).ok_or(SimError::UnreachableEverything)?;
        let path = state.grid.astar(start, goal).ok_or(SimError::UnreachableEverything)?;
        chosen = Some((i, path));
    }
    let (sel, path) = chosen.expect("selected above");
    let waypoint = nav.positions[sel];
    record.waypoint_index = sel;
    record.waypoint = waypoint;
    record.score = m_aff[sel];
    state.visited.push(waypoint);
    state.last_field =
        Some(AffordanceField { positions: nav.positions.clone(), m, m_fa: fa.m_fa, m_aff, selected: Some(sel) });

    // move along the planned cells
    let points: Vec<Vec3> = path.iter().skip(1).map(|&c| gspec.center(c)).collect();
    let mut pos = state.position;
    let mut idx = 0;
    let mut moved = 0.0;
    let mut last_dir = None;
    for _ in 0..cfg.k_move {
        let mut remaining = cfg.step_len;
        let mut next = pos;
        let mut next_idx = idx;
        while remaining > 0.0 && next_idx < points.len() {
            let to = points[next_idx];
            let d = (to - next).norm();
            if d <= remaining {
                next = to;
                remaining -= d;
                next_idx += 1;
            } else {
                next += (to - next) * (remaining / d);
                remaining = 0.0;
            }
        }
        if next == pos || truth.is_blocked_at(&next) {
            break;
        }
        let disp = (next - pos).norm();
        moved += disp;
        last_dir = Some((next - pos) / disp);
        pos = next;
        idx = next_idx;
    }
    state.position = pos;
    state.path_length += moved;

    match last_dir {
        None => state.yaw += std::f64::consts::FRAC_PI_2,
        Some(dir) => {
            state.last_motion_dir = dir;
            state.yaw = dir.y.atan2(dir.x);
            let near = face_set
                .iter()
                .map(|t| flat(&(t - pos)))
                .filter(|v| v.norm() <= FACE_TARGET_RANGE && v.norm() > 1e-9)
                .min_by(|a, b| a.norm().total_cmp(&b.norm()));
            if let Some(v) = near {
                state.yaw = v.y.atan2(v.x);
            }
        }
    }
    Ok(StepOutcome { record, fallback, moved })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps: usize,
    pub path_length: f64,
    pub shortest_path: f64,
    pub dtg: f64,
    pub trace: Vec<TraceRecord>,
    /// Affordance field of the last decision step.
    pub snapshot: Option<Snapshot>,
}

fn target_distance(hidden: &[Gaussian9], label: u32, p: &Vec3) -> f64 {
    hidden.iter().filter(|g| g.label == label).map(|g| flat(&(g.pos - p)).norm()).fold(f64::INFINITY, f64::min)
}

pub fn run_episode(spec: &EpisodeSpec, cfg: &SimConfig, provider: Option<&dyn ModelProvider>) -> Result<EpisodeResult, SimError> {
    spec.validate()?;
    let mut scene = spec.hidden_scene.clone();
    let mut bounds = scene.clone();
    bounds.gaussians.extend(spec.sudden_obstacle.iter().copied());
    let gspec = scene_grid(&bounds, cfg.grid_cell);
    let mut truth = true_grid(&scene.gaussians, gspec, cfg.robot_radius);
    let mut state = NavigationState::new(spec, gspec, cfg.robot_radius);
    let mut trace = Vec::new();
    let mut success = false;
    let mut steps = 0;
    let mut inserted = false;
    loop {
        let sensed = sense(&scene, &state.camera(cfg), &cfg.camera);
        let close = target_distance(&scene.gaussians, spec.target_label, &state.position) < spec.success_dist;
        if close && sensed.labels.data.contains(&spec.target_label) {
            success = true;
            break;
        }
        if steps >= spec.max_steps {
            break;
        }
        match decision_step(&mut state, spec, &scene, &truth, sensed, provider, cfg, steps) {
            Ok(o) => trace.push(o.record),
            Err(SimError::UnreachableEverything) => break,
            Err(e) => return Err(e),
        }
        steps += 1;

        let mut changed = false;
        if spec.target_velocity != Vec3::zeros() {
            for g in scene.gaussians.iter_mut().filter(|g| g.label == spec.target_label) {
                g.pos += spec.target_velocity;
            }
            changed = true;
        }
        if let Some(at) = spec.obstacle_insert_step {
            let clear = spec.sudden_obstacle.iter().all(|g| flat(&(g.pos - state.position)).norm() > cfg.robot_radius + 0.05);
            if !inserted && steps >= at && clear {
                scene.gaussians.extend(spec.sudden_obstacle.iter().copied());
                inserted = true;
                changed = true;
            }
        }
        if changed {
            truth = true_grid(&scene.gaussians, gspec, cfg.robot_radius);
        }
    }

    let start = flat(&spec.start_pose.translation);
    let euclid = |p: &Vec3| (target_distance(&scene.gaussians, spec.target_label, p) - spec.success_dist).max(0.0);
    let mut shortest = geodesic_to_target(&scene.gaussians, &truth, spec.target_label, spec.success_dist, &start);
    if !shortest.is_finite() {
        shortest = euclid(&start);
    }
    let dtg = if target_distance(&scene.gaussians, spec.target_label, &state.position) < spec.success_dist {
        0.0
    } else {
        let d = geodesic_to_target(&scene.gaussians, &truth, spec.target_label, spec.success_dist, &state.position);
        if d.is_finite() {
            d
        } else {
            euclid(&state.position)
        }
    };
    let snapshot = state.last_field.as_ref().map(|f| Snapshot::from_field(f, state.position));
    Ok(EpisodeResult { success, steps, path_length: state.path_length, shortest_path: shortest, dtg, trace, snapshot })
}
