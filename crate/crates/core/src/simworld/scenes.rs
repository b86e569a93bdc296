//! Procedural rooms with an occluded target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::{GridSpec, TrueGrid};
use super::{is_obstacle, labels, palette_color, robot_camera, EpisodeSpec, Scenario, SimConfig, SimError};
use crate::geometry::{Intrinsics, Vec3};
use crate::gsscene::{render, Gaussian9, GaussianScene};
use crate::valuemap::PointIndex;

const MAX_ATTEMPTS: usize = 100;
const WALL_HEIGHT: f64 = 1.2;
const SHEET_SPACING: f64 = 0.15;
const SHEET_RAD: f64 = 0.11;
const FLOOR_SPACING: f64 = 0.2;
const FLOOR_RAD: f64 = 0.1;
const MAX_TARGET_SPEED: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub camera: Intrinsics,
    pub camera_height: f64,
    pub robot_radius: f64,
    pub grid_cell: f64,
    pub max_steps: usize,
    pub success_dist: f64,
}

impl From<&SimConfig> for GenParams {
    fn from(c: &SimConfig) -> Self {
        Self {
            camera: c.camera,
            camera_height: c.camera_height,
            robot_radius: c.robot_radius,
            grid_cell: c.grid_cell,
            max_steps: c.max_steps,
            success_dist: c.success_dist,
        }
    }
}

pub(crate) fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn gaussian(p: Vec3, rad: f64, label: u32) -> Gaussian9 {
    Gaussian9::new(p, palette_color(label), rad, 1.0, label)
}

fn sheet(a: Vec3, b: Vec3, height: f64, label: u32, out: &mut Vec<Gaussian9>) {
    let len = (b - a).norm();
    let n = (len / SHEET_SPACING).round().max(1.0) as usize;
    for i in 0..=n {
        let p = a + (b - a) * (i as f64 / n as f64);
        let mut z = SHEET_SPACING / 2.0;
        while z < height {
            out.push(gaussian(Vec3::new(p.x, p.y, z), SHEET_RAD, label));
            z += SHEET_SPACING;
        }
    }
}

/// Lattice box resting on the floor.
fn block(center: Vec3, half: f64, height: f64, spacing: f64, rad: f64, label: u32) -> Vec<Gaussian9> {
    let n = (2.0 * half / spacing).round() as usize;
    let mut out = Vec::new();
    let mut z = spacing / 2.0;
    while z < height {
        for i in 0..=n {
            for j in 0..=n {
                let x = center.x - half + i as f64 * spacing;
                let y = center.y - half + j as f64 * spacing;
                out.push(gaussian(Vec3::new(x, y, z), rad, label));
            }
        }
        z += spacing;
    }
    out
}

fn target_block(center: Vec3) -> Vec<Gaussian9> {
    block(center, 0.15, 0.4, 0.1, 0.06, labels::TARGET)
}

pub(crate) fn scene_grid(scene: &GaussianScene, cell: f64) -> GridSpec {
    let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
    for g in &scene.gaussians {
        lo = (lo.0.min(g.pos.x), lo.1.min(g.pos.y));
        hi = (hi.0.max(g.pos.x), hi.1.max(g.pos.y));
    }
    if !lo.0.is_finite() {
        lo = (0.0, 0.0);
        hi = (1.0, 1.0);
    }
    GridSpec::covering(lo, hi, cell, 0.5)
}

pub(crate) fn true_grid(gaussians: &[Gaussian9], spec: GridSpec, robot_radius: f64) -> TrueGrid {
    TrueGrid::new(spec, gaussians.iter().filter(|g| is_obstacle(g)).map(|g| &g.pos), robot_radius)
}

/// Geodesic distance from `start` to the region within `success_dist` of
/// any `target_label` Gaussian.
pub(crate) fn geodesic_to_target(gaussians: &[Gaussian9], grid: &TrueGrid, target_label: u32, success_dist: f64, start: &Vec3) -> f64 {
    let goals = grid.goal_cells(gaussians.iter().filter(|g| g.label == target_label).map(|g| &g.pos), success_dist);
    let Some(s) = grid.spec.cell_of(start) else {
        return f64::INFINITY;
    };
    grid.distance_field(&goals)[s]
}

fn target_visible(gaussians: &[Gaussian9], start: &Vec3, yaw: f64, p: &GenParams) -> bool {
    let scene = GaussianScene::world(gaussians.to_vec());
    (0..4).any(|q| {
        let cam = robot_camera(start, yaw + q as f64 * std::f64::consts::FRAC_PI_2, p.camera_height);
        render(&scene, &cam, &p.camera).labels.data.contains(&labels::TARGET)
    })
}

fn attempt(family: Scenario, rng: &mut ChaCha8Rng, p: &GenParams, seed: u64) -> Option<EpisodeSpec> {
    let w = rng.gen_range(5.0..7.0);
    let d = rng.gen_range(5.0..7.0);
    let mut statics = Vec::new();

    let mut x = FLOOR_SPACING / 2.0;
    while x < w {
        let mut y = FLOOR_SPACING / 2.0;
        while y < d {
            statics.push(gaussian(Vec3::new(x, y, 0.0), FLOOR_RAD, labels::FLOOR));
            y += FLOOR_SPACING;
        }
        x += FLOOR_SPACING;
    }
    let corners = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(w, 0.0, 0.0), Vec3::new(w, d, 0.0), Vec3::new(0.0, d, 0.0)];
    for i in 0..4 {
        sheet(corners[i], corners[(i + 1) % 4], WALL_HEIGHT, labels::WALL, &mut statics);
    }

    let target = Vec3::new(rng.gen_range(1.0..w - 1.0), rng.gen_range(1.0..d - 1.0), 0.0);
    let start = Vec3::new(rng.gen_range(0.8..w - 0.8), rng.gen_range(0.8..d - 0.8), 0.0);
    if (start - target).norm() < 2.5 {
        return None;
    }

    // occluder across the start-target line
    let dir = (target - start).normalize();
    let perp = Vec3::new(-dir.y, dir.x, 0.0);
    let mid = start + (target - start) * rng.gen_range(0.4..0.7) + perp * rng.gen_range(-0.3..0.3);
    let half = rng.gen_range(0.8..1.3);
    let height = rng.gen_range(1.2..1.6);
    let mut partitions = Vec::new();
    sheet(mid - perp * half, mid + perp * half, height, labels::PARTITION, &mut partitions);
    for _ in 0..rng.gen_range(0..=2) {
        let c = Vec3::new(rng.gen_range(0.5..w - 0.5), rng.gen_range(0.5..d - 0.5), 0.0);
        let h = rng.gen_range(0.5..1.25);
        let axis = if rng.gen_bool(0.5) { Vec3::x() } else { Vec3::y() };
        let mut extra = Vec::new();
        sheet(c - axis * h, c + axis * h, rng.gen_range(1.2..1.6), labels::PARTITION, &mut extra);
        let clear = |q: &Vec3| extra.iter().all(|g| (Vec3::new(g.pos.x, g.pos.y, 0.0) - q).norm() > 0.8);
        if clear(&start) && clear(&target) {
            partitions.extend(extra);
        }
    }
    partitions.retain(|g| g.pos.x > 0.25 && g.pos.x < w - 0.25 && g.pos.y > 0.25 && g.pos.y < d - 0.25);
    if partitions.iter().any(|g| (Vec3::new(g.pos.x, g.pos.y, 0.0) - start).norm() < p.robot_radius + 0.3) {
        return None;
    }
    statics.extend(partitions);

    let mut all = statics.clone();
    all.extend(target_block(target));
    let spec_grid = scene_grid(&GaussianScene::world(all.clone()), p.grid_cell);
    let grid = true_grid(&all, spec_grid, p.robot_radius);
    if grid.is_blocked_at(&start) {
        return None;
    }
    let lstar = geodesic_to_target(&all, &grid, labels::TARGET, p.success_dist, &start);
    if !(lstar.is_finite() && lstar >= 1.5) {
        return None;
    }
    let yaw = rng.gen_range(0.0..std::f64::consts::TAU);
    if target_visible(&all, &start, yaw, p) {
        return None;
    }

    let mut velocity = Vec3::zeros();
    let mut insert_step = None;
    let mut sudden = Vec::new();
    match family {
        Scenario::StaticOccluded => {}
        Scenario::DynamicTarget => {
            let heading = rng.gen_range(0.0..std::f64::consts::TAU);
            let v = Vec3::new(heading.cos(), heading.sin(), 0.0);
            let blockers: Vec<Vec3> =
                statics.iter().filter(|g| is_obstacle(g)).map(|g| Vec3::new(g.pos.x, g.pos.y, 0.0)).collect();
            let index = PointIndex::new(blockers, 0.5);
            let body = target_block(Vec3::zeros());
            let fits = |c: Vec3| {
                body.iter().all(|g| {
                    let q = Vec3::new(c.x + g.pos.x, c.y + g.pos.y, 0.0);
                    q.x > 0.3 && q.x < w - 0.3 && q.y > 0.3 && q.y < d - 0.3 && index.min_dist(&q) > 0.2
                })
            };
            let mut run = 0.0;
            while run < 3.0 && fits(target + v * (run + 0.05)) {
                run += 0.05;
            }
            if run < 0.3 {
                return None;
            }
            let speed = if p.max_steps == 0 { MAX_TARGET_SPEED } else { MAX_TARGET_SPEED.min(run / p.max_steps as f64) };
            velocity = v * speed;
            let fin = target + velocity * p.max_steps as f64;
            let mut moved = statics.clone();
            moved.extend(target_block(fin));
            let g2 = true_grid(&moved, spec_grid, p.robot_radius);
            if !geodesic_to_target(&moved, &g2, labels::TARGET, p.success_dist, &start).is_finite() {
                return None;
            }
        }
        Scenario::SuddenObstacle => {
            let goals = grid.goal_cells(all.iter().filter(|g| g.label == labels::TARGET).map(|g| &g.pos), p.success_dist);
            let field = grid.distance_field(&goals);
            let mut cell = grid.spec.cell_of(&start)?;
            let mut path = vec![cell];
            while field[cell] > 0.0 {
                let next = grid.spec.neighbours(cell).map(|(j, _, _)| j).min_by(|a, b| field[*a].total_cmp(&field[*b]))?;
                if !(field[next] < field[cell]) {
                    return None;
                }
                cell = next;
                path.push(cell);
            }
            let at = path[(path.len() as f64 * rng.gen_range(0.45..0.6)) as usize];
            let c = grid.spec.center(at);
            if (c - start).norm() < 1.2 {
                return None;
            }
            let near_target = all
                .iter()
                .filter(|g| g.label == labels::TARGET)
                .any(|g| (Vec3::new(g.pos.x, g.pos.y, 0.0) - c).norm() < p.success_dist + p.robot_radius + 0.45);
            if near_target {
                return None;
            }
            sudden = block(c, 0.3, 0.8, SHEET_SPACING, SHEET_RAD, labels::OBSTACLE);
            let mut with = all.clone();
            with.extend(sudden.iter().copied());
            let g2 = true_grid(&with, spec_grid, p.robot_radius);
            if !geodesic_to_target(&with, &g2, labels::TARGET, p.success_dist, &start).is_finite() {
                return None;
            }
            insert_step = Some(rng.gen_range(1..=3usize).min(p.max_steps));
        }
    }

    Some(EpisodeSpec {
        hidden_scene: GaussianScene::world(all),
        start_pose: robot_camera(&start, yaw, p.camera_height),
        target_label: labels::TARGET,
        scenario: family,
        target_velocity: velocity,
        obstacle_insert_step: insert_step,
        sudden_obstacle: sudden,
        max_steps: p.max_steps,
        success_dist: p.success_dist,
        seed,
    })
}

pub fn generate_scene_suite(family: Scenario, count: usize, seed: u64, p: &GenParams) -> Result<Vec<EpisodeSpec>, SimError> {
    if count == 0 {
        return Err(SimError::InvalidSpec("suite size must be at least 1".into()));
    }
    let fam = family as u64 + 1;
    (0..count)
        .map(|i| {
            let ep_seed = mix(mix(seed, fam), i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(ep_seed);
            (0..MAX_ATTEMPTS)
                .find_map(|_| attempt(family, &mut rng, p, ep_seed))
                .ok_or(SimError::GenerationFailed { family, seed: ep_seed })
        })
        .collect()
}
