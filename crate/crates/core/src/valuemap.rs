//! Candidate scoring over navigable Gaussians.
//!
//! * `m`: multi-sourced map. Action preference + semantic landmark +
//!   trajectory suppression + frontier guidance, each normalized.
//! * `m_fa`: future-aware map, `alpha_sem * S(g) + alpha_exp * E(g)`.
//! * `m_aff`: affordance, `beta * m + (1 - beta) * m_fa`. Its argmax is the
//!   next waypoint.

use std::collections::HashMap;

use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValueMapError {
    #[error("score vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no candidates to select from")]
    EmptyField,
    #[error("invalid weights: {0}")]
    InvalidWeights(&'static str),
}

// ---------------------------------------------------------------------------
// Spatial index

const LINEAR_SCAN_MAX: usize = 32;

/// Uniform hash grid over 3D points supporting radius and nearest queries.
#[derive(Debug, Clone)]
pub struct PointIndex {
    points: Vec<Vec3>,
    cell: f64,
    buckets: HashMap<(i64, i64, i64), Vec<usize>>,
    // cell-coordinate bounding box, for terminating nearest searches
    lo: (i64, i64, i64),
    hi: (i64, i64, i64),
}

impl PointIndex {
    pub fn new(points: Vec<Vec3>, cell: f64) -> Self {
        assert!(cell > 0.0, "index cell size must be positive");
        let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        let mut lo = (i64::MAX, i64::MAX, i64::MAX);
        let mut hi = (i64::MIN, i64::MIN, i64::MIN);
        for (i, p) in points.iter().enumerate() {
            let key = Self::key_of(p, cell);
            lo = (lo.0.min(key.0), lo.1.min(key.1), lo.2.min(key.2));
            hi = (hi.0.max(key.0), hi.1.max(key.1), hi.2.max(key.2));
            buckets.entry(key).or_default().push(i);
        }
        Self { points, cell, buckets, lo, hi }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), 1.0)
    }

    fn key_of(p: &Vec3, cell: f64) -> (i64, i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64)
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Visits indices of points with `‖p − center‖ <= radius`.
    pub fn for_each_within(&self, center: &Vec3, radius: f64, mut f: impl FnMut(usize)) {
        if self.points.is_empty() || !(radius >= 0.0) {
            return;
        }
        let a = Self::key_of(&(center - Vec3::repeat(radius)), self.cell);
        let b = Self::key_of(&(center + Vec3::repeat(radius)), self.cell);
        let a = (a.0.max(self.lo.0), a.1.max(self.lo.1), a.2.max(self.lo.2));
        let b = (b.0.min(self.hi.0), b.1.min(self.hi.1), b.2.min(self.hi.2));
        for x in a.0..=b.0 {
            for y in a.1..=b.1 {
                for z in a.2..=b.2 {
                    if let Some(bucket) = self.buckets.get(&(x, y, z)) {
                        for &i in bucket {
                            if (self.points[i] - center).norm() <= radius {
                                f(i);
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn count_within(&self, center: &Vec3, radius: f64) -> usize {
        let mut n = 0;
        self.for_each_within(center, radius, |_| n += 1);
        n
    }

    /// Distance to the nearest point; `+∞` for an empty index.
    pub fn min_dist(&self, g: &Vec3) -> f64 {
        if self.points.is_empty() {
            return f64::INFINITY;
        }
        if self.points.len() <= LINEAR_SCAN_MAX {
            return self.points.iter().map(|p| (p - g).norm()).fold(f64::INFINITY, f64::min);
        }
        let c = Self::key_of(g, self.cell);
        let reach = [
            (c.0 - self.lo.0).abs().max((self.hi.0 - c.0).abs()),
            (c.1 - self.lo.1).abs().max((self.hi.1 - c.1).abs()),
            (c.2 - self.lo.2).abs().max((self.hi.2 - c.2).abs()),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        let mut best = f64::INFINITY;
        for ring in 0..=reach {
            self.visit_shell(c, ring, |i| {
                let d = (self.points[i] - g).norm();
                if d < best {
                    best = d;
                }
            });
            // every point in shell `ring + 1` is at least `ring * cell` away
            if best <= ring as f64 * self.cell {
                break;
            }
        }
        best
    }

    /// Visits buckets at Chebyshev cell distance exactly `ring` from `c`,
    /// restricted to the occupied bounding box.
    fn visit_shell(&self, c: (i64, i64, i64), ring: i64, mut f: impl FnMut(usize)) {
        let (lo, hi) = (self.lo, self.hi);
        let mut visit = |x: i64, y: i64, z: i64| {
            if let Some(bucket) = self.buckets.get(&(x, y, z)) {
                bucket.iter().for_each(|&i| f(i));
            }
        };
        let xs = (c.0 - ring).max(lo.0)..=(c.0 + ring).min(hi.0);
        let ys = (c.1 - ring).max(lo.1)..=(c.1 + ring).min(hi.1);
        let zs = (c.2 - ring).max(lo.2)..=(c.2 + ring).min(hi.2);
        for x in xs.clone() {
            let x_edge = (x - c.0).abs() == ring;
            for y in ys.clone() {
                if x_edge || (y - c.1).abs() == ring {
                    for z in zs.clone() {
                        visit(x, y, z);
                    }
                } else if ring > 0 {
                    for z in [c.2 - ring, c.2 + ring] {
                        if z >= lo.2 && z <= hi.2 {
                            visit(x, y, z);
                        }
                    }
                }
            }
        }
    }
}

pub fn min_dist(g: &Vec3, s: &PointIndex) -> f64 {
    s.min_dist(g)
}

// ---------------------------------------------------------------------------
// Domain types

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Observed,
    Imagined,
}

#[derive(Debug, Clone)]
pub struct NavigableSet {
    pub positions: Vec<Vec3>,
    pub sources: Vec<Source>,
    index: PointIndex,
}

impl NavigableSet {
    pub fn new(entries: Vec<(Vec3, Source)>, cell: f64) -> Self {
        let (positions, sources): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let index = PointIndex::new(positions.clone(), cell);
        Self { positions, sources, index }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn index(&self) -> &PointIndex {
        &self.index
    }

    pub fn with_source(&self, src: Source) -> impl Iterator<Item = &Vec3> {
        self.positions.iter().zip(&self.sources).filter(move |(_, s)| **s == src).map(|(p, _)| p)
    }
}

/// Target-labeled Gaussians split by provenance.
#[derive(Debug, Clone)]
pub struct TargetSets {
    pub t_real: PointIndex,
    pub t_hyp: PointIndex,
}

impl TargetSets {
    pub fn new(real: Vec<Vec3>, hyp: Vec<Vec3>) -> Self {
        Self { t_real: PointIndex::new(real, 0.5), t_hyp: PointIndex::new(hyp, 0.5) }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueWeights {
    pub alpha_sem: f64,
    pub alpha_exp: f64,
    pub beta: f64,
    pub lambda_sem: f64,
    /// Visibility radius for the exploration count, meters.
    pub r_vis: f64,
    /// Semantic distance length scale, meters.
    pub sigma_s: f64,
    /// Trajectory-suppression length scale, meters.
    pub sigma_t: f64,
}

impl Default for ValueWeights {
    fn default() -> Self {
        Self { alpha_sem: 0.5, alpha_exp: 0.5, beta: 0.5, lambda_sem: 0.5, r_vis: 0.6, sigma_s: 1.0, sigma_t: 1.0 }
    }
}

impl ValueWeights {
    pub fn validate(&self) -> Result<(), ValueMapError> {
        let unit = [self.alpha_sem, self.alpha_exp, self.beta, self.lambda_sem];
        if !unit.iter().all(|w| (0.0..=1.0).contains(w)) {
            return Err(ValueMapError::InvalidWeights("alpha_sem, alpha_exp, beta, lambda_sem must lie in [0,1]"));
        }
        if !(self.r_vis > 0.0 && self.sigma_s > 0.0 && self.sigma_t > 0.0) {
            return Err(ValueMapError::InvalidWeights("r_vis, sigma_s, sigma_t must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffordanceField {
    pub positions: Vec<Vec3>,
    pub m: Vec<f64>,
    pub m_fa: Vec<f64>,
    pub m_aff: Vec<f64>,
    pub selected: Option<usize>,
}

// ---------------------------------------------------------------------------
// Future-aware scores

/// `max(exp(−d_real/σ), λ·exp(−d_hyp/σ))`; empty sets contribute 0.
pub fn semantic_score(g: &Vec3, targets: &TargetSets, w: &ValueWeights) -> f64 {
    let real = (-targets.t_real.min_dist(g) / w.sigma_s).exp();
    let hyp = w.lambda_sem * (-targets.t_hyp.min_dist(g) / w.sigma_s).exp();
    real.max(hyp)
}

/// Number of new free-space Gaussians within `r_vis` (inclusive).
pub fn exploration_raw(g: &Vec3, f_new: &PointIndex, r_vis: f64) -> usize {
    f_new.count_within(g, r_vis)
}

/// Divides by the largest count; all-zero input stays zero.
pub fn exploration_normalize(counts: &[usize]) -> Vec<f64> {
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / max as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FutureAwareScores {
    pub semantic: Vec<f64>,
    pub exploration: Vec<f64>,
    pub m_fa: Vec<f64>,
}

pub fn future_aware_scores(
    candidates: &[Vec3],
    targets: &TargetSets,
    f_new: &PointIndex,
    w: &ValueWeights,
) -> FutureAwareScores {
    let semantic: Vec<f64> = candidates.iter().map(|g| semantic_score(g, targets, w)).collect();
    let counts: Vec<usize> = candidates.iter().map(|g| exploration_raw(g, f_new, w.r_vis)).collect();
    let exploration = exploration_normalize(&counts);
    let m_fa = semantic.iter().zip(&exploration).map(|(s, e)| w.alpha_sem * s + w.alpha_exp * e).collect();
    FutureAwareScores { semantic, exploration, m_fa }
}

pub fn future_aware_map(candidates: &[Vec3], targets: &TargetSets, f_new: &PointIndex, w: &ValueWeights) -> Vec<f64> {
    future_aware_scores(candidates, targets, f_new, w).m_fa
}

// ---------------------------------------------------------------------------
// Multi-sourced map

/// What the current observation contributes to the multi-sourced map.
#[derive(Debug, Clone)]
pub struct MultiSourceInputs {
    pub robot: Vec3,
    /// Planner preferred heading (horizontal); zero means no preference.
    pub preferred_dir: Vec3,
    /// Observed Gaussians carrying the current landmark label.
    pub landmark: PointIndex,
    pub visited: PointIndex,
    pub frontiers: PointIndex,
    pub sigma_s: f64,
    pub sigma_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiSourceComponents {
    pub action: Vec<f64>,
    pub semantic: Vec<f64>,
    pub trajectory: Vec<f64>,
    pub heuristic: Vec<f64>,
}

impl MultiSourceComponents {
    pub fn total(&self) -> Vec<f64> {
        (0..self.action.len())
            .map(|i| self.action[i] + self.semantic[i] + self.trajectory[i] + self.heuristic[i])
            .collect()
    }
}

/// `(1 + cos θ) / 2` for the horizontal angle between the candidate bearing and
/// the preferred direction; 0.5 when either is undefined.
pub fn action_preference(candidate: &Vec3, robot: &Vec3, preferred: &Vec3) -> f64 {
    let d = Vec3::new(candidate.x - robot.x, candidate.y - robot.y, 0.0);
    let p = Vec3::new(preferred.x, preferred.y, 0.0);
    let (dn, pn) = (d.norm(), p.norm());
    if dn == 0.0 || pn == 0.0 {
        return 0.5;
    }
    let cos = (d.dot(&p) / (dn * pn)).clamp(-1.0, 1.0);
    (1.0 + cos) / 2.0
}

/// Scales a non-negative component so its maximum is 1 (all-zero stays zero).
pub fn normalize_by_max(values: Vec<f64>) -> Vec<f64> {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    if max > 0.0 {
        values.into_iter().map(|v| v / max).collect()
    } else {
        values
    }
}

pub fn multi_source_components(candidates: &[Vec3], inputs: &MultiSourceInputs) -> MultiSourceComponents {
    let action =
        candidates.iter().map(|g| action_preference(g, &inputs.robot, &inputs.preferred_dir)).collect();
    let semantic = candidates.iter().map(|g| (-inputs.landmark.min_dist(g) / inputs.sigma_s).exp()).collect();
    let trajectory = candidates.iter().map(|g| 1.0 - (-inputs.visited.min_dist(g) / inputs.sigma_t).exp()).collect();
    let heuristic = candidates.iter().map(|g| (-inputs.frontiers.min_dist(g) / inputs.sigma_s).exp()).collect();
    MultiSourceComponents {
        action: normalize_by_max(action),
        semantic: normalize_by_max(semantic),
        trajectory: normalize_by_max(trajectory),
        heuristic: normalize_by_max(heuristic),
    }
}

pub fn multi_source_map(candidates: &[Vec3], inputs: &MultiSourceInputs) -> Vec<f64> {
    multi_source_components(candidates, inputs).total()
}

// ---------------------------------------------------------------------------
// Fusion and selection

pub fn fuse_affordance(m: &[f64], m_fa: &[f64], beta: f64) -> Result<Vec<f64>, ValueMapError> {
    if m.len() != m_fa.len() {
        return Err(ValueMapError::LengthMismatch(m.len(), m_fa.len()));
    }
    Ok(m.iter().zip(m_fa).map(|(a, b)| beta * a + (1.0 - beta) * b).collect())
}

/// Argmax of `scores` over indices accepted by `allowed`; ties go to the
/// candidate nearer to `robot`, then to the smaller index.
pub fn select_waypoint_filtered(
    scores: &[f64],
    positions: &[Vec3],
    robot: &Vec3,
    allowed: impl Fn(usize) -> bool,
) -> Option<usize> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, (&s, p)) in scores.iter().zip(positions).enumerate() {
        if !allowed(i) || s.is_nan() {
            continue;
        }
        let d = (p - robot).norm();
        let better = match best {
            None => true,
            Some((_, bs, bd)) => s > bs || (s == bs && d < bd),
        };
        if better {
            best = Some((i, s, d));
        }
    }
    best.map(|b| b.0)
}

pub fn select_waypoint(field: &AffordanceField, robot: &Vec3) -> Result<usize, ValueMapError> {
    if field.m_aff.is_empty() {
        return Err(ValueMapError::EmptyField);
    }
    select_waypoint_filtered(&field.m_aff, &field.positions, robot, |_| true).ok_or(ValueMapError::EmptyField)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(rng: &mut ChaCha8Rng, n: usize, half: f64) -> Vec<Vec3> {
        (0..n)
            .map(|_| Vec3::new(rng.gen_range(-half..half), rng.gen_range(-half..half), rng.gen_range(-0.2..0.2)))
            .collect()
    }

    fn brute_min(g: &Vec3, s: &[Vec3]) -> f64 {
        s.iter().map(|p| (p - g).norm()).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn min_dist_conventions() {
        let s = PointIndex::new(vec![Vec3::new(1.0, 2.0, 3.0), Vec3::zeros()], 0.3);
        assert_eq!(min_dist(&Vec3::new(1.0, 2.0, 3.0), &s), 0.0);
        assert_eq!(min_dist(&Vec3::zeros(), &PointIndex::empty()), f64::INFINITY);
    }

    #[test]
    fn semantic_examples() {
        let w = ValueWeights::default();
        let g = Vec3::new(1.0, 1.0, 0.0);
        assert_eq!(semantic_score(&g, &TargetSets::empty(), &w), 0.0);
        assert_eq!(semantic_score(&g, &TargetSets::new(vec![g], vec![]), &w), 1.0);
        assert_eq!(semantic_score(&g, &TargetSets::new(vec![], vec![g]), &w), 0.5);
        // equal distances: the undiscounted real term wins
        let t = TargetSets::new(vec![Vec3::new(2.0, 1.0, 0.0)], vec![Vec3::new(0.0, 1.0, 0.0)]);
        assert_eq!(semantic_score(&g, &t, &w), (-1.0f64).exp());
    }

    #[test]
    fn exploration_examples() {
        let f = PointIndex::new(vec![Vec3::new(0.3, 0.0, 0.0), Vec3::new(0.0, 0.5, 0.0), Vec3::new(0.0, 0.0, 0.7)], 0.6);
        assert_eq!(exploration_raw(&Vec3::zeros(), &f, 0.6), 2);
        assert_eq!(exploration_raw(&Vec3::zeros(), &PointIndex::empty(), 0.6), 0);
        let edge = PointIndex::new(vec![Vec3::new(0.6, 0.0, 0.0)], 0.6);
        assert_eq!(exploration_raw(&Vec3::zeros(), &edge, 0.6), 1);
        assert_eq!(exploration_normalize(&[2, 4, 0]), vec![0.5, 1.0, 0.0]);
        assert_eq!(exploration_normalize(&[0, 0, 0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(exploration_normalize(&[7]), vec![1.0]);
    }

    #[test]
    fn future_aware_examples() {
        let w = ValueWeights::default();
        let g = Vec3::zeros();
        let with_target = future_aware_map(&[g], &TargetSets::new(vec![g], vec![]), &PointIndex::empty(), &w);
        assert_eq!(with_target, vec![0.5]);
        let nothing = future_aware_map(&[g], &TargetSets::empty(), &PointIndex::empty(), &w);
        assert_eq!(nothing, vec![0.0]);
    }

    fn inputs(robot: Vec3, dir: Vec3) -> MultiSourceInputs {
        MultiSourceInputs {
            robot,
            preferred_dir: dir,
            landmark: PointIndex::empty(),
            visited: PointIndex::empty(),
            frontiers: PointIndex::empty(),
            sigma_s: 1.0,
            sigma_t: 1.0,
        }
    }

    #[test]
    fn multi_source_examples() {
        let cands = vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)];
        let c = multi_source_components(&cands, &inputs(Vec3::zeros(), Vec3::x()));
        assert_eq!(c.trajectory, vec![1.0; 3]);
        assert_eq!(c.action, vec![1.0, 0.5, 0.0]);
        assert_eq!(c.semantic, vec![0.0; 3]);
        assert_eq!(c.heuristic, vec![0.0; 3]);
        assert_eq!(c.total(), vec![2.0, 1.5, 1.0]);
        let mut inp = inputs(Vec3::zeros(), Vec3::zeros());
        inp.visited = PointIndex::new(vec![Vec3::new(1.0, 0.0, 0.0)], 1.0);
        let c = multi_source_components(&cands, &inp);
        assert_eq!(c.action, vec![1.0; 3]);
        assert_eq!(c.trajectory[0], 0.0);
        assert_eq!(c.trajectory[2], 1.0);
    }

    #[test]
    fn fuse_examples() {
        let m = [0.4, 1.0];
        let fa = [0.8, 0.2];
        assert_eq!(fuse_affordance(&m, &fa, 1.0).unwrap(), m.to_vec());
        assert_eq!(fuse_affordance(&m, &fa, 0.0).unwrap(), fa.to_vec());
        assert!((fuse_affordance(&m, &fa, 0.5).unwrap()[0] - 0.6).abs() < 1e-15);
        assert_eq!(fuse_affordance(&m, &fa[..1], 0.5), Err(ValueMapError::LengthMismatch(2, 1)));
    }

    fn field(scores: Vec<f64>, positions: Vec<Vec3>) -> AffordanceField {
        AffordanceField { m: scores.clone(), m_fa: scores.clone(), m_aff: scores, positions, selected: None }
    }

    #[test]
    fn select_examples() {
        let p = vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0), Vec3::new(3.0, 0.0, 0.0)];
        assert_eq!(select_waypoint(&field(vec![0.1, 0.9, 0.3], p.clone()), &Vec3::zeros()), Ok(1));
        assert_eq!(select_waypoint(&field(vec![0.5, 0.5], p[..2].to_vec()), &Vec3::zeros()), Ok(0));
        assert_eq!(select_waypoint(&field(vec![0.5, 0.5], p[..2].to_vec()), &Vec3::new(5.0, 0.0, 0.0)), Ok(1));
        let same = vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)];
        assert_eq!(select_waypoint(&field(vec![0.5, 0.5], same), &Vec3::zeros()), Ok(0));
        assert_eq!(select_waypoint(&field(vec![], vec![]), &Vec3::zeros()), Err(ValueMapError::EmptyField));
    }

    #[test]
    fn weights_default_table() {
        let w = ValueWeights::default();
        assert_eq!((w.alpha_sem, w.alpha_exp, w.beta, w.lambda_sem, w.r_vis), (0.5, 0.5, 0.5, 0.5, 0.6));
        assert!(w.validate().is_ok());
        assert!(ValueWeights { beta: 1.5, ..w }.validate().is_err());
    }

    proptest! {
        #[test]
        fn index_queries_match_linear_scan(seed in any::<u64>(), n in 0usize..400, cell in 0.05..2.0f64, r in 0.0..3.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let points = pts(&mut rng, n, 5.0);
            let index = PointIndex::new(points.clone(), cell);
            for q in pts(&mut rng, 20, 8.0) {
                prop_assert_eq!(index.min_dist(&q), brute_min(&q, &points));
                let brute = points.iter().filter(|p| (*p - q).norm() <= r).count();
                prop_assert_eq!(index.count_within(&q, r), brute);
            }
        }

        #[test]
        fn shift_invariant_selection(seed in any::<u64>(), n in 1usize..200, c in -10.0..10.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let positions = pts(&mut rng, n, 3.0);
            // coarse scores so ties actually happen
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64 * 0.25).collect();
            let shifted: Vec<f64> = scores.iter().map(|s| s + c).collect();
            let robot = Vec3::zeros();
            prop_assert_eq!(
                select_waypoint(&field(scores, positions.clone()), &robot),
                select_waypoint(&field(shifted, positions), &robot)
            );
        }

        #[test]
        fn score_bounds(seed in any::<u64>(), n in 1usize..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = ValueWeights::default();
            let cands = pts(&mut rng, n, 3.0);
            let targets = TargetSets::new(pts(&mut rng, 3, 3.0), pts(&mut rng, 3, 3.0));
            let f_new = PointIndex::new(pts(&mut rng, 50, 3.0), w.r_vis);
            let s = future_aware_scores(&cands, &targets, &f_new, &w);
            for i in 0..n {
                prop_assert!((0.0..=1.0).contains(&s.semantic[i]));
                prop_assert!((0.0..=1.0).contains(&s.exploration[i]));
                prop_assert!(s.m_fa[i] >= 0.0 && s.m_fa[i] <= w.alpha_sem + w.alpha_exp);
            }
        }

        #[test]
        fn semantic_monotone_towards_real_target(seed in any::<u64>(), t in 0.0..1.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = ValueWeights::default();
            let real = pts(&mut rng, 4, 3.0);
            let targets = TargetSets::new(real.clone(), vec![]);
            let g = pts(&mut rng, 1, 3.0)[0];
            let nearest = real.iter().min_by(|a, b| (*a - g).norm().total_cmp(&(*b - g).norm())).unwrap();
            let closer = g + (nearest - g) * t;
            prop_assert!(semantic_score(&closer, &targets, &w) >= semantic_score(&g, &targets, &w));
        }
    }
}
