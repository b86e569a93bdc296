//! 2D occupancy grids, 8-connected A* and geodesic distance fields.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::Vec3;

/// Axis-aligned raster over the xy plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x0: f64,
    pub y0: f64,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Grid covering `[min, max]` (xy) plus `margin` on every side.
    pub fn covering(min: (f64, f64), max: (f64, f64), cell: f64, margin: f64) -> Self {
        assert!(cell > 0.0);
        let x0 = min.0 - margin;
        let y0 = min.1 - margin;
        let nx = (((max.0 + margin - x0) / cell).ceil() as usize).max(1);
        let ny = (((max.1 + margin - y0) / cell).ceil() as usize).max(1);
        Self { x0, y0, cell, nx, ny }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let ix = ((x - self.x0) / self.cell).floor();
        let iy = ((y - self.y0) / self.cell).floor();
        if ix >= 0.0 && iy >= 0.0 && (ix as usize) < self.nx && (iy as usize) < self.ny {
            Some((ix as usize, iy as usize))
        } else {
            None
        }
    }

    pub fn cell_of(&self, p: &Vec3) -> Option<usize> {
        self.coords(p.x, p.y).map(|(ix, iy)| iy * self.nx + ix)
    }

    pub fn split(&self, i: usize) -> (usize, usize) {
        (i % self.nx, i / self.nx)
    }

    pub fn center(&self, i: usize) -> Vec3 {
        let (ix, iy) = self.split(i);
        Vec3::new(self.x0 + (ix as f64 + 0.5) * self.cell, self.y0 + (iy as f64 + 0.5) * self.cell, 0.0)
    }

    /// 8-neighbourhood of cell `i`, with step lengths.
    pub fn neighbours(&self, i: usize) -> impl Iterator<Item = (usize, f64, (i64, i64))> + '_ {
        let (ix, iy) = self.split(i);
        const D: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        D.iter().filter_map(move |&(dx, dy)| {
            let x = ix as i64 + dx;
            let y = iy as i64 + dy;
            if x < 0 || y < 0 || x >= self.nx as i64 || y >= self.ny as i64 {
                return None;
            }
            let len = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 } * self.cell;
            Some((y as usize * self.nx + x as usize, len, (dx, dy)))
        })
    }

    /// Calls `f` for every cell whose center lies within `r` (xy) of `p`.
    pub fn for_cells_within(&self, p: &Vec3, r: f64, mut f: impl FnMut(usize)) {
        let lo_x = (((p.x - r - self.x0) / self.cell) - 0.5).ceil().max(0.0) as usize;
        let lo_y = (((p.y - r - self.y0) / self.cell) - 0.5).ceil().max(0.0) as usize;
        let hi_x = (((p.x + r - self.x0) / self.cell) - 0.5).floor();
        let hi_y = (((p.y + r - self.y0) / self.cell) - 0.5).floor();
        if hi_x < 0.0 || hi_y < 0.0 {
            return;
        }
        let hi_x = (hi_x as usize).min(self.nx.saturating_sub(1));
        let hi_y = (hi_y as usize).min(self.ny.saturating_sub(1));
        for iy in lo_y..=hi_y {
            for ix in lo_x..=hi_x {
                let i = iy * self.nx + ix;
                let c = self.center(i);
                if (c.x - p.x).powi(2) + (c.y - p.y).powi(2) <= r * r {
                    f(i);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Unknown,
    Free,
    Occupied,
}

/// Planning grid: hard obstacles plus a soft clearance band.
#[derive(Debug, Clone)]
pub struct PlanGrid {
    pub spec: GridSpec,
    pub state: Vec<CellState>,
    /// Cells within the robot radius of an occupied cell.
    pub inflated: Vec<bool>,
}

/// Extra cost multiplier for moving through the clearance band.
pub const CLEARANCE_PENALTY: f64 = 5.0;

impl PlanGrid {
    pub fn new(spec: GridSpec, state: Vec<CellState>, robot_radius: f64) -> Self {
        let mut inflated = vec![false; spec.len()];
        for (i, st) in state.iter().enumerate() {
            if *st == CellState::Occupied {
                spec.for_cells_within(&spec.center(i), robot_radius, |j| inflated[j] = true);
            }
        }
        Self { spec, state, inflated }
    }

    pub fn passable(&self, i: usize) -> bool {
        self.state[i] != CellState::Occupied
    }

    fn step_cost(&self, to: usize, len: f64) -> f64 {
        if self.inflated[to] {
            len * CLEARANCE_PENALTY
        } else {
            len
        }
    }

    /// Diagonal moves may not cut between two blocked orthogonal neighbours.
    fn can_step(&self, from: usize, to: usize, d: (i64, i64), ok: &impl Fn(usize) -> bool) -> bool {
        if !ok(to) {
            return false;
        }
        if d.0 != 0 && d.1 != 0 {
            let (fx, fy) = self.spec.split(from);
            let a = fy * self.spec.nx + (fx as i64 + d.0) as usize;
            let b = (fy as i64 + d.1) as usize * self.spec.nx + fx;
            return ok(a) || ok(b);
        }
        true
    }

    /// Cells reachable from `start`; the start cell always counts.
    pub fn reachable(&self, start: usize) -> Vec<bool> {
        let ok = |i: usize| self.passable(i);
        let mut seen = vec![false; self.spec.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for (j, _, d) in self.spec.neighbours(i) {
                if !seen[j] && self.can_step(i, j, d, &ok) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// Cheapest 8-connected path from `start` to `goal`, both inclusive.
    pub fn astar(&self, start: usize, goal: usize) -> Option<Vec<usize>> {
        if start != goal && !self.passable(goal) {
            return None;
        }
        let ok = |i: usize| self.passable(i);
        let goal_c = self.spec.center(goal);
        let h = |i: usize| {
            let c = self.spec.center(i);
            let (dx, dy) = ((c.x - goal_c.x).abs(), (c.y - goal_c.y).abs());
            let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
            // octile distance, admissible because every step costs at least its length
            hi - lo + lo * std::f64::consts::SQRT_2
        };
        let n = self.spec.len();
        let mut g = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut open = BinaryHeap::new();
        g[start] = 0.0;
        open.push(Entry { key: h(start), cell: start });
        while let Some(Entry { cell, .. }) = open.pop() {
            if closed[cell] {
                continue;
            }
            if cell == goal {
                let mut path = vec![goal];
                let mut c = goal;
                while c != start {
                    c = parent[c];
                    path.push(c);
                }
                path.reverse();
                return Some(path);
            }
            closed[cell] = true;
            for (j, len, d) in self.spec.neighbours(cell) {
                if closed[j] || !self.can_step(cell, j, d, &ok) {
                    continue;
                }
                let cand = g[cell] + self.step_cost(j, len);
                if cand < g[j] {
                    g[j] = cand;
                    parent[j] = cell;
                    open.push(Entry { key: cand + h(j), cell: j });
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    key: f64,
    cell: usize,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    // min-heap on key, then on cell index
    fn cmp(&self, o: &Self) -> Ordering {
        o.key.total_cmp(&self.key).then_with(|| o.cell.cmp(&self.cell))
    }
}

/// Ground-truth traversability: a cell is blocked when an obstacle lies within
/// the robot radius of its center.
#[derive(Debug, Clone)]
pub struct TrueGrid {
    pub spec: GridSpec,
    pub blocked: Vec<bool>,
}

impl TrueGrid {
    pub fn new<'a>(spec: GridSpec, obstacles: impl IntoIterator<Item = &'a Vec3>, robot_radius: f64) -> Self {
        let mut blocked = vec![false; spec.len()];
        for p in obstacles {
            spec.for_cells_within(p, robot_radius, |i| blocked[i] = true);
        }
        Self { spec, blocked }
    }

    pub fn is_blocked_at(&self, p: &Vec3) -> bool {
        self.spec.cell_of(p).is_none_or(|i| self.blocked[i])
    }

    /// Multi-source Dijkstra distances (meters) from the free `sources`.
    pub fn distance_field(&self, sources: &[usize]) -> Vec<f64> {
        let ok = |i: usize| !self.blocked[i];
        let n = self.spec.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            if ok(s) && dist[s] > 0.0 {
                dist[s] = 0.0;
                heap.push(Entry { key: 0.0, cell: s });
            }
        }
        while let Some(Entry { key, cell }) = heap.pop() {
            if key > dist[cell] {
                continue;
            }
            let (fx, fy) = self.spec.split(cell);
            for (j, len, d) in self.spec.neighbours(cell) {
                if !ok(j) {
                    continue;
                }
                if d.0 != 0 && d.1 != 0 {
                    let a = fy * self.spec.nx + (fx as i64 + d.0) as usize;
                    let b = (fy as i64 + d.1) as usize * self.spec.nx + fx;
                    if !ok(a) && !ok(b) {
                        continue;
                    }
                }
                let cand = key + len;
                if cand < dist[j] {
                    dist[j] = cand;
                    heap.push(Entry { key: cand, cell: j });
                }
            }
        }
        dist
    }

    /// Free cells whose centers lie within `radius` (xy) of any point in `targets`.
    pub fn goal_cells<'a>(&self, targets: impl IntoIterator<Item = &'a Vec3>, radius: f64) -> Vec<usize> {
        let mut mark = vec![false; self.spec.len()];
        for t in targets {
            self.spec.for_cells_within(t, radius, |i| mark[i] = true);
        }
        (0..self.spec.len()).filter(|&i| mark[i] && !self.blocked[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_grid(n: usize) -> PlanGrid {
        let spec = GridSpec { x0: 0.0, y0: 0.0, cell: 0.1, nx: n, ny: n };
        PlanGrid::new(spec, vec![CellState::Free; n * n], 0.0)
    }

    #[test]
    fn astar_straight_and_diagonal() {
        let g = open_grid(10);
        let p = g.astar(0, 9).unwrap();
        assert_eq!(p.len(), 10);
        let p = g.astar(0, 99).unwrap();
        assert_eq!(p.len(), 10, "pure diagonal");
        assert_eq!(g.astar(5, 5), Some(vec![5]));
    }

    #[test]
    fn astar_detours_around_wall() {
        let n = 10;
        let mut g = open_grid(n);
        for y in 0..9 {
            g.state[y * n + 5] = CellState::Occupied;
        }
        let g = PlanGrid::new(g.spec, g.state, 0.0);
        let p = g.astar(0, 9).unwrap();
        assert!(p.iter().all(|&c| g.passable(c)));
        assert!(p.iter().any(|&c| g.spec.split(c).1 == 9));
        // sealed off
        let mut s = g.state.clone();
        s[9 * n + 5] = CellState::Occupied;
        let g = PlanGrid::new(g.spec, s, 0.0);
        assert_eq!(g.astar(0, 9), None);
        assert!(!g.reachable(0)[9]);
    }

    #[test]
    fn astar_cost_matches_dijkstra() {
        let n = 12;
        let mut state = vec![CellState::Free; n * n];
        for i in [15, 16, 17, 29, 41, 53, 54, 70, 71, 72, 73, 100, 101] {
            state[i] = CellState::Occupied;
        }
        let spec = GridSpec { x0: 0.0, y0: 0.0, cell: 0.1, nx: n, ny: n };
        let g = PlanGrid::new(spec, state.clone(), 0.0);
        let blocked: Vec<bool> = state.iter().map(|s| *s == CellState::Occupied).collect();
        let t = TrueGrid { spec, blocked };
        let field = t.distance_field(&[n * n - 1]);
        let p = g.astar(0, n * n - 1).unwrap();
        let len: f64 = p.windows(2).map(|w| (g.spec.center(w[0]) - g.spec.center(w[1])).norm()).sum();
        assert!((len - field[0]).abs() < 1e-9, "{len} vs {}", field[0]);
    }

    #[test]
    fn cells_within_radius() {
        let spec = GridSpec { x0: 0.0, y0: 0.0, cell: 0.1, nx: 20, ny: 20 };
        let p = Vec3::new(1.0, 1.0, 0.0);
        let mut got = vec![];
        spec.for_cells_within(&p, 0.3, |i| got.push(i));
        let brute: Vec<usize> = (0..spec.len()).filter(|&i| (spec.center(i) - p).norm() <= 0.3).collect();
        got.sort();
        assert_eq!(got, brute);
    }
}
