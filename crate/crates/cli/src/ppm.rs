//! Top-down affordance rasters as plain-text PPM.

use std::fmt::Write as _;

use fanav::simworld::Snapshot;

pub const MAP_CELL: f64 = 0.1;
const MAX_SIDE: usize = 2000;

const STOPS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Fixed 256-entry color ramp, dark purple through yellow.
pub fn ramp() -> [[u8; 3]; 256] {
    let mut out = [[0u8; 3]; 256];
    for (i, px) in out.iter_mut().enumerate() {
        let t = i as f64 / 255.0 * (STOPS.len() - 1) as f64;
        let k = (t.floor() as usize).min(STOPS.len() - 2);
        let f = t - k as f64;
        for c in 0..3 {
            px[c] = (STOPS[k][c] + (STOPS[k + 1][c] - STOPS[k][c]) * f).round() as u8;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

/// Rasterizes `m_aff` at [`MAP_CELL`] with +y pointing up the image. Each
/// cell shows the largest score inside it, min-max normalized over occupied
/// cells; the robot cell is white and the waypoint cell black.
pub fn render_snapshot(s: &Snapshot) -> Raster {
    let mut lo = (s.robot.x, s.robot.y);
    let mut hi = lo;
    for p in &s.positions {
        lo = (lo.0.min(p.x), lo.1.min(p.y));
        hi = (hi.0.max(p.x), hi.1.max(p.y));
    }
    let extent = (hi.0 - lo.0).max(hi.1 - lo.1);
    let cell = MAP_CELL.max(extent / (MAX_SIDE - 1) as f64);
    let width = ((hi.0 - lo.0) / cell).floor() as usize + 1;
    let height = ((hi.1 - lo.1) / cell).floor() as usize + 1;
    let index = |x: f64, y: f64| {
        let ix = (((x - lo.0) / cell).floor() as usize).min(width - 1);
        let iy = (((y - lo.1) / cell).floor() as usize).min(height - 1);
        (height - 1 - iy) * width + ix
    };
    let mut best: Vec<Option<f64>> = vec![None; width * height];
    for (p, &v) in s.positions.iter().zip(&s.m_aff) {
        let i = index(p.x, p.y);
        best[i] = Some(best[i].map_or(v, |b: f64| b.max(v)));
    }
    let (vmin, vmax) = best.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let ramp = ramp();
    let mut pixels: Vec<[u8; 3]> = best
        .iter()
        .map(|v| match v {
            Some(v) if vmax > vmin => ramp[(((v - vmin) / (vmax - vmin)) * 255.0).round() as usize],
            _ => ramp[0],
        })
        .collect();
    pixels[index(s.robot.x, s.robot.y)] = [255, 255, 255];
    if let Some(w) = s.waypoint {
        let p = s.positions[w];
        pixels[index(p.x, p.y)] = [0, 0, 0];
    }
    Raster { width, height, pixels }
}

pub fn to_ppm(r: &Raster) -> String {
    let mut out = format!("P3\n{} {}\n255\n", r.width, r.height);
    for row in r.pixels.chunks(r.width) {
        let line: Vec<String> = row.iter().map(|p| format!("{} {} {}", p[0], p[1], p[2])).collect();
        writeln!(out, "{}", line.join(" ")).expect("writing to a String");
    }
    out
}
