//! Line-oriented decision logs and affordance-field snapshots.

use std::fmt::Write as _;

use nalgebra::{Quaternion, UnitQuaternion};

use super::SimError;
use crate::geometry::{Pose, Vec3};
use crate::valuemap::AffordanceField;

pub const TRACE_HEADER: &str = "step,qw,qx,qy,qz,tx,ty,tz,waypoint_index,wx,wy,wz,n_nav,n_sem,n_hyp,score";
const SNAPSHOT_COLUMNS: &str = "x,y,z,m,m_fa,m_aff";

/// One decision step. `n_sem` counts observed target-labeled Gaussians,
/// `n_hyp` imagined ones.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: usize,
    /// `[w, x, y, z]`
    pub quat: [f64; 4],
    pub translation: Vec3,
    pub waypoint_index: usize,
    pub waypoint: Vec3,
    pub n_nav: usize,
    pub n_sem: usize,
    pub n_hyp: usize,
    pub score: f64,
}

impl TraceRecord {
    pub fn set_pose(&mut self, pose: &Pose) {
        let q = pose.quaternion();
        self.quat = [q.w, q.i, q.j, q.k];
        self.translation = pose.translation;
    }

    pub fn pose(&self) -> Pose {
        let [w, x, y, z] = self.quat;
        Pose::from_quaternion(UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)), self.translation)
    }
}

pub fn trace_to_string(records: &[TraceRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let [qw, qx, qy, qz] = r.quat;
        let t = r.translation;
        let w = r.waypoint;
        writeln!(
            out,
            "{},{qw},{qx},{qy},{qz},{},{},{},{},{},{},{},{},{},{},{}",
            r.step, t.x, t.y, t.z, r.waypoint_index, w.x, w.y, w.z, r.n_nav, r.n_sem, r.n_hyp, r.score
        )
        .expect("writing to a String");
    }
    out
}

fn bad(line: usize, reason: impl Into<String>) -> SimError {
    SimError::Parse { line, reason: reason.into() }
}

fn num<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T, SimError> {
    s.trim().parse().map_err(|_| bad(line, format!("bad {what} `{s}`")))
}

fn finite(s: &str, line: usize, what: &str) -> Result<f64, SimError> {
    let v: f64 = num(s, line, what)?;
    if v.is_finite() || what == "score" {
        Ok(v)
    } else {
        Err(bad(line, format!("{what} must be finite")))
    }
}

/// Data lines after the header, skipping a single trailing newline.
fn body_lines<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, &'a str)>, SimError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == header => {}
        Some(h) => return Err(bad(1, format!("expected header `{header}`, found `{h}`"))),
        None => return Err(bad(1, "empty input")),
    }
    Ok(lines.enumerate().map(|(i, l)| (i + 2, l.trim_end_matches('\r'))))
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, SimError> {
    let mut out = Vec::new();
    for (line, l) in body_lines(text, TRACE_HEADER)? {
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 16 {
            return Err(bad(line, format!("expected 16 fields, found {}", f.len())));
        }
        let q = [finite(f[1], line, "qw")?, finite(f[2], line, "qx")?, finite(f[3], line, "qy")?, finite(f[4], line, "qz")?];
        if q.iter().map(|v| v * v).sum::<f64>() == 0.0 {
            return Err(bad(line, "zero quaternion"));
        }
        out.push(TraceRecord {
            step: num(f[0], line, "step")?,
            quat: q,
            translation: Vec3::new(finite(f[5], line, "tx")?, finite(f[6], line, "ty")?, finite(f[7], line, "tz")?),
            waypoint_index: num(f[8], line, "waypoint_index")?,
            waypoint: Vec3::new(finite(f[9], line, "wx")?, finite(f[10], line, "wy")?, finite(f[11], line, "wz")?),
            n_nav: num(f[12], line, "n_nav")?,
            n_sem: num(f[13], line, "n_sem")?,
            n_hyp: num(f[14], line, "n_hyp")?,
            score: finite(f[15], line, "score")?,
        });
    }
    Ok(out)
}

/// Affordance field of one decision step, as consumed by map rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub robot: Vec3,
    pub waypoint: Option<usize>,
    pub positions: Vec<Vec3>,
    pub m: Vec<f64>,
    pub m_fa: Vec<f64>,
    pub m_aff: Vec<f64>,
}

impl Snapshot {
    pub fn from_field(field: &AffordanceField, robot: Vec3) -> Self {
        Self {
            robot,
            waypoint: field.selected,
            positions: field.positions.clone(),
            m: field.m.clone(),
            m_fa: field.m_fa.clone(),
            m_aff: field.m_aff.clone(),
        }
    }
}

pub fn snapshot_to_string(s: &Snapshot) -> String {
    let mut out = String::new();
    writeln!(out, "robot,{},{},{}", s.robot.x, s.robot.y, s.robot.z).expect("writing to a String");
    match s.waypoint {
        Some(i) => writeln!(out, "waypoint,{i}"),
        None => writeln!(out, "waypoint,none"),
    }
    .expect("writing to a String");
    out.push_str(SNAPSHOT_COLUMNS);
    out.push('\n');
    for i in 0..s.positions.len() {
        let p = s.positions[i];
        writeln!(out, "{},{},{},{},{},{}", p.x, p.y, p.z, s.m[i], s.m_fa[i], s.m_aff[i]).expect("writing to a String");
    }
    out
}

pub fn parse_snapshot(text: &str) -> Result<Snapshot, SimError> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let robot_line = lines.next().ok_or_else(|| bad(1, "empty input"))?;
    let f: Vec<&str> = robot_line.split(',').collect();
    if f.len() != 4 || f[0] != "robot" {
        return Err(bad(1, "expected `robot,x,y,z`"));
    }
    let robot = Vec3::new(finite(f[1], 1, "x")?, finite(f[2], 1, "y")?, finite(f[3], 1, "z")?);
    let wp_line = lines.next().ok_or_else(|| bad(2, "missing waypoint line"))?;
    let waypoint = match wp_line.split_once(',') {
        Some(("waypoint", "none")) => None,
        Some(("waypoint", v)) => Some(num::<usize>(v, 2, "waypoint index")?),
        _ => return Err(bad(2, "expected `waypoint,<index>`")),
    };
    let rest: String = lines.collect::<Vec<_>>().join("\n");
    let mut s = Snapshot { robot, waypoint, positions: vec![], m: vec![], m_fa: vec![], m_aff: vec![] };
    for (line, l) in body_lines(&rest, SNAPSHOT_COLUMNS).map_err(|e| shift(e, 2))? {
        let line = line + 2;
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 6 {
            return Err(bad(line, format!("expected 6 fields, found {}", f.len())));
        }
        let v: Vec<f64> = f.iter().map(|x| finite(x, line, "value")).collect::<Result<_, _>>()?;
        s.positions.push(Vec3::new(v[0], v[1], v[2]));
        s.m.push(v[3]);
        s.m_fa.push(v[4]);
        s.m_aff.push(v[5]);
    }
    if let Some(w) = s.waypoint {
        if w >= s.positions.len() {
            return Err(bad(2, format!("waypoint index {w} out of range")));
        }
    }
    Ok(s)
}

fn shift(e: SimError, by: usize) -> SimError {
    match e {
        SimError::Parse { line, reason } => SimError::Parse { line: line + by, reason },
        other => other,
    }
}
