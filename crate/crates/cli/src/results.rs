//! `results.csv` rows and the per-scenario report table.

use std::fmt::Write as _;

use fanav::simworld::{metrics, spl_term, EpisodeResult, MetricRow, Metrics, Scenario};
use thiserror::Error;

pub const RESULTS_HEADER: &str = "episode_id,scenario,success,steps,L,Lstar,spl_term,dtg,seed";

#[derive(Debug, Error, Clone, PartialEq)]
#[error("results line {line}: {reason}")]
pub struct ResultsError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub episode_id: usize,
    pub scenario: Scenario,
    pub success: bool,
    pub steps: usize,
    pub path_length: f64,
    pub shortest_path: f64,
    pub spl_term: f64,
    pub dtg: f64,
    pub seed: u64,
}

impl ResultRow {
    pub fn from_episode(episode_id: usize, scenario: Scenario, seed: u64, r: &EpisodeResult) -> Self {
        Self {
            episode_id,
            scenario,
            success: r.success,
            steps: r.steps,
            path_length: r.path_length,
            shortest_path: r.shortest_path,
            spl_term: spl_term(r.success, r.path_length, r.shortest_path),
            dtg: r.dtg,
            seed,
        }
    }

    pub fn metric_row(&self) -> MetricRow {
        MetricRow { success: self.success, path_length: self.path_length, shortest_path: self.shortest_path, dtg: self.dtg }
    }
}

pub fn results_to_string(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.episode_id,
            r.scenario,
            u8::from(r.success),
            r.steps,
            r.path_length,
            r.shortest_path,
            r.spl_term,
            r.dtg,
            r.seed
        )
        .expect("writing to a String");
    }
    out
}

pub fn parse_results(text: &str) -> Result<Vec<ResultRow>, ResultsError> {
    let err = |line: usize, reason: String| ResultsError { line, reason };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == RESULTS_HEADER => {}
        Some(h) => return Err(err(1, format!("expected header `{RESULTS_HEADER}`, found `{h}`"))),
        None => return Err(err(1, "empty file".into())),
    }
    let mut rows = Vec::new();
    for (i, raw) in lines.enumerate() {
        let line = i + 2;
        let l = raw.trim_end_matches('\r');
        if l.is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 9 {
            return Err(err(line, format!("expected 9 fields, found {}", f.len())));
        }
        let float = |s: &str, what: &str| -> Result<f64, ResultsError> {
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
                _ => Err(err(line, format!("bad {what} `{s}`"))),
            }
        };
        let int = |s: &str, what: &str| s.parse::<usize>().map_err(|_| err(line, format!("bad {what} `{s}`")));
        rows.push(ResultRow {
            episode_id: int(f[0], "episode_id")?,
            scenario: f[1].parse().map_err(|e: String| err(line, e))?,
            success: match f[2] {
                "1" | "true" => true,
                "0" | "false" => false,
                s => return Err(err(line, format!("bad success flag `{s}`"))),
            },
            steps: int(f[3], "steps")?,
            path_length: float(f[4], "L")?,
            shortest_path: float(f[5], "Lstar")?,
            spl_term: float(f[6], "spl_term")?,
            dtg: float(f[7], "dtg")?,
            seed: f[8].parse().map_err(|_| err(line, format!("bad seed `{}`", f[8])))?,
        });
    }
    Ok(rows)
}

/// Metrics per scenario (in canonical order) followed by the overall line.
pub fn summarize(rows: &[ResultRow]) -> Vec<(String, Metrics)> {
    let mut out = Vec::new();
    for s in Scenario::ALL {
        let sub: Vec<MetricRow> = rows.iter().filter(|r| r.scenario == s).map(ResultRow::metric_row).collect();
        if let Ok(m) = metrics(&sub) {
            out.push((s.name().to_string(), m));
        }
    }
    let all: Vec<MetricRow> = rows.iter().map(ResultRow::metric_row).collect();
    if let Ok(m) = metrics(&all) {
        out.push(("overall".to_string(), m));
    }
    out
}

pub fn report_table(rows: &[ResultRow]) -> String {
    let mut out = format!("{:<10} {:>8} {:>10} {:>10} {:>10}\n", "scenario", "episodes", "SR", "SPL", "DTG");
    for (name, m) in summarize(rows) {
        writeln!(out, "{:<10} {:>8} {:>10.6} {:>10.6} {:>10.6}", name, m.n, m.sr, m.spl, m.dtg).expect("writing to a String");
    }
    out
}
