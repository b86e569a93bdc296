//! Suite runner, report and map rendering behind the `fanav` binary.

pub mod config;
pub mod ppm;
pub mod results;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use fanav::simworld::{
    generate_scene_suite, parse_snapshot, run_episode, snapshot_to_string, trace_to_string, GenParams, ModelProvider,
    OracleProvider,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::results::{parse_results, report_table, results_to_string, ResultRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {reason}", path.display())]
    Data { path: PathBuf, reason: String },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Data { .. } => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub episodes: Option<usize>,
    pub scenario: Option<String>,
    pub sets: Vec<String>,
    pub jobs: usize,
}

/// File defaults, then `--set` overrides, then the dedicated flags.
pub fn effective_config(opts: &RunOptions) -> Result<Config, CliError> {
    let text = fs::read_to_string(&opts.config).map_err(io_err(&opts.config))?;
    let mut cfg = Config::parse(&text, &opts.config.display().to_string())?;
    for kv in &opts.sets {
        cfg.apply_override(kv)?;
    }
    if let Some(s) = opts.seed {
        cfg.set("seed", &s.to_string(), "--seed")?;
    }
    if let Some(n) = opts.episodes {
        cfg.set("episodes", &n.to_string(), "--episodes")?;
    }
    if let Some(s) = &opts.scenario {
        cfg.set("scenario", s, "--scenario")?;
    }
    Ok(cfg)
}

pub fn trace_file_name(episode_id: usize) -> String {
    format!("trace_{episode_id:04}.csv")
}

pub fn snapshot_file_name(episode_id: usize) -> String {
    format!("snapshot_{episode_id:04}.csv")
}

/// Runs every configured suite and writes results, traces and snapshots
/// into `opts.out`. Returns the rows written to `results.csv`.
pub fn cmd_run(opts: &RunOptions) -> Result<Vec<ResultRow>, CliError> {
    let cfg = effective_config(opts)?;
    let sim = cfg.sim_config()?;
    let gen = GenParams::from(&sim);
    let mut jobs = Vec::new();
    for family in cfg.scenario.families() {
        let specs = generate_scene_suite(family, cfg.episodes, cfg.seed, &gen).map_err(|e| CliError::Runtime(e.to_string()))?;
        jobs.extend(specs);
    }

    let provider = OracleProvider { k: sim.camera, cfg: sim.oracle };
    let model: Option<&dyn ModelProvider> = if sim.imagination { Some(&provider) } else { None };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let outcomes: Vec<_> = pool.install(|| jobs.par_iter().map(|spec| run_episode(spec, &sim, model)).collect());

    fs::create_dir_all(&opts.out).map_err(io_err(&opts.out))?;
    let mut rows = Vec::with_capacity(jobs.len());
    for (id, (spec, outcome)) in jobs.iter().zip(outcomes).enumerate() {
        let result = outcome.map_err(|e| CliError::Runtime(format!("episode {id}: {e}")))?;
        write_atomic(&opts.out.join(trace_file_name(id)), &trace_to_string(&result.trace))?;
        if let Some(s) = &result.snapshot {
            write_atomic(&opts.out.join(snapshot_file_name(id)), &snapshot_to_string(s))?;
        }
        rows.push(ResultRow::from_episode(id, spec.scenario, spec.seed, &result));
    }
    write_atomic(&opts.out.join("effective_config.txt"), &cfg.dump())?;
    write_atomic(&opts.out.join("results.csv"), &results_to_string(&rows))?;
    Ok(rows)
}

/// The SR / SPL / DTG table for `in_dir/results.csv`.
pub fn cmd_report(in_dir: &Path) -> Result<String, CliError> {
    let path = in_dir.join("results.csv");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let rows = parse_results(&text).map_err(|e| CliError::Data { path: path.clone(), reason: e.to_string() })?;
    if rows.is_empty() {
        return Err(CliError::Data { path, reason: "no episode rows".into() });
    }
    Ok(report_table(&rows))
}

pub fn cmd_render_map(snapshot: &Path, out: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(snapshot).map_err(io_err(snapshot))?;
    let snap = parse_snapshot(&text).map_err(|e| CliError::Data { path: snapshot.to_path_buf(), reason: e.to_string() })?;
    write_atomic(out, &ppm::to_ppm(&ppm::render_snapshot(&snap)))
}
