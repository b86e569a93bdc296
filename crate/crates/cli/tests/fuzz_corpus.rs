//! Replays the checked-in fuzz corpora through the same entry points the
//! fuzz targets exercise.

use std::fs;
use std::path::PathBuf;

use fanav::gsscene::{parse_csv, to_csv_string};
use fanav::simworld::{parse_snapshot, parse_trace, trace_to_string};
use fanav_cli::config::Config;
use fanav_cli::ppm::{render_snapshot, to_ppm};
use fanav_cli::results::{parse_results, report_table};

fn corpus(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "empty corpus {target}");
    out
}

fn texts(target: &str) -> Vec<(PathBuf, String)> {
    corpus(target).into_iter().filter_map(|(p, b)| String::from_utf8(b).ok().map(|t| (p, t))).collect()
}

#[test]
fn scene_csv() {
    let mut accepted = 0;
    for (p, text) in texts("scene_csv") {
        if let Ok(scene) = parse_csv(&text) {
            accepted += 1;
            let again = parse_csv(&to_csv_string(&scene)).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            assert_eq!(again.gaussians, scene.gaussians, "{}", p.display());
        }
    }
    assert!(accepted > 0);
}

#[test]
fn config() {
    let mut accepted = 0;
    for (p, text) in texts("config") {
        if let Ok(cfg) = Config::parse(&text, "corpus") {
            accepted += 1;
            let dump = cfg.dump();
            let again = Config::parse(&dump, "dump").unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            assert_eq!(again.dump(), dump);
            let _ = cfg.sim_config();
        }
    }
    assert!(accepted > 0);
}

#[test]
fn results_csv() {
    for (_, text) in texts("results_csv") {
        if let Ok(rows) = parse_results(&text) {
            let _ = report_table(&rows);
        }
    }
}

#[test]
fn trace_csv() {
    let mut accepted = 0;
    for (_, text) in texts("trace_csv") {
        if let Ok(records) = parse_trace(&text) {
            accepted += 1;
            assert_eq!(parse_trace(&trace_to_string(&records)).unwrap().len(), records.len());
        }
    }
    assert!(accepted > 0);
}

#[test]
fn snapshot_csv() {
    let mut accepted = 0;
    for (_, text) in texts("snapshot_csv") {
        if let Ok(snap) = parse_snapshot(&text) {
            accepted += 1;
            assert!(to_ppm(&render_snapshot(&snap)).starts_with("P3\n"));
        }
    }
    assert!(accepted > 0);
}
