use std::path::Path;
use std::process::{Command, Output};

use cf_peakon_cli::io::read_csv;
use cf_peakon_cli::{exit, RunConfig};
use proptest::prelude::*;
use serde_json::Value;
use tempfile::TempDir;

const PAIR: &str = "nu=2\nbeta_plus=0.018\nx=[1,2]\nm=[5,-1]\nt_end=10\n";
const THREE: &str = "nu=0.9\nbeta_plus=0.04\nx=[-0.9,0.15,1.1]\nm=[0.8,1.7,1.2]\n";
const THREE_SLOW: &str = "nu=0.9\nbeta_plus=1e-7\nx=[-0.9,0.15,1.1]\nm=[0.8,1.7,1.2]\nt_end=20\nrel_tol=1e-12\nabs_tol=1e-14\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfpeakon")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> u8 {
    out.status.code().expect("exited normally") as u8
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn setup(config: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("run.cfg"), config).unwrap();
    dir
}

#[test]
fn colliding_pair_exits_with_the_collision_code() {
    let dir = setup(PAIR);
    let out = run(dir.path(), &["simulate", "--config", "run.cfg", "--out", "o", "--format", "json"]);
    assert_eq!(code(&out), exit::COLLISION, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["termination"], "collision");
    assert!(dir.path().join("o/trajectory.json").exists());
}

#[test]
fn single_peakon_runs_cleanly_and_its_csv_reads_back() {
    let dir = setup("nu=1\nbeta_plus=0.01\nx=[0]\nm=[1.5]\nt_end=2\n");
    let out = run(dir.path(), &["simulate", "--config", "run.cfg", "--out", "o"]);
    assert_eq!(code(&out), exit::SUCCESS);
    let (header, rows) = read_csv(&dir.path().join("o/trajectory.csv")).unwrap();
    assert_eq!(header, ["t", "x_1", "m_1"]);
    let last = rows.last().unwrap();
    assert!((last[0] - 2.0).abs() < 1e-12);
    assert!(rows.iter().all(|r| (r[2] - 1.5).abs() < 1e-12));
    // the single peakon travels at constant speed
    let speed = (last[1] - rows[0][1]) / last[0];
    let mid = &rows[rows.len() / 2];
    assert!(((mid[1] - rows[0][1]) / mid[0] - speed).abs() < 1e-9);
    let (dh, drift) = read_csv(&dir.path().join("o/drift.csv")).unwrap();
    assert_eq!(dh, ["t", "drift_0", "drift_1"]);
    assert_eq!(drift.len(), rows.len());
}

#[test]
fn same_sign_three_body_conserves_its_invariants() {
    let dir = setup(THREE_SLOW);
    let out = run(dir.path(), &["simulate", "--config", "run.cfg", "--out", "o", "--format", "json"]);
    assert_eq!(code(&out), exit::SUCCESS, "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(&out);
    assert!(report["max_invariant_drift"].as_f64().unwrap() < 1e-8, "{report}");
    let table: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/drift.json")).unwrap()).unwrap();
    assert_eq!(table["columns"][0], "t");
}

#[test]
fn escaping_peakon_is_reported_as_blowup() {
    let dir = setup(THREE);
    let out = run(dir.path(), &["simulate", "--config", "run.cfg", "--out", "o", "--t-end", "20"]);
    assert_eq!(code(&out), exit::BLOWUP);
    assert!(String::from_utf8_lossy(&out.stdout).contains("escaped"));
}

#[test]
fn spectrum_reports_genus_and_sheet() {
    let dir = setup(THREE);
    let report = json(&run(dir.path(), &["spectrum", "--config", "run.cfg", "--format", "json"]));
    assert_eq!(report["genus"], 2);
    assert_eq!(report["sheet"], "lower");
    assert_eq!(report["branch_points"].as_array().unwrap().len(), 6);
    assert!((report["trace_coefficients"][2].as_f64().unwrap() - 3.7).abs() < 1e-14);
    assert!(report["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn vanishing_beta_plus_warns_about_the_square_curve() {
    let dir = setup("nu=0.9\nbeta_plus=0\nx=[-0.9,0.15,1.1]\nm=[0.8,1.7,1.2]\n");
    let report = json(&run(dir.path(), &["spectrum", "--config", "run.cfg", "--format", "json"]));
    assert!(report["warnings"][0].as_str().unwrap().contains("perfect-square"), "{report}");
}

#[test]
fn roundtrip_recovers_the_configuration() {
    let dir = setup(THREE);
    let out = run(dir.path(), &["roundtrip", "--config", "run.cfg", "--out", "o", "--format", "json"]);
    assert_eq!(code(&out), exit::SUCCESS);
    let report = json(&out);
    assert_eq!(report["pass"], true);
    for key in ["position_errors", "mass_errors"] {
        assert!(report[key].as_array().unwrap().iter().all(|e| e.as_f64().unwrap() < 1e-9), "{report}");
    }

    let inv = json(&run(dir.path(), &["invert", "--weyl", "o/weyl.txt", "--format", "json"]));
    let cfg = RunConfig::parse(THREE).unwrap();
    for (key, want) in [("x", &cfg.x), ("m", &cfg.m)] {
        for (got, want) in inv[key].as_array().unwrap().iter().zip(want) {
            assert!((got.as_f64().unwrap() - want).abs() < 1e-9, "{key}: {got} vs {want}");
        }
    }
}

#[test]
fn roundtrip_works_without_the_growing_mode() {
    let dir = setup("nu=1.2\nbeta_plus=0\nx=[-0.5,0.7]\nm=[1.1,0.6]\n");
    let out = run(dir.path(), &["roundtrip", "--config", "run.cfg", "--out", "o"]);
    assert_eq!(code(&out), exit::SUCCESS, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn mixed_signs_are_refused_by_roundtrip() {
    let dir = setup(PAIR);
    let out = run(dir.path(), &["roundtrip", "--config", "run.cfg"]);
    assert_eq!(code(&out), exit::INPUT);
    assert!(String::from_utf8_lossy(&out.stderr).contains("same-sign required"));
}

#[test]
fn truncated_weyl_file_is_an_input_error() {
    let dir = setup(THREE);
    assert_eq!(code(&run(dir.path(), &["roundtrip", "--config", "run.cfg", "--out", "o"])), exit::SUCCESS);
    let text = std::fs::read_to_string(dir.path().join("o/weyl.txt")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let short = format!("{}\n{}\n", lines[0].replace("order=6", "order=4"), lines[1..5].join("\n"));
    std::fs::write(dir.path().join("short.txt"), short).unwrap();
    let out = run(dir.path(), &["invert", "--weyl", "short.txt"]);
    assert_eq!(code(&out), exit::INPUT);
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient coefficients"));
}

#[test]
fn corrupted_weyl_file_fails_reconstruction() {
    let dir = setup(THREE);
    assert_eq!(code(&run(dir.path(), &["roundtrip", "--config", "run.cfg", "--out", "o"])), exit::SUCCESS);
    let text = std::fs::read_to_string(dir.path().join("o/weyl.txt")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    // flip the sign of the second coefficient so the moments are no longer positive
    lines[2] = match lines[2].strip_prefix('-') {
        Some(rest) => rest.to_string(),
        None => format!("-{}", lines[2]),
    };
    std::fs::write(dir.path().join("bad.txt"), lines.join("\n")).unwrap();
    let out = run(dir.path(), &["invert", "--weyl", "bad.txt"]);
    assert_eq!(code(&out), exit::RECONSTRUCTION, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn collide_matches_the_closed_form() {
    let dir = setup(PAIR);
    let report = json(&run(dir.path(), &["collide", "--config", "run.cfg", "--format", "json"]));
    assert!(report["closed_form_gap"].as_f64().unwrap() < 1e-12, "{report}");
    assert_eq!(report["termination"], "collision");
    assert!((report["total_mass"].as_f64().unwrap() - 4.0).abs() < 1e-15);
}

#[test]
fn bad_config_names_the_line() {
    let dir = setup("nu=2\nbeta_plus=0.018\nx=[1,2\nm=[5,-1]\n");
    let out = run(dir.path(), &["spectrum", "--config", "run.cfg"]);
    assert_eq!(code(&out), exit::INPUT);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3..1e3f64, -1e-6..1e-6f64, Just(0.0)]
}

proptest! {
    #[test]
    fn config_text_round_trips(
        nu in 0.1..5.0f64,
        beta_plus in 0.0..2.0f64,
        gaps in prop::collection::vec(0.01..3.0f64, 0..5),
        start in finite(),
        masses in prop::collection::vec(0.1..4.0f64, 5),
        t_end in prop::option::of(0.1..50.0f64),
        rel_tol in prop::option::of(1e-13..1e-4f64),
    ) {
        let mut x = vec![start];
        for g in &gaps {
            x.push(x.last().unwrap() + g);
        }
        let m = masses[..x.len()].to_vec();
        let text = format!(
            "nu={nu:?}\nbeta_plus={beta_plus:?}\nx=[{}]\nm=[{}]\n{}{}",
            x.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(","),
            m.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(","),
            t_end.map(|v| format!("t_end={v:?}\n")).unwrap_or_default(),
            rel_tol.map(|v| format!("rel_tol={v:?}\n")).unwrap_or_default(),
        );
        let cfg = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(RunConfig::parse(&cfg.to_string()).unwrap(), cfg.clone());
        prop_assert_eq!(cfg.x, x);
    }
}
