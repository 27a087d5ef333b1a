//! Black-box tests of the binary: exit codes, artifacts, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_recurrence-lab"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("recurrence-lab-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

const SMALL_SHIFT: &str = r#"{
  "system": { "kind": "full_shift", "probs": [0.5, 0.5] },
  "seed": 3,
  "orbit_len": 4000,
  "sample_count": 12,
  "n_ladder": [4, 5, 6, 7, 8, 9, 10],
  "eps_ladder": [0.5, 0.25]
}"#;

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn missing_config_is_a_config_error() {
    let out = run(&["entropy"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tmp_dir("badcfg");
    let cfg = write_config(&dir, r#"{"system": {"kind": "full_shift"}}"#);
    let out = run(&["entropy", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tmp_dir("junkcfg");
    let body = SMALL_SHIFT.replacen('{', "{\n  \"extra\": 1,", 1);
    let cfg = write_config(&dir, &body);
    let out = run(&["entropy", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn entropy_run_writes_artifacts() {
    let dir = tmp_dir("entropy");
    let cfg = write_config(&dir, SMALL_SHIFT);
    let out_dir = dir.join("out");
    let out = run(&[
        "entropy",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("grids.csv")).unwrap();
    assert!(csv.starts_with("sample_id,n,eps,R,S,censored_R,censored_S\n"));
    assert!(!csv.contains('\r'));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("entropy_report.json")).unwrap())
            .unwrap();
    assert!(report["entropy"]["extrapolated"].is_number());
    assert_eq!(report["katok"]["quantity"], "entropy_katok");
}

#[test]
fn same_seed_is_byte_identical_and_seed_override_changes_output() {
    let dir = tmp_dir("seeds");
    let cfg = write_config(&dir, SMALL_SHIFT);
    let run_to = |name: &str, extra: &[&str]| -> Vec<u8> {
        let out_dir = dir.join(name);
        let mut args = vec![
            "minimal-return",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0));
        fs::read(out_dir.join("minimal_return_report.json")).unwrap()
    };
    let a = run_to("a", &[]);
    let b = run_to("b", &[]);
    let c = run_to("c", &["--seed", "99"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn plot_renders_csv_and_rejects_empty() {
    let dir = tmp_dir("plot");
    let cfg = write_config(&dir, SMALL_SHIFT);
    let out_dir = dir.join("out");
    let out = run(&[
        "entropy",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = out_dir.join("grids.csv");
    let plot_dir = dir.join("plots");
    let out = run(&[
        "plot",
        csv.to_str().unwrap(),
        "--out",
        plot_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = fs::read_to_string(plot_dir.join("grids.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("<polyline"));
    assert!(svg.contains("slope="));

    // Header-only CSV: error out, write nothing.
    let empty = dir.join("empty.csv");
    fs::write(&empty, "sample_id,n,eps,R,S,censored_R,censored_S\n").unwrap();
    let plot_dir2 = dir.join("plots2");
    let out = run(&[
        "plot",
        empty.to_str().unwrap(),
        "--out",
        plot_dir2.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!plot_dir2.join("grids.svg").exists());
}

#[test]
fn inequalities_run_passes_on_the_doubling_map() {
    let dir = tmp_dir("ineq");
    let cfg = write_config(
        &dir,
        r#"{
  "system": { "kind": "circle_expanding", "degree": 2 },
  "seed": 5,
  "orbit_len": 200000,
  "sample_count": 60,
  "n_ladder": [5, 6, 7, 8, 9, 10, 11, 12],
  "eps_ladder": [0.125, 0.0625, 0.03125],
  "r_ladder": [0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625, 0.001953125]
}"#,
    );
    let out_dir = dir.join("out");
    let out = run(&[
        "inequalities",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let verdicts: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("verdicts.json")).unwrap()).unwrap();
    let arr = verdicts.as_array().unwrap();
    assert_eq!(arr.len(), 8);
    assert!(arr.iter().all(|v| v["status"] != "FAIL"));
}
