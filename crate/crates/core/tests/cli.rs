mod common;

use std::process::Command;

use fgs_core::cli::{run, EXIT_FAILURE, EXIT_IO, EXIT_OK, EXIT_USAGE};

use common::data_root;

fn fgs(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("fgs").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn data(rel: &str) -> String {
    data_root().join(rel).display().to_string()
}

#[test]
fn plan_prints_one_action_per_line() {
    let scenario = data("benchmarks/woodworking_hammer_02.toml");
    let (code, out, err) = fgs(&["plan", "--scenario", &scenario]);
    assert_eq!(code, EXIT_OK, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert!(!lines.is_empty());
    let join = lines.iter().find(|l| l.starts_with("join-hammer ")).expect("plan builds a hammer");
    let s = fgs_core::perception::load_scenario(std::path::Path::new(&scenario)).unwrap();
    assert_eq!(*join, format!("join-hammer {} {}", s.gt().action_part, s.gt().grasp_part));
    assert!(err.contains("nodes expanded"));
}

#[test]
fn plan_from_explicit_files_without_features() {
    let (code, out, _) = fgs(&[
        "plan",
        "--domain",
        &data("domains/cooking.pddl"),
        "--problem",
        &data("problems/cooking_ladle.pddl"),
        "--features",
        "off",
        "--algorithm",
        "wastar",
        "--heuristic",
        "ff",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.lines().any(|l| l.starts_with("join-ladle ")));
}

#[test]
fn exit_codes_follow_the_error_kind() {
    assert_eq!(fgs(&[]).0, EXIT_USAGE);
    assert_eq!(fgs(&["plan", "--algorithm", "dfs", "--scenario", &data("benchmarks/cooking_ladle_01.toml")]).0, EXIT_USAGE);
    assert_eq!(fgs(&["plan", "--features", "on", "--domain", &data("domains/cooking.pddl"), "--problem", &data("problems/cooking_ladle.pddl")]).0, EXIT_USAGE);
    let (code, _, err) = fgs(&["plan", "--scenario", "/nonexistent/case.toml"]);
    assert_eq!(code, EXIT_IO, "{err}");
    let (code, _, err) = fgs(&["plan", "--scenario", &data("benchmarks/cooking_ladle_01.toml"), "--weight", "0.5"]);
    assert_eq!(code, EXIT_USAGE, "{err}");
    let (code, _, err) = fgs(&["plan", "--scenario", &data("benchmarks/cooking_ladle_01.toml"), "--node-budget", "3"]);
    assert_eq!(code, EXIT_FAILURE);
    assert!(err.contains("node budget"), "{err}");
    let (code, out, _) = fgs(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("bench"));
}

#[test]
fn malformed_pddl_is_a_usage_error_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pddl");
    std::fs::write(&bad, "(define (domain d)\n  (:requirements :fluents))").unwrap();
    let (code, _, err) = fgs(&["validate", "--domain", bad.to_str().unwrap(), "--problem", &data("problems/cooking_ladle.pddl")]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("2:"), "{err}");
}

#[test]
fn validate_reports_sizes() {
    let (code, out, _) = fgs(&["validate", "--scenario", &data("adaptability/cleaning_adapt_03.toml")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("(180 tool)"), "{out}");
    assert!(out.contains("scenario cleaning_adapt_03 (10 objects)"), "{out}");
}

#[test]
fn episode_writes_summary_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let summary = dir.path().join("s.json");
    let (code, _, err) = fgs(&[
        "episode",
        "--scenario",
        &data("benchmarks/cleaning_rake_04.toml"),
        "--features",
        "off",
        "--budget",
        "2",
        "--trace",
        trace.to_str().unwrap(),
        "--out",
        summary.to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    if v["success"] == true {
        assert_eq!(code, EXIT_OK);
    } else {
        assert_eq!(code, EXIT_FAILURE, "{err}");
        assert_eq!(v["end"], "budget_reached");
        assert_eq!(v["failed_attempts"], 2);
    }
    let trace = std::fs::read_to_string(&trace).unwrap();
    assert!(trace.lines().last().unwrap().contains("\"event\":\"end\""));
}

#[test]
fn generate_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gen");
    let (code, _, err) =
        fgs(&["generate", "--task", "cooking", "--tool", "spatula", "--cases", "2", "--seed", "5", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let first = out.join("cooking_spatula_01.toml");
    assert!(out.join("cooking_spatula_02.toml").exists());
    assert_eq!(fgs(&["validate", "--scenario", first.to_str().unwrap()]).0, EXIT_OK);
    assert_eq!(fgs(&["generate", "--task", "baking", "--out-dir", out.to_str().unwrap()]).0, EXIT_USAGE);
}

#[test]
fn bench_reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("r{i}.csv"));
        let args = ["bench", "--experiment", "baselines", "--generated", "--cases", "1", "--seed", "3", "--out", path.to_str().unwrap()];
        let (code, _, err) = fgs(&args);
        assert_eq!(code, EXIT_OK, "{err}");
        reports.push(std::fs::read(&path).unwrap());
        reports.push(std::fs::read(dir.path().join(format!("r{i}_budget.csv"))).unwrap());
    }
    assert_eq!(reports[0], reports[2]);
    assert_eq!(reports[1], reports[3]);
    let text = String::from_utf8(reports[0].clone()).unwrap();
    assert!(text.starts_with(&fgs_core::bench::METRICS_HEADER.join(",")), "{text}");
    assert!(text.contains("FS+H"));
}

#[test]
fn binary_runs_end_to_end() {
    let out = Command::new(env!("CARGO_BIN_EXE_fgs"))
        .args(["plan", "--scenario", &data("benchmarks/cooking_spatula_03.toml"), "--algorithm", "ehc", "--heuristic", "ff"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("join-spatula "));
    let bad = Command::new(env!("CARGO_BIN_EXE_fgs")).arg("frobnicate").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
}
