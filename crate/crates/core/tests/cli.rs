use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fpl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpl")).args(args).env_remove("FPL_JOBS").output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn config(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn end_to_end_reference_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = fpl(&["--config", &config("end_to_end.json"), "--out", &s(dir.path()), "end-to-end"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&dir.path().join("end_to_end.json"));
    assert!(r["sup_distance"].as_f64().unwrap() <= 0.01);
    assert_eq!(r["exact_recovery"], true);
    assert_eq!(r["integrated"]["law"]["atoms"]["1"], "3/5");
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "end-to-end");
    assert_eq!(m["seeds"][0], 1);
    assert_eq!(m["exit_code"], 0);
}

#[test]
fn invalid_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ \"schema_version\": 1, ").unwrap();
    let out_dir = dir.path().join("out");
    let out = fpl(&["--config", &s(&bad), "--out", &s(&out_dir), "end-to-end"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());

    fs::write(&bad, r#"{ "schema_version": 1, "seed": 1, "surprise": true }"#).unwrap();
    let out = fpl(&["--config", &s(&bad), "--out", &s(&out_dir), "end-to-end"]);
    assert_eq!(out.status.code(), Some(2));
    fs::write(&bad, r#"{ "schema_version": 9 }"#).unwrap();
    let out = fpl(&["--config", &s(&bad), "--out", &s(&out_dir), "end-to-end"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn omitted_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = fpl(&[
        "--out",
        &s(&dir.path().join("f.csv")),
        "play-prob-game",
        "--painting",
        &config("reference_painting.json"),
        "--draws",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    assert!(!dir.path().join("f.csv").exists());
}

#[test]
fn reruns_have_identical_digests() {
    let dir = tempfile::tempdir().unwrap();
    for run in ["a", "b"] {
        let out = fpl(&["--config", &config("play_prob_game.json"), "--out", &s(&dir.path().join(run)), "play-prob-game"]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = json(&dir.path().join("a/manifest.json"));
    let b = json(&dir.path().join("b/manifest.json"));
    assert_eq!(a["outputs"], b["outputs"]);
    assert_eq!(a["config_hash"], b["config_hash"]);
    assert_eq!(fs::read(dir.path().join("a/freq.csv")).unwrap(), fs::read(dir.path().join("b/freq.csv")).unwrap());
}

#[test]
fn reproduce_fresh_and_edited_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("result.json");
    let out = fpl(&["--config", &config("integrate.json"), "--out", &s(&file), "integrate"]);
    assert_eq!(out.status.code(), Some(0));
    let manifest = dir.path().join("result.json.manifest.json");

    let out = fpl(&["reproduce", &s(&manifest)]);
    assert_eq!(out.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["passed"], true);
    assert!(rep["outputs"].as_array().unwrap().iter().all(|o| o["matches"] == true));

    let mut m = json(&manifest);
    m["seeds"][0] = serde_json::json!(6);
    fs::write(&manifest, serde_json::to_string_pretty(&m).unwrap()).unwrap();
    let out = fpl(&["reproduce", &s(&manifest)]);
    assert_eq!(out.status.code(), Some(1));
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["passed"], false);
    assert_eq!(rep["outputs"][0]["matches"], false);
}

#[test]
fn reproduce_reports_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let painting = dir.path().join("p.json");
    fs::copy(configs().join("reference_painting.json"), &painting).unwrap();
    let run_dir = dir.path().join("run");
    let out = fpl(&["--seed", "3", "--out", &s(&run_dir), "play-puzzle", "--painting", &s(&painting), "--mode", "location"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&run_dir.join("report.json"));
    assert_eq!(report["placements"], 100);
    assert_eq!(report["boards_match_source"], true);

    fs::remove_file(&painting).unwrap();
    let out = fpl(&["reproduce", &s(&run_dir.join("manifest.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing-input"));
    let out = fpl(&["reproduce", &s(&dir.path().join("nope.json"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn downstream_errors_leave_a_record() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = fpl(&["--seed", "1", "--out", &s(&out_dir), "integrate", "--form", &config("reference_form.json"), "--max-events", "20"]);
    assert_eq!(out.status.code(), Some(1));
    let rec = json(&out_dir.join("error.json"));
    assert_eq!(rec["kind"], "integration");
    assert_eq!(rec["exit_code"], 1);
    assert!(!out_dir.join("manifest.json").exists());
}

#[test]
fn check_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("space.json");
    // atoms sum to 11/10
    fs::write(&space, r#"{"universe":["a","b"],"atoms":{"a":"1/2","b":"3/5"}}"#).unwrap();
    let out = fpl(&["--out", &s(&dir.path().join("v")), "validate-space", "--space", &s(&space)]);
    assert_eq!(out.status.code(), Some(1));

    let out = fpl(&[
        "--seed", "1", "--out", &s(&dir.path().join("n0")), "lln", "--weights", "1=1,2=1", "--label", "1", "--epsilon", "0.0001",
        "--delta", "0.05", "-m", "20", "--search-cap", "64",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&dir.path().join("n0/lln.json"));
    assert_eq!(r["n0_search"]["reached"], false);
    assert_eq!(r["n0_search"]["history"].as_array().unwrap().len(), 3);
}

#[test]
fn every_reference_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (cfg, cmd) in [
        ("gen_painting.json", "gen-painting"),
        ("gen_form.json", "gen-form"),
        ("play_puzzle.json", "play-puzzle"),
        ("play_prob_game.json", "play-prob-game"),
        ("validate_space.json", "validate-space"),
        ("lln.json", "lln"),
        ("lln_n0.json", "lln"),
        ("integrate.json", "integrate"),
    ] {
        let out = fpl(&["--config", &config(cfg), "--out", &s(&dir.path().join(cfg.trim_end_matches(".json"))), cmd]);
        assert_eq!(out.status.code(), Some(0), "{cfg}: {}", String::from_utf8_lossy(&out.stderr));
    }
    // the shipped reference files are what the generators produce
    assert_eq!(json(&dir.path().join("gen_painting/painting.json")), json(&configs().join("reference_painting.json")));
    assert_eq!(json(&dir.path().join("gen_form/form.json")), json(&configs().join("reference_form.json")));
    let lln = json(&dir.path().join("lln_n0/lln.json"));
    assert!(lln["n0_search"]["n0"].as_u64().unwrap() <= 512);
}

#[test]
fn stdout_and_jobs_flag() {
    let out = Command::new(env!("CARGO_BIN_EXE_fpl"))
        .args(["--config", &config("lln.json"), "lln"])
        .env("FPL_JOBS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let one = fpl(&["--config", &config("lln.json"), "--jobs", "1", "lln"]);
    assert_eq!(out.stdout, one.stdout);
    let zero = fpl(&["--config", &config("lln.json"), "--jobs", "0", "lln"]);
    assert_eq!(zero.status.code(), Some(2));
}
