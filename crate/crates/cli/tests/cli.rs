//! End-to-end checks of the command-line interface: exit codes, artifact
//! shapes, and cross-stage consistency.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fedcoal"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn fedcoal")
}

fn run_ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen_scenario(dir: &Path, n: u32, seed: u64) -> PathBuf {
    let out = path(dir, "scenario.json");
    run_ok(&[
        "gen",
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "-o",
        s(&out),
    ]);
    out
}

#[test]
fn gen_is_deterministic_and_prints_hash() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(dir.path(), "a.json");
    let b = path(dir.path(), "b.json");
    let out_a = run(&["gen", "--n", "4", "--dim", "2", "--seed", "42", "-o", s(&a)]);
    let out_b = run(&["gen", "--n", "4", "--dim", "2", "--seed", "42", "-o", s(&b)]);
    assert!(out_a.status.success() && out_b.status.success());
    assert_eq!(out_a.stdout.len(), 64 + 2 + a.to_str().unwrap().len() + 1);
    let hash_a = String::from_utf8_lossy(&out_a.stdout)[..64].to_string();
    let hash_b = String::from_utf8_lossy(&out_b.stdout)[..64].to_string();
    assert_eq!(hash_a, hash_b);
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap()
    );
}

#[test]
fn gen_rejects_zero_agents() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "gen",
        "--n",
        "0",
        "-o",
        s(&path(dir.path(), "x.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_rejects_bad_knobs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "gen",
        "--n",
        "3",
        "--p-min",
        "0.9",
        "--p-max",
        "0.1",
        "-o",
        s(&path(dir.path(), "x.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generated_scenario_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(dir.path(), 6, 5);
    let value: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&scenario).unwrap()).unwrap();
    for key in [
        "n",
        "M",
        "agents",
        "evaluator",
        "mae",
        "gain_fn",
        "cost_per_agent",
        "fallback_loss",
        "seed",
    ] {
        assert!(value.get(key).is_some(), "scenario lacks {key}");
    }
    let agent = &value["agents"][0];
    for key in ["m", "p", "theta", "local_loss"] {
        assert!(agent.get(key).is_some(), "agent lacks {key}");
    }
    assert!(value["mae"].get("theta").is_some());
    assert!(value["mae"].get("w").is_some());
}

#[test]
fn full_pipeline_cross_checks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let scenario = gen_scenario(d, 5, 1);
    run_ok(&["gains", "-i", s(&scenario), "-o", s(&path(d, "gains.json"))]);
    run_ok(&[
        "lp",
        "-i",
        s(&scenario),
        "-o",
        s(&path(d, "lp.json")),
        "--mps",
        s(&path(d, "lp.mps")),
    ]);
    run_ok(&[
        "stable-set",
        "-i",
        s(&scenario),
        "-o",
        s(&path(d, "stable_set.json")),
    ]);
    run_ok(&[
        "dynamics",
        "-i",
        s(&scenario),
        "-o",
        s(&path(d, "dynamics.jsonl")),
        "--start",
        "random",
        "--start-seed",
        "3",
    ]);
    run_ok(&["oracle", "-i", s(&scenario), "-o", s(&path(d, "oracle.json"))]);
    run_ok(&[
        "optimal",
        "-i",
        s(&scenario),
        "-o",
        s(&path(d, "optimal.json")),
    ]);
    run_ok(&[
        "report",
        "--dir",
        s(d),
        "-o",
        s(&path(d, "report.json")),
    ]);

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(path(d, "report.json")).unwrap()).unwrap();
    assert_eq!(report["consistency"]["dynamics_terminal_in_oracle"], true);
    assert_eq!(report["consistency"]["lp_objective_within_bound"], true);
    assert_eq!(report["stages"]["lp"]["certified"], true);
    assert_eq!(report["stages"]["dynamics"]["converged"], true);

    // The MPS dump is parseable and solves to the artifact's objective.
    let (lp, _, _) =
        fedcoal_core::lp_solver::parse_mps(&std::fs::read_to_string(path(d, "lp.mps")).unwrap())
            .unwrap();
    let sol = fedcoal_core::lp_solver::solve(&lp).unwrap();
    let lp_artifact: serde_json::Value =
        serde_json::from_slice(&std::fs::read(path(d, "lp.json")).unwrap()).unwrap();
    let obj = lp_artifact["objective"].as_f64().unwrap();
    assert!((sol.objective.unwrap() - obj).abs() < 1e-9);

    // CSV series exists with the documented header.
    let csv = std::fs::read_to_string(path(d, "potential.csv")).unwrap();
    assert!(csv.starts_with("step,deviator,potential,gain_delta"));
}

#[test]
fn oracle_respects_its_cap() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(dir.path(), 11, 2);
    let out = run(&[
        "oracle",
        "-i",
        s(&scenario),
        "-o",
        s(&path(dir.path(), "oracle.json")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn gain_table_respects_its_cap() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(dir.path(), 13, 2);
    let out = run(&[
        "gains",
        "-i",
        s(&scenario),
        "-o",
        s(&path(dir.path(), "gains.json")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn report_names_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let scenario = gen_scenario(d, 4, 9);
    run_ok(&["gains", "-i", s(&scenario), "-o", s(&path(d, "gains.json"))]);
    // lp.json and everything after it are missing.
    let out = run(&[
        "report",
        "--dir",
        s(d),
        "-o",
        s(&path(d, "report.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("missing stage output: lp"),
        "stderr was: {stderr}"
    );
}

#[test]
fn report_rejects_mismatched_stages() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Stage outputs from scenario A, then scenario B overwrites scenario.json.
    let scenario = gen_scenario(d, 4, 1);
    for (cmd, out) in [
        ("gains", "gains.json"),
        ("lp", "lp.json"),
        ("stable-set", "stable_set.json"),
        ("dynamics", "dynamics.jsonl"),
        ("oracle", "oracle.json"),
        ("optimal", "optimal.json"),
    ] {
        run_ok(&[cmd, "-i", s(&scenario), "-o", s(&path(d, out))]);
    }
    gen_scenario(d, 4, 2);
    let out = run(&[
        "report",
        "--dir",
        s(d),
        "-o",
        s(&path(d, "report.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("different scenario"));
}

#[test]
fn oracle_accepts_stable_set_allocation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let scenario = gen_scenario(d, 4, 7);
    run_ok(&[
        "stable-set",
        "-i",
        s(&scenario),
        "-o",
        s(&path(d, "stable_set.json")),
    ]);
    run_ok(&[
        "oracle",
        "-i",
        s(&scenario),
        "-o",
        s(&path(d, "oracle.json")),
        "--phi",
        s(&path(d, "stable_set.json")),
    ]);
    let oracle: serde_json::Value =
        serde_json::from_slice(&std::fs::read(path(d, "oracle.json")).unwrap()).unwrap();
    assert_eq!(oracle["phi_source"], "file");
    let stable: serde_json::Value =
        serde_json::from_slice(&std::fs::read(path(d, "stable_set.json")).unwrap()).unwrap();
    // The stable-set certificate partition must appear in the oracle listing.
    let partitions = oracle["partitions"].as_array().unwrap();
    assert!(partitions.contains(&stable["certified_partition"]));
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "gains",
        "-i",
        s(&path(dir.path(), "nope.json")),
        "-o",
        s(&path(dir.path(), "gains.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
