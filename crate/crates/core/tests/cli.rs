use std::path::Path;
use std::process::{Command, Output};

use mvtsp::formats::Instance;
use mvtsp::instances::validate_metric;
use mvtsp::rational::{parse_rational, ratio};
use serde_json::Value;

fn mvtsp(args: &[&str], dir: &Path) -> (i32, Value, String) {
    let out: Output = Command::new(env!("CARGO_BIN_EXE_mvtsp")).args(args).current_dir(dir).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json: Value = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {stdout}"));
    (out.status.code().unwrap(), json, String::from_utf8(out.stderr).unwrap())
}

fn rational(v: &Value) -> mvtsp::rational::Rational {
    parse_rational(v["value"].as_str().unwrap()).unwrap()
}

#[test]
fn gen_writes_a_metric_instance() {
    let dir = tempfile::tempdir().unwrap();
    let (code, json, _) = mvtsp(&["gen", "mvtsp", "--n", "4", "--seed", "7", "--r-max", "3", "-o", "inst.json"], dir.path());
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(dir.path().join("inst.json")).unwrap();
    let Instance::Mvtsp(inst) = Instance::from_json(&text).unwrap() else { panic!("wrong kind") };
    assert_eq!(validate_metric(&inst), None);
    assert!(inst.requests().iter().all(|&r| (1..=3).contains(&r)));
    assert_eq!(json["instance_digest"].as_str().unwrap(), Instance::Mvtsp(inst).digest().unwrap());
}

#[test]
fn gen_bdgpe_to_stdout_is_paramodular() {
    let dir = tempfile::tempdir().unwrap();
    let (code, json, _) = mvtsp(&["gen", "bdgpe", "--size", "3", "--seed", "7"], dir.path());
    assert_eq!(code, 0);
    assert_eq!(json["kind"], "bdgpe");
    let Instance::Bdgpe(inst) = Instance::from_json(&json.to_string()).unwrap() else { panic!("wrong kind") };
    assert!(inst.pair.is_paramodular().unwrap());
}

#[test]
fn bad_flags_exit_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let (code, json, stderr) = mvtsp(&["gen", "mvtsp", "--n", "0"], dir.path());
    assert_eq!(code, 2);
    assert!(json["error"].as_str().unwrap().contains("--n"));
    assert!(stderr.contains("--n"));
    let (code, json, _) = mvtsp(&["solve", "missing.json", "--alg", "nope"], dir.path());
    assert_eq!(code, 2);
    assert_eq!(json["status"], "error");
    let (code, _, _) = mvtsp(&["solve", "missing.json", "--alg", "apx15"], dir.path());
    assert_eq!(code, 2);
}

#[test]
fn solve_and_verify_apx15() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    mvtsp(&["gen", "mvtsp", "--n", "4", "--seed", "3", "--r-max", "4", "-o", "i.json"], d);
    let (code, json, _) = mvtsp(&["solve", "i.json", "--alg", "apx15", "--oracle", "-o", "s.json", "--quiet"], d);
    assert_eq!(code, 0);
    assert_eq!(json["feasible"]["tour"], true);
    assert!(rational(&json["oracle"]["ratio"]) <= ratio(3, 2));
    assert_eq!(json["details"]["intermediate_degrees_ok"], true);

    let (code, json, stderr) = mvtsp(&["verify", "i.json", "s.json", "--alg", "apx15"], d);
    assert_eq!(code, 0);
    assert_eq!(json["verified"], true);
    assert!(rational(&json["oracle"]["ratio"]) <= ratio(3, 2));
    assert!(stderr.contains("ratio to optimum"));

    // One degree off.
    let mut sol: Value = serde_json::from_str(&std::fs::read_to_string(d.join("s.json")).unwrap()).unwrap();
    let edges = sol["edges"].as_object_mut().unwrap();
    let key = edges.keys().find(|k| !k.starts_with('0')).cloned().unwrap_or_else(|| "0-0".into());
    let key = if edges.contains_key("0-0") { "0-0".to_string() } else { key };
    let v = edges.get(&key).and_then(Value::as_i64).unwrap_or(0);
    edges.insert(key.clone(), Value::from(v + 1));
    std::fs::write(d.join("bad.json"), sol.to_string()).unwrap();
    let (code, json, _) = mvtsp(&["verify", "i.json", "bad.json", "--quiet"], d);
    assert_eq!(code, 1);
    let vertex = key.split('-').next().unwrap();
    assert!(json["feasible"]["problem"].as_str().unwrap().contains(&format!("vertex {vertex}")));

    // Solution for another instance.
    mvtsp(&["gen", "mvtsp", "--n", "4", "--seed", "4", "-o", "j.json"], d);
    let (code, json, _) = mvtsp(&["verify", "j.json", "s.json"], d);
    assert_eq!(code, 2);
    assert!(json["error"].as_str().unwrap().contains("digest mismatch"));
}

#[test]
fn bdgpe_lower_regime_bound() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for seed in 0..10 {
        let seed = seed.to_string();
        mvtsp(&["gen", "bdgpe", "--size", "4", "--seed", &seed, "-o", "b.json"], d);
        let (code, json, _) = mvtsp(&["solve", "b.json", "--alg", "bdgpe", "--regime", "lower", "-o", "z.json"], d);
        assert_eq!(code, 0, "{json}");
        let delta = json["feasible"]["delta"].as_i64().unwrap();
        for row in json["violations"].as_array().unwrap() {
            assert!(row["violation"].as_i64().unwrap() >= -(delta - 1));
            assert!(row["g"].is_null());
        }
        assert_eq!(json["feasible"]["in_polyhedron"], true);
        // The element file verifies against the original (both-bounds) instance
        // only when it also meets the both-bounds guarantee; against the
        // lower-regime view it must verify.
        let (code, _, _) = mvtsp(&["solve", "b.json", "--alg", "bdgpe", "-o", "z2.json"], d);
        assert_eq!(code, 0);
        let (code, json, _) = mvtsp(&["verify", "b.json", "z2.json"], d);
        assert_eq!(code, 0, "{json}");
    }
}

#[test]
fn budget_and_cap_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    mvtsp(&["gen", "mvtsp", "--n", "7", "--seed", "1", "-o", "big.json"], d);
    let (code, json, _) = mvtsp(&["solve", "big.json", "--alg", "exact"], d);
    assert_eq!(code, 4);
    assert!(json["error"].as_str().unwrap().contains("budget"));
    let (code, json, _) = mvtsp(&["solve", "big.json", "--alg", "apx15"], d);
    assert_eq!(code, 4);
    assert!(json["error"].as_str().unwrap().contains("cap"));
    let (code, _, _) = mvtsp(&["solve", "big.json", "--alg", "apx25"], d);
    assert_eq!(code, 0);
    mvtsp(&["gen", "mvtsp", "--n", "4", "--seed", "1", "-o", "small.json"], d);
    let (code, _, _) = mvtsp(&["oracle", "small.json", "--budget-vertices", "3"], d);
    assert_eq!(code, 4);
}

#[test]
fn oracle_command() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    mvtsp(&["gen", "mvtsp", "--n", "3", "--seed", "2", "-o", "i.json"], d);
    let (code, json, _) = mvtsp(&["oracle", "i.json"], d);
    assert_eq!(code, 0);
    assert!(json["optimum"]["value"].as_str().unwrap().contains('/'));
    mvtsp(&["gen", "bdgpe", "--size", "3", "--seed", "2", "-o", "b.json"], d);
    let (code, json, _) = mvtsp(&["oracle", "b.json"], d);
    assert_eq!(code, 0);
    assert!(rational(&json["lp_bound"]) <= rational(&json["optimum"]));
}

#[test]
fn bench_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (code, json, _) = mvtsp(&["bench", "--seeds", "0"], d);
    assert_eq!(code, 0);
    assert_eq!(json["rows"].as_array().unwrap().len(), 0);

    let (code, json, stderr) = mvtsp(&["bench"], d);
    assert_eq!(code, 0);
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 90);
    let keys: Vec<(u64, u64)> = rows.iter().map(|r| (r["n"].as_u64().unwrap(), r["seed"].as_u64().unwrap())).collect();
    let mut sorted = keys.clone();
    sorted.sort_unstable();
    assert_eq!(keys, sorted);
    for s in json["summary"].as_array().unwrap() {
        assert!(rational(&s["worst_ratio"]) <= ratio(3, 2));
    }
    assert!(stderr.contains("worst ratio"));

    let (code, json, _) = mvtsp(&["bench", "--alg", "apx25", "--seeds", "10", "--quiet"], d);
    assert_eq!(code, 0);
    for s in json["summary"].as_array().unwrap() {
        assert!(rational(&s["worst_ratio"]) <= ratio(5, 2));
    }

    let (code, json, _) = mvtsp(&["bench", "--alg", "bdgpe", "--sizes", "3,5", "--seeds", "10", "--regime", "upper"], d);
    assert_eq!(code, 0, "{json}");
}

#[test]
fn quiet_silences_stderr_and_gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (_, _, stderr) = mvtsp(&["gen", "mvtsp", "--n", "5", "--seed", "9", "-o", "a.json", "--quiet"], d);
    assert!(stderr.is_empty());
    mvtsp(&["gen", "mvtsp", "--n", "5", "--seed", "9", "-o", "b.json"], d);
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
}
