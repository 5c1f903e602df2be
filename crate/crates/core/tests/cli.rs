use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entrokl"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let files = [
        ("normal.json", r#"{"family":"gaussian","mean":[0],"cov":[[1]]}"#),
        ("g2.json", r#"{"family":"gaussian","mean":[1,-1],"cov":[[2,0.5],[0.5,1]]}"#),
        ("unit.json", r#"{"family":"uniform_box","lower":[0],"upper":[1]}"#),
        ("expo.json", r#"{"family":"exponential","rate":2}"#),
        ("bad_rate.json", r#"{"family":"exponential","rate":-1}"#),
        ("two.csv", "0\n1\n"),
        ("dup.csv", "0\n0\n"),
        ("header.csv", "x,y\n0,0\n1,0\n0,2\n"),
        ("broken.csv", "0,0\n1,1\n2,oops\n"),
    ];
    for (name, text) in files {
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

#[test]
fn estimate_examples() {
    let dir = workspace();
    let out = run(dir.path(), &["estimate", "two.csv"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["h_n"].as_f64().unwrap() - 1.270_362_8).abs() < 1e-7);
    assert_eq!(v["method"], "tree");
    assert_eq!(v["duplicates_handled"], false);

    let out = run(dir.path(), &["estimate", "two.csv", "--backend", "brute"]);
    assert_eq!(json(&out)["method"], "brute");

    let out = run(dir.path(), &["estimate", "dup.csv", "--jitter", "0"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("(0, 1)"));

    let out = run(dir.path(), &["estimate", "dup.csv", "--jitter", "1e-6", "--seed", "1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["duplicates_handled"], true);

    let out = run(dir.path(), &["estimate", "header.csv"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["dim"], 2);

    let out = run(dir.path(), &["estimate", "broken.csv"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(code(&run(dir.path(), &["estimate", "missing.csv"])), 2);
    assert_eq!(code(&run(dir.path(), &["estimate", "two.csv", "--backend", "fast"])), 2);
}

#[test]
fn sample_examples() {
    let dir = workspace();
    let a = run(dir.path(), &["sample", "g2.json", "--n", "100", "--seed", "8"]);
    let b = run(dir.path(), &["sample", "g2.json", "--n", "100", "--seed", "8"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().count(), 100);
    assert!(text.lines().all(|l| l.split(',').count() == 2));

    assert_eq!(code(&run(dir.path(), &["sample", "g2.json", "--n", "1"])), 2);
    let bad = run(dir.path(), &["sample", "bad_rate.json", "--n", "10"]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("rate"));
}

#[test]
fn sample_then_estimate_round_trip() {
    let dir = workspace();
    for (density, h_true) in [("normal.json", 1.418_938_5), ("unit.json", 0.0), ("expo.json", 1.0 - 2f64.ln())] {
        let path = dir.path().join("round.csv");
        let out = run(
            dir.path(),
            &["sample", density, "--n", "1000", "--seed", "3", "--out", path.to_str().unwrap()],
        );
        assert_eq!(code(&out), 0);
        let est = run(dir.path(), &["estimate", "round.csv"]);
        assert_eq!(code(&est), 0, "{density}");
        let h = json(&est)["h_n"].as_f64().unwrap();
        assert!((h - h_true).abs() < 0.2, "{density}: {h}");
    }
}

#[test]
fn conditions_examples() {
    let dir = workspace();
    let out = run(dir.path(), &["conditions", "normal.json", "--functional", "minorization", "--r", "1", "--n-outer", "50"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["all_ok"], true);
    assert!(v["entries"].as_array().unwrap().iter().all(|e| e["margin"].as_f64().unwrap() >= 0.0));

    let out = run(dir.path(), &["conditions", "--functional", "lemmaG", "--rate", "1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!(v["identity1"]["abs_diff"].as_f64().unwrap() <= 1e-6);
    assert!(v["identity2"]["abs_diff"].as_f64().unwrap() <= 1e-6);

    let out = run(dir.path(), &["conditions", "normal.json", "--functional", "T", "--eps", "1.5"]);
    assert_eq!(code(&out), 2);

    let out = run(dir.path(), &["conditions", "normal.json", "--functional", "K", "--n-outer", "200", "--n-inner", "200"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    for key in ["kind", "params", "value", "std_error", "n_outer", "n_inner", "seed", "flags"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["kind"], "K");
    assert_eq!(v["params"]["eps0"], 0.5);

    let out = run(dir.path(), &["conditions", "unit.json", "--functional", "T", "--r", "0.05", "--n-outer", "100"]);
    assert_eq!(code(&out), 0);
    assert!(json(&out)["value"].as_f64().unwrap() <= 2f64.sqrt());

    let out = run(dir.path(), &["conditions", "unit.json", "--functional", "A", "--p", "2.5", "--n-outer", "5000"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["stable"], true);

    assert_eq!(code(&run(dir.path(), &["conditions", "unit.json", "--functional", "minorization"])), 2);
    assert_eq!(code(&run(dir.path(), &["conditions", "--functional", "Q"])), 2);
    assert_eq!(code(&run(dir.path(), &["conditions", "normal.json", "--functional", "K", "--n-outer", "10"])), 2);
}

#[test]
fn diagnose_examples() {
    let dir = workspace();
    let args = ["diagnose", "normal.json", "--x", "0", "--n", "2048", "--reps", "4096", "--seed", "0"];
    let a = run(dir.path(), &args);
    assert_eq!(code(&a), 0);
    let v = json(&a);
    assert!(v["ks_distance"].as_f64().unwrap() < 0.05);
    for key in ["x", "n", "reps", "ks_distance", "empirical_mean_log", "target_mean_log", "rate", "seed"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let b = run(dir.path(), &args);
    assert_eq!(a.stdout, b.stdout);

    assert_eq!(code(&run(dir.path(), &["diagnose", "unit.json", "--x", "2"])), 2);
    assert_eq!(code(&run(dir.path(), &["diagnose", "normal.json", "--x", "0,1"])), 2);
    assert_eq!(code(&run(dir.path(), &["diagnose", "g2.json", "--x", "-1,0.5", "--n", "64", "--reps", "64"])), 0);
}

#[test]
fn converge_examples() {
    let dir = workspace();
    let csv = dir.path().join("reps.csv");
    let args = [
        "converge", "normal.json", "--n-grid", "2", "--reps", "2", "--seed", "1",
        "--out-csv", csv.to_str().unwrap(),
    ];
    let a = run(dir.path(), &args);
    assert_eq!(code(&a), 0);
    let v = json(&a);
    assert_eq!(v["n_grid"], serde_json::json!([2]));
    assert_eq!(v["per_n"].as_array().unwrap().len(), 1);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("n,rep,h_n,seed"));
    assert_eq!(text.lines().count(), 3);
    let b = run(dir.path(), &args);
    assert_eq!(a.stdout, b.stdout);

    let brute = run(dir.path(), &["converge", "normal.json", "--n-grid", "30,60", "--reps", "4", "--backend", "brute"]);
    let tree = run(dir.path(), &["converge", "normal.json", "--n-grid", "30,60", "--reps", "4", "--backend", "tree"]);
    assert_eq!(brute.stdout, tree.stdout);

    assert_eq!(code(&run(dir.path(), &["converge", "normal.json", "--n-grid", "1"])), 2);
    assert_eq!(code(&run(dir.path(), &["converge", "normal.json", "--n-grid", "a,b"])), 2);
}

#[test]
fn threads_flag_and_environment() {
    let dir = workspace();
    let args = ["converge", "g2.json", "--n-grid", "50,100", "--reps", "6", "--seed", "2"];
    let base = run(dir.path(), &args);
    let mut one = args.to_vec();
    one.extend(["--threads", "1"]);
    assert_eq!(run(dir.path(), &one).stdout, base.stdout);
    let env = Command::new(env!("CARGO_BIN_EXE_entrokl"))
        .args(args)
        .env("ENTROKL_THREADS", "3")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(env.stdout, base.stdout);
    let mut zero = args.to_vec();
    zero.extend(["--threads", "0"]);
    assert_eq!(code(&run(dir.path(), &zero)), 2);
}

#[test]
fn help_and_unknown_commands() {
    let dir = workspace();
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 2);
    assert_eq!(code(&run(dir.path(), &[])), 2);
}
