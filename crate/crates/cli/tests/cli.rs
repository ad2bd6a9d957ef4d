use std::process::Command;

use serde_json::Value;

fn robinhom(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_robinhom")).args(args).output().unwrap()
}

fn json_out(args: &[&str]) -> Value {
    let out = robinhom(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn strange_term_at_four_pi() {
    let v = json_out(&["strange-term", "--beta", "12.566370614", "--n", "3"]);
    let r = &v["results"][0];
    assert!((r["kappa_star"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!((r["strange_term"].as_f64().unwrap() - std::f64::consts::TAU).abs() < 1e-4);
    assert_eq!(r["evaluator_id"], "closed_form");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["config"]["beta"][0], 12.566370614);
}

#[test]
fn exterior_closed_form_value() {
    let v = json_out(&["exterior", "--kappa", "2", "--n", "3"]);
    let row = &v["results"]["rows"][0];
    assert!((row["closed_form"].as_f64().unwrap() - std::f64::consts::TAU).abs() < 1e-6);
    assert!(row["relative_gap"].as_f64().unwrap() < 2e-3);
}

#[test]
fn unknown_flag_is_a_config_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = robinhom(&["strange-term", "--bogus", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists());
}

#[test]
fn invalid_values_exit_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let p = path.to_str().unwrap();
    for args in [
        &["cell-spectrum", "--kappa", "1", "--output", p][..],
        &["convergence", "--eps", "0.3", "--output", p],
        &["homogenize", "--eps", "1", "--a", "1.5", "--output", p],
    ] {
        let out = robinhom(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!path.exists());
    }
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"beta": [1.0, 10.0], "format": "csv"}"#).unwrap();
    let out = robinhom(&["strange-term", "--config", cfg.to_str().unwrap(), "--beta", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "beta,kappa_star,strange_term,evaluator_id,iterations,bracket_width");
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("2,"));

    std::fs::write(&cfg, r#"{"betta": 1.0}"#).unwrap();
    assert_eq!(robinhom(&["strange-term", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn output_file_embeds_config_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let common = ["cell-spectrum", "--eps", "1/2", "--kappa", "0.5,2", "--level", "1"];
    let run = |path: &std::path::Path, threads: &str| {
        let mut args = common.to_vec();
        args.extend(["--threads", threads, "--output", path.to_str().unwrap()]);
        assert!(robinhom(&args).status.success());
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        v["timings"] = Value::Null;
        v["config"]["threads"] = Value::Null;
        v["config"]["output"] = Value::Null;
        v
    };
    let (va, vb) = (run(&a, "1"), run(&b, "3"));
    assert_eq!(va, vb);
    assert_eq!(va["config"]["level"], 1);
    let rows = va["results"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["lambda_eps_kappa"].as_f64().unwrap() < 0.0);
    assert!(rows[1]["lambda_eps_kappa"].as_f64().unwrap() > 0.0);
}

#[test]
fn dumps_mesh_and_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("mesh.json");
    let mats = dir.path().join("mats");
    let out = robinhom(&[
        "cell-spectrum",
        "--level",
        "1",
        "--mesh-dump",
        mesh.to_str().unwrap(),
        "--matrix-dump",
        mats.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&mesh).unwrap()).unwrap();
    assert_eq!(m["version"], 1);
    assert!(!m["hexes"].as_array().unwrap().is_empty());
    let a = std::fs::read_to_string(mats.join("A.txt")).unwrap();
    assert!(a.starts_with('%'));
    assert!(mats.join("B.txt").exists());
}

#[test]
fn homogenize_small_run() {
    let v = json_out(&["homogenize", "--eps", "1/2", "--level", "1", "--grid-n", "8"]);
    let r = &v["results"];
    assert!(r["energy"].as_f64().unwrap() < 0.0);
    assert!(r["l2_error"].as_f64().unwrap() < 0.1);
}

#[test]
fn regimes_critical_settles() {
    let v = json_out(&["regimes", "--a", "3", "--level", "1"]);
    assert_eq!(v["results"][0]["trend"], "settling");
}

#[test]
fn validate_quick_passes_and_fault_is_flagged() {
    let out = robinhom(&["validate", "--quick"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("[PASS]  1."));

    let out = robinhom(&["validate", "--inject-fault"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1));
    assert!(text.lines().any(|l| l.starts_with("[FAIL]  5.")), "{text}");
}
