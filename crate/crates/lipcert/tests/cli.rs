//! End-to-end tests of the `lipcert` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lipcert() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lipcert"))
}

fn write_net(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

fn linear_net(dir: &Path) -> String {
    write_net(
        dir,
        "lin.json",
        r#"{"layers":[{"weights":[[1.0,-2.0],[3.0,4.0]],"bias":[0.0,0.0]}]}"#,
    )
}

fn relu_net(dir: &Path) -> String {
    write_net(
        dir,
        "relu.json",
        r#"{"layers":[{"weights":[[1.0]],"bias":[0.0]},{"weights":[[1.0]],"bias":[0.0]}]}"#,
    )
}

fn report_of(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is a JSON report")
}

#[test]
fn linear_layer_report() {
    let dir = tempfile::tempdir().unwrap();
    let net = linear_net(dir.path());
    let out = lipcert()
        .args([
            "--network",
            &net,
            "--box",
            "[[0,1],[0,1]]",
            "--p",
            "1",
            "--k",
            "1",
        ])
        .output()
        .unwrap();
    let report = report_of(&out);
    assert_eq!(report["gub"], 6.0);
    assert_eq!(report["glb"], 6.0);
    assert_eq!(report["status"], "exact");
    assert_eq!(report["p"], "1");
    assert_eq!(report["mode"], "local");
    assert_eq!(report["iterations"], 1);
    assert!(report["output_bounds"].is_array());
    assert!(report["trace"].is_null());
}

#[test]
fn global_mode_on_relu() {
    let dir = tempfile::tempdir().unwrap();
    let net = relu_net(dir.path());
    let out = lipcert()
        .args(["--network", &net, "--mode", "global", "--p", "inf"])
        .output()
        .unwrap();
    let report = report_of(&out);
    assert_eq!(report["gub"], 1.0);
    assert_eq!(report["status"], "exact");
    assert!(report["output_bounds"].is_null());
}

#[test]
fn unsupported_norm_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let net = relu_net(dir.path());
    let out = lipcert()
        .args(["--network", &net, "--box", "[[-1,1]]", "--p", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let net = relu_net(dir.path());

    // Unreadable network file.
    let out = lipcert()
        .args(["--network", "/nonexistent.json", "--box", "[[0,1]]"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Malformed box.
    for bad in ["[[1,0]]", "oops", "[]"] {
        let out = lipcert()
            .args(["--network", &net, "--box", bad])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "box {bad:?} should be rejected");
    }

    // Missing box in local mode.
    let out = lipcert().args(["--network", &net]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // k below one.
    let out = lipcert()
        .args(["--network", &net, "--box", "[[-1,1]]", "--k", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Mismatched network dimensions.
    let bad_net = write_net(
        dir.path(),
        "bad.json",
        r#"{"layers":[{"weights":[[1.0,0.0,0.0],[0.0,1.0,0.0]],"bias":[0.0,0.0]},
                      {"weights":[[1.0,0.0,0.0]],"bias":[0.0]}]}"#,
    );
    let out = lipcert()
        .args(["--network", &bad_net, "--box", "[[0,1],[0,1],[0,1]]"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn box_can_come_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let net = relu_net(dir.path());
    let box_path = dir.path().join("box.json");
    std::fs::write(&box_path, "[[-1, 1]]").unwrap();
    let out = lipcert()
        .args([
            "--network",
            &net,
            "--box",
            box_path.to_str().unwrap(),
            "--p",
            "2",
        ])
        .output()
        .unwrap();
    let report = report_of(&out);
    assert_eq!(report["gub"], 1.0);
}

#[test]
fn out_flag_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let net = relu_net(dir.path());
    let out_path = dir.path().join("report.json");
    let out = lipcert()
        .args([
            "--network",
            &net,
            "--box",
            "[[-1,1]]",
            "--out",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["status"], "exact");
}

#[test]
fn report_has_exactly_the_documented_keys() {
    let dir = tempfile::tempdir().unwrap();
    let net = relu_net(dir.path());
    let out = lipcert()
        .args(["--network", &net, "--box", "[[-1,1]]", "--trace"])
        .output()
        .unwrap();
    let report = report_of(&out);
    let expected = [
        "network",
        "mode",
        "p",
        "k",
        "gub",
        "glb",
        "status",
        "iterations",
        "subproblems_created",
        "subproblems_remaining",
        "output_bounds",
        "eps_strict",
        "elapsed_s",
        "trace",
    ];
    let mut keys: Vec<&str> = report
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    keys.sort_unstable();
    let mut want = expected.to_vec();
    want.sort_unstable();
    assert_eq!(keys, want);

    // Document order in the raw text matches the schema.
    let raw = String::from_utf8_lossy(&out.stdout);
    let positions: Vec<usize> = expected
        .iter()
        .map(|k| {
            raw.find(&format!("\"{k}\":"))
                .unwrap_or_else(|| panic!("missing key {k}"))
        })
        .collect();
    assert!(
        positions.windows(2).all(|w| w[0] < w[1]),
        "keys out of order"
    );
}

#[test]
fn trace_gub_column_never_increases() {
    let dir = tempfile::tempdir().unwrap();
    // A wider net so the run takes several iterations.
    let net = write_net(
        dir.path(),
        "wide.json",
        &serde_json::json!({
            "layers": [
                {"weights": [[0.7, -0.3], [-0.5, 0.9], [0.2, 0.4], [-0.8, -0.1]],
                 "bias": [0.05, -0.1, 0.0, 0.2]},
                {"weights": [[0.6, -0.7, 0.3, 0.5], [0.1, 0.8, -0.4, -0.2]],
                 "bias": [0.0, 0.1]}
            ]
        })
        .to_string(),
    );
    let out = lipcert()
        .args([
            "--network",
            &net,
            "--box",
            "[[-1,1],[-1,1]]",
            "--p",
            "1",
            "--trace",
        ])
        .output()
        .unwrap();
    let report = report_of(&out);
    let trace = report["trace"].as_array().unwrap();
    assert!(!trace.is_empty());
    let gubs: Vec<f64> = trace
        .iter()
        .map(|row| row.as_array().unwrap()[1].as_f64().unwrap())
        .collect();
    for w in gubs.windows(2) {
        assert!(w[1] <= w[0] + 1e-9);
    }
}

#[test]
fn identical_runs_differ_only_in_elapsed_time() {
    let dir = tempfile::tempdir().unwrap();
    let net = write_net(
        dir.path(),
        "net.json",
        &serde_json::json!({
            "layers": [
                {"weights": [[0.4, 0.6], [-0.7, 0.2], [0.3, -0.9]], "bias": [0.1, 0.0, -0.2]},
                {"weights": [[0.5, -0.3, 0.8], [-0.2, 0.6, 0.1]], "bias": [0.0, 0.0]}
            ]
        })
        .to_string(),
    );
    let args = [
        "--network",
        &net,
        "--box",
        "[[0,1],[0,1]]",
        "--p",
        "2",
        "--trace",
        "--seed",
        "42",
    ];
    let a = lipcert().args(args).output().unwrap();
    let b = lipcert().args(args).output().unwrap();
    let mut ra = report_of(&a);
    let mut rb = report_of(&b);
    ra.as_object_mut().unwrap().remove("elapsed_s");
    rb.as_object_mut().unwrap().remove("elapsed_s");
    assert_eq!(
        serde_json::to_string(&ra).unwrap(),
        serde_json::to_string(&rb).unwrap()
    );
}
