use std::process::{Command, Output};

use serde_json::Value;

fn grushin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grushin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// Rows of a CSV artifact after the config comment and the header.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config {"));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn help_lists_every_subcommand() {
    let out = grushin(&["--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for sub in [
        "curvature",
        "embed",
        "geodesic",
        "wavefront",
        "conjugate",
        "classify",
        "weyl",
        "deficiency",
        "tube-check",
        "evolve",
        "bc-sensitivity",
    ] {
        assert!(text.contains(sub), "missing {sub}");
    }
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(grushin(&["curvature", "--x", "2"]).status.code(), Some(2));
    assert_eq!(
        grushin(&["curvature", "--alpha", "1", "--winded", "2", "--x", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(grushin(&["frobnicate"]).status.code(), Some(2));
    let zero_energy = grushin(&[
        "conjugate",
        "--alpha",
        "1",
        "--x0",
        "0",
        "--px",
        "0",
        "--py",
        "0",
        "--t-max",
        "1",
    ]);
    assert_eq!(zero_energy.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_with_three_and_one_line() {
    let out = grushin(&["curvature", "--alpha", "1", "--x", "0.5"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: "));
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(out.stdout.is_empty());
}

#[test]
fn curvature_csv_matches_closed_forms() {
    let out = grushin(&["curvature", "--alpha", "1", "--x", "2,3"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(header, ["x", "gaussian", "mean", "effective_potential"]);
    for row in rows {
        let x = row[0];
        let x4 = x.powi(4);
        assert!((row[1] + 2.0 / (x * x)).abs() < 1e-15);
        assert!((row[2] - (x4 - 3.0) / (2.0 * x * (x4 - 1.0).sqrt())).abs() < 1e-14);
        assert!((row[3] - (-row[1] + row[2] * row[2])).abs() < 1e-13);
    }
}

#[test]
fn negative_alpha_is_accepted() {
    let out = grushin(&["curvature", "--alpha", "-2", "--x", "0.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn outputs_are_reproducible_and_file_matches_stdout() {
    let args = [
        "geodesic", "--alpha", "1", "--x0", "0.25", "--px", "0.6", "--py", "3.2", "--T", "1.3", "--steps",
        "500",
    ];
    let a = grushin(&args);
    let b = grushin(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("geodesic.csv");
    let mut with_out: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap();
    with_out.extend(["--out", p]);
    let c = grushin(&with_out);
    assert!(c.status.success());
    assert_eq!(std::fs::read(&path).unwrap(), a.stdout);
}

#[test]
fn embed_obj_is_consistent() {
    let out = grushin(&[
        "embed", "--winded", "2", "--x-min", "0.6", "--x-max", "2", "--nx", "5", "--ny", "8",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let vertices = text.lines().filter(|l| l.starts_with("v ")).count();
    let faces: Vec<Vec<usize>> = text
        .lines()
        .filter(|l| l.starts_with("f "))
        .map(|l| l[2..].split(' ').map(|i| i.parse().unwrap()).collect())
        .collect();
    assert_eq!(vertices, 40);
    assert!(!faces.is_empty());
    assert!(faces.iter().flatten().all(|&i| (1..=vertices).contains(&i)));
}

#[test]
fn classify_reports_both_ends() {
    let v = json(&grushin(&[
        "classify",
        "--alpha",
        "1",
        "--quantization",
        "intrinsic",
        "--k",
        "2",
    ]));
    let result = v["result"].as_array().unwrap();
    assert_eq!(result.len(), 2);
    assert!(result.iter().all(|r| r["class"] == "limit_point"));
    assert_eq!(result[1]["endpoint"], "inf");
    assert_eq!(v["config"]["classify"]["fiber"]["k"], 2);
}

#[test]
fn extrinsic_fiber_is_limit_circle_at_the_rim() {
    let v = json(&grushin(&[
        "classify",
        "--alpha",
        "1",
        "--quantization",
        "extrinsic",
        "--endpoint",
        "1",
    ]));
    assert_eq!(v["result"][0]["class"], "limit_circle");
    let w = json(&grushin(&[
        "weyl",
        "--alpha",
        "1",
        "--quantization",
        "extrinsic",
        "--endpoint",
        "1",
    ]));
    assert_eq!(w["result"]["analytic"]["class"], "limit_circle");
    assert_eq!(w["result"]["weyl"]["verdict"], "limit_circle");
}

#[test]
fn deficiency_verdicts() {
    let free = json(&grushin(&[
        "deficiency",
        "--alpha",
        "1",
        "--quantization",
        "intrinsic",
    ]));
    assert_eq!(free["result"]["essentially_self_adjoint"], true);
    assert_eq!(free["result"]["fibers"].as_array().unwrap().len(), 11);
    let ext = json(&grushin(&[
        "deficiency",
        "--alpha",
        "1",
        "--quantization",
        "extrinsic",
        "--k-min",
        "-1",
        "--k-max",
        "1",
    ]));
    assert_eq!(ext["result"]["essentially_self_adjoint"], false);
}

#[test]
fn conjugate_time_from_the_singular_set() {
    // first positive root of tan t = t
    let v = json(&grushin(&[
        "conjugate",
        "--alpha",
        "1",
        "--x0",
        "0",
        "--px",
        "1",
        "--py",
        "1",
        "--t-max",
        "6",
    ]));
    let t = v["result"]["conjugate_time"].as_f64().unwrap();
    assert!((t - 4.493409457909064).abs() < 1e-6, "{t}");
}

#[test]
fn evolve_writes_snapshots() {
    let out = grushin(&[
        "evolve",
        "--alpha",
        "1",
        "--quantization",
        "intrinsic",
        "--k",
        "1",
        "--x-min",
        "0.5",
        "--x-max",
        "3",
        "--n",
        "101",
        "--T",
        "0.5",
        "--equation",
        "schrodinger",
        "--save-every",
        "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // one row per grid point, one column per snapshot time
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(header[0], "t");
    let times: Vec<f64> = header[1..].iter().map(|t| t.parse().unwrap()).collect();
    assert_eq!(times[0], 0.0);
    assert!((times.last().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r.len() == times.len() + 1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("norm drift"));
}

#[test]
fn tube_check_csv() {
    let out = grushin(&[
        "tube-check",
        "--alpha",
        "1",
        "--x-min",
        "1.5",
        "--x-max",
        "3",
        "--nodes",
        "32",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().skip(2).count(), 3);
}

#[test]
fn bc_sensitivity_rejects_regular_far_end_on_wrong_side() {
    let out = grushin(&[
        "bc-sensitivity",
        "--alpha",
        "1",
        "--quantization",
        "extrinsic",
        "--endpoint",
        "1",
        "--far-end",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
