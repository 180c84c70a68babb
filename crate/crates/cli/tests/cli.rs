use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn hartogs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hartogs")).args(args).output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn einstein_ball_exits_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ball.cfg", "base.kind = ball\nbase.dims = 2\nbase.mu = 1\nfiber.dim = 1\n");
    let out = hartogs(&["check-einstein", "--config", &cfg, "--samples", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["schema"], "1");
    assert_eq!(v["is_einstein"], true);
}

#[test]
fn fock_is_not_einstein() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "fock.cfg", "base.kind = fock\nbase.dims = 1\n");
    let out = hartogs(&["check-einstein", "--config", &cfg, "--samples", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["is_einstein"], false);
}

#[test]
fn disc_is_extremal() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "disc.cfg", "base.kind = polydisc\nbase.dims = 1\n");
    let out = hartogs(&["check-extremal", "--config", &cfg, "--samples", "10"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn immersion_into_hyperbolic_space_fails_above_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "disc.cfg", "base.kind = polydisc\nbase.dims = 1\n");
    let out = hartogs(&["immersion", "--config", &cfg, "--target", "CH", "--h", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert_eq!(v["answer"], "not_exists");
    assert_eq!(v["cross_check"]["agreement"], true);
    assert_eq!(v["cross_check"]["first_failure"]["i"], 2);
    assert_eq!(v["cross_check"]["first_failure"]["sigma"], 2);

    let out = hartogs(&["immersion", "--config", &cfg, "--target", "CH", "--h", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["answer"], "exists");
}

#[test]
fn several_scales_give_a_list() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "disc.cfg", "base.kind = polydisc\nbase.dims = 1\n");
    let out = hartogs(&["immersion", "--config", &cfg, "--target", "C", "--h", "0.5,1,2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["verdicts"].as_array().unwrap().len(), 3);
}

#[test]
fn fixtures_output_is_reproducible() {
    let a = hartogs(&["fixtures"]);
    let b = hartogs(&["fixtures"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["all_passed"], true);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 10);
}

#[test]
fn config_errors_carry_line_numbers() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.cfg", "base.kind = ball\n# comment\nbase.colour = red\n");
    let out = hartogs(&["curvature", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.cfg:3:"), "{err}");
    assert!(err.contains("base.colour"), "{err}");
}

#[test]
fn missing_config_is_an_error() {
    let out = hartogs(&["curvature"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rank_two_cartan_series_is_unsupported() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c22.cfg", "base.kind = cartan_type_I\nbase.shape = 2, 2\n");
    let out = hartogs(&["diastasis", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rank >= 2"));

    // curvature still works on such a base; mu = 1 is not the Einstein exponent
    let out = hartogs(&["check-einstein", "--config", &cfg, "--samples", "10"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["domain"]["tau_exact"], "4/1");
}

#[test]
fn curvature_csv_is_reproducible_and_consistent() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ball.cfg", "base.kind = ball\nbase.dims = 2\nbase.mu = 3/2\nfiber.dim = 2\n");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = hartogs(&[
            "curvature", "--config", &cfg, "--samples", "8", "--seed", "7", "--format", "csv", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    check_csv(&text, 8);
}

fn check_csv(text: &str, rows: usize) {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (dc, dd) = (col("det_closed"), col("det_direct"));
    let (st, sc) = (col("s_trace"), col("s_closed"));
    let body: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(body.len(), rows);
    for r in &body {
        assert!((r[dc] - r[dd]).abs() <= 1e-8 * r[dc].abs());
        assert!((r[st] - r[sc]).abs() <= 1e-8 * r[sc].abs().max(1.0));
    }
}

#[test]
fn report_covers_every_target() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ball.cfg", "base.kind = ball\nbase.dims = 1\nscale.h = 0.5\n");
    let out_path = dir.path().join("report.json");
    let out = hartogs(&["report", "--config", &cfg, "--samples", "10", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(Path::new(&out_path)).unwrap()).unwrap();
    assert_eq!(v["immersion"].as_array().unwrap().len(), 6);
    assert_eq!(v["diastasis"].as_array().unwrap().len(), 3);
    assert_eq!(v["curvature"]["is_einstein"], true);
}
