use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn radial(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radial")).args(args).output().expect("spawn radial")
}

fn ok(args: &[&str]) -> String {
    let out = radial(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn portrait_svg_is_byte_identical_across_runs() {
    let a = ok(&["portrait", "--d", "1.5"]);
    let b = ok(&["portrait", "--d", "1.5"]);
    assert_eq!(a, b);
}

#[test]
fn portrait_svg_is_well_formed() {
    let svg = ok(&["portrait", "--d", "1.5"]);
    assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<svg").count(), 1);
    assert_eq!(svg.matches("<g ").count(), svg.matches("</g>").count());
    assert_eq!(svg.matches("class=\"unstable-plus\"").count(), 1);
    let stable = svg.matches("class=\"stable-plus\"").count() + svg.matches("class=\"stable-minus\"").count();
    assert!(stable >= 2, "{stable} stable branches");
    assert!(svg.matches("class=\"trajectory\"").count() >= 1);
    assert_eq!(svg.matches("class=\"fixed-point\"").count(), 3);
    assert!(!svg.contains("NaN") && !svg.contains("inf"));
}

#[test]
fn overlay_shows_shifted_stable_branches() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["trace", "--format", "svg", "--kmax", "2", "--samples", "80", "--out", d]);
    let svg = read(&dir.path().join("overlay.svg"));
    for j in 0..=2 {
        assert!(svg.contains(&format!("class=\"shifted-{j}\"")), "missing shifted-{j}");
    }
}

#[test]
fn structure_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["structure", "--kmax", "2", "--out", d]);
    let text = read(&dir.path().join("structure.json"));
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema"], 1);
    let a: Vec<f64> = v["A"].as_array().unwrap().iter().map(|c| c["value"].as_f64().unwrap()).collect();
    assert_eq!(a.len(), 3);
    assert!(a.windows(2).all(|w| w[0] < w[1]), "{a:?}");
    assert!((a[0] - 1.2074366215).abs() < 1e-6);
    // re-serializing the parsed report reproduces the same bytes
    let again = radial_cli::output::canonical_json(&v).unwrap();
    assert_eq!(again, text);
    let stdout = ok(&["structure", "--kmax", "2"]);
    assert_eq!(stdout, text);
}

#[test]
fn csv_headers() {
    let traj = ok(&["integrate", "--d", "1.0"]);
    assert_eq!(traj.lines().next(), Some("t,x,y,phi,rho,u,du,r"));
    assert!(traj.lines().count() > 10);
    let curve = ok(&["trace", "--side", "stable-minus", "--samples", "12"]);
    assert_eq!(curve.lines().next(), Some("param,Theta,R,x,y"));
    // adaptive refinement may add points between the requested ones
    assert!(curve.lines().count() > 12);
}

#[test]
fn integrate_writes_events_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["integrate", "--d", "1.5", "--out", d]);
    assert!(dir.path().join("trajectory.csv").exists());
    let ev: Value = serde_json::from_str(&read(&dir.path().join("trajectory.events.json"))).unwrap();
    assert_eq!(ev["schema"], 1);
    assert!(ev["events"].is_array());
}

#[test]
fn exponents_and_shoot_emit_json() {
    let e: Value = serde_json::from_str(&ok(&["exponents", "--n", "3", "--eta", "0", "--beta", "0"])).unwrap();
    assert_eq!(e["sobolev"].as_f64(), Some(6.0));
    assert_eq!(e["serrin"].as_f64(), Some(4.0));
    let s: Value = serde_json::from_str(&ok(&["shoot", "--d", "1.0"])).unwrap();
    assert_eq!(s["label"], "R0s");
}

#[test]
fn config_file_selects_the_instance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[problem]\npreset = \"bubble\"\n").unwrap();
    let s: Value = serde_json::from_str(&ok(&["--config", cfg.to_str().unwrap(), "shoot", "--d", "1.0"])).unwrap();
    assert_eq!(s["class"]["end_behavior"], "fast_decay");
}

#[test]
fn errors_exit_nonzero_with_empty_stdout() {
    for args in [
        &["shoot", "--d", "1", "--format", "svg"][..],
        &["--config", "/nonexistent/run.toml", "validate"][..],
        &["trace", "--param-max", "-1"][..],
        &["exponents", "--n", "4", "--eta", "5"][..],
        &["bogus"][..],
    ] {
        let out = radial(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(out.stdout.is_empty(), "{args:?} wrote to stdout");
        assert!(!out.stderr.is_empty());
    }
}
