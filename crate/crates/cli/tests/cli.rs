use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const LINEAR: &str = r#"{
  "dim": 2, "p": 3.0, "mu": 0.0, "B": 2.0,
  "n": 64, "L": 8.0,
  "dt": 0.05, "t_end": 1.5707963267948966,
  "observable_stride": 1, "snapshot_stride": 10,
  "initial": {"kind": "gaussian", "width": 1.0, "center": [0.5, -0.3, 0.0], "momentum": [0.4, 0.2, 0.0]}
}"#;

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn magnls(args: &[&str], cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magnls"))
        .args(&args[..1])
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(&args[1..])
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn larmor_evolve_keeps_observables_flat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "c.json", LINEAR);
    let out = dir.path().join("out");
    let o = magnls(&["evolve"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("observables.csv")).unwrap();
    assert!(csv.starts_with("t,mass,T_S,E_S,F_S,L3,g,gdot,rho_sq,Lp1,boundary_mass\n"));
    for name in ["mass", "E_S", "F_S", "L3"] {
        let v = column(&csv, name);
        let spread = v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max);
        assert!(spread < 1e-10 * v[0].abs().max(1.0), "{name}: {spread:e}");
    }
    let t = column(&csv, "t");
    assert!((t.last().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    let run: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["mode"], "evolve");
    assert_eq!(run["report"]["detected"], false);
    let snaps = run["snapshots"].as_array().unwrap();
    // 32 steps with stride 10: steps 0, 10, 20, 30.
    assert_eq!(snaps.len(), 4);
    for s in snaps {
        assert!(out.join(s.as_str().unwrap()).is_file());
    }
}

#[test]
fn unknown_key_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "c.json", &LINEAR.replace("\"mu\"", "\"mew\""));
    let o = magnls(&["evolve"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mew"), "{}", stderr(&o));
}

#[test]
fn malformed_override_and_missing_file_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "c.json", LINEAR);
    let out = dir.path().join("out");
    let o = magnls(&["evolve", "--override", "dt"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dt"));
    let o = magnls(&["evolve", "--override", "dt=-1.0"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dt"));
    let o = magnls(&["evolve"], &dir.path().join("missing.json"), &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_field_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "c.json", LINEAR);
    let o = magnls(&["blowup-scan", "--override", "b_list=[]", "--override", "mu=-1.0"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn strichartz_check_needs_gaussian_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "c.json", LINEAR);
    let o = magnls(&["strichartz-check", "--override", r#"initial={"kind":"paper-example"}"#], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unresolved_initial_state_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "c.json", LINEAR);
    let o = magnls(&["evolve", "--override", "initial.width=3.0", "--override", "L=4.0"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("not resolved"));
}

#[test]
fn bad_thread_count_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "c.json", LINEAR);
    let o = Command::new(env!("CARGO_BIN_EXE_magnls"))
        .args(["evolve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .env("MAGNLS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("MAGNLS_THREADS"));
}

#[test]
fn seed_controls_noise_and_overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "c.json", &LINEAR.replace("\"momentum\": [0.4, 0.2, 0.0]", "\"momentum\": [0.4, 0.2, 0.0], \"noise\": 0.1"));
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["evolve", "--override", "t_end=0.2"];
        args.extend_from_slice(extra);
        let o = magnls(&args, &cfg, &out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (std::fs::read(out.join("observables.csv")).unwrap(), std::fs::read_to_string(out.join("run.json")).unwrap())
    };
    let (a, ja) = run("a", &["--seed", "7"]);
    let (b, _) = run("b", &["--seed", "7"]);
    let (c, _) = run("c", &["--seed", "8"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    let ja: serde_json::Value = serde_json::from_str(&ja).unwrap();
    assert_eq!(ja["config"]["seed"], 7);
    assert_eq!(ja["config"]["t_end"], 0.2);
}

#[test]
fn virial_and_certificate_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "c.json", &LINEAR.replace("\"mu\": 0.0", "\"mu\": -1.0"));
    let out = dir.path().join("virial");
    let o = magnls(&["virial-check", "--override", "dt=0.005", "--override", "t_end=0.3", "--override", "snapshot_stride=0"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("virial.json")).unwrap()).unwrap();
    assert!(v["fine"]["max_gap"].as_f64().unwrap() < v["coarse"]["max_gap"].as_f64().unwrap());
    assert!(std::fs::read_to_string(out.join("virial.csv")).unwrap().starts_with("t,gdd,rhs,gap\n"));

    let out = dir.path().join("cert");
    let o = magnls(&["certify-example", "--override", "n=256", "--override", "L=0.5"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let c: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(c["comparison"]["window_matches"], false);
    assert!((c["radial"]["l3"].as_f64().unwrap() + 1.0).abs() < 1e-8);
}
