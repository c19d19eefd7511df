use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_weingarten"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SPHERE: &str = r#"
[problem]
model = 0
curvature = "sigma(2)^(1/2)"
psi = "1"

[domain]
center = [0.0, 0.0, 1.0]
geodesic_radius = 0.6283185307179586
n_r = 9
n_theta = 16

[data]
boundary = "1"
exact = "1"
"#;

const CAP: &str = r#"
[problem]
model = 1
curvature = "sigma(2)^(1/2)"
psi = "cos(pi/5)/sin(pi/5)"

[domain]
center = [0.0, 0.0, 1.0]
geodesic_radius = 0.6283185307179586
n_r = 9
n_theta = 16

[data]
boundary = "cos(pi/5)/sin(pi/5)"
exact = "cos(pi/5)/sin(pi/5)"
"#;

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn records(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn verify_passes_and_is_deterministic() {
    let a = run(&["verify", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert!(!stdout(&a).contains("FAIL"));
    let b = run(&["verify", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn injected_sign_fault_fails_verification() {
    let o = run(&["verify", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.contains("linearization-fd")).unwrap();
    assert!(line.starts_with("FAIL"), "{out}");
}

#[test]
fn constant_sphere_solves() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sphere.toml", SPHERE);
    let o = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let out = stdout(&o);
    let err: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("sup |u - exact|: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err < 1e-3, "{err}");
    let recs = records(&dir.path().join("sphere.report.jsonl"));
    assert_eq!(recs[0]["record"], "header");
    let summary = recs.last().unwrap();
    assert_eq!(summary["record"], "summary");
    assert_eq!(summary["success"], true);
}

#[test]
fn reports_repeat_apart_from_the_header() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sphere.toml", SPHERE);
    let report = |name: &str| {
        let p = dir.path().join(name);
        let o = run(&["solve", cfg.to_str().unwrap(), "--report", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let text = fs::read_to_string(p).unwrap();
        text.split_once('\n').unwrap().1.to_string()
    };
    assert_eq!(report("a.jsonl"), report("b.jsonl"));
}

#[test]
fn domain_beyond_the_hemisphere_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "big.toml",
        &SPHERE.replace("geodesic_radius = 0.6283185307179586", "geodesic_radius = 1.6"),
    );
    let o = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("hemisphere"), "{}", stderr(&o));
}

#[test]
fn malformed_inputs_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.toml", "[problem]\nmodel = 0\n");
    assert_eq!(run(&["solve", cfg.to_str().unwrap()]).status.code(), Some(2));
    let unknown = write_config(&dir, "unknown.toml", &SPHERE.replace("n_theta = 16", "n_theta = 16\nn_phi = 2"));
    assert_eq!(run(&["solve", unknown.to_str().unwrap()]).status.code(), Some(2));
    let table = dir.path().join("garbage.csv");
    fs::write(&table, "# model=0\nnot,a,field\n1,2\n").unwrap();
    assert_eq!(run(&["curvature", table.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["solve", "/nonexistent/config.toml"]).status.code(), Some(2));
}

#[test]
fn spherical_cap_runs_every_phase_and_curvature_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "cap.toml", CAP);
    let field = dir.path().join("cap.csv");
    let mesh = dir.path().join("cap.obj");
    let o = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--export-field",
        field.to_str().unwrap(),
        "--export-mesh",
        mesh.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(fs::read_to_string(&mesh).unwrap().lines().any(|l| l.starts_with("f ")));

    let recs = records(&dir.path().join("cap.report.jsonl"));
    let steps: Vec<&Value> = recs.iter().filter(|r| r["record"] == "step").collect();
    for phase in ["auxiliary", "spherical", "epsilon_removal"] {
        assert!(steps.iter().any(|s| s["phase"] == phase), "no {phase} steps");
    }
    let last = steps.last().unwrap();
    assert!(last["kappa_min"].as_f64().unwrap() > 0.0);

    let table = dir.path().join("kappa.csv");
    let k = run(&["curvature", field.to_str().unwrap(), "-o", table.to_str().unwrap()]);
    assert_eq!(k.status.code(), Some(0), "{}", stderr(&k));
    let summary = stdout(&k);
    assert!(!summary.contains("NOT"), "{summary}");

    // the recomputed table agrees with the curvatures stored at export time
    let exported = fs::read_to_string(&field).unwrap();
    let exported: Vec<&str> = exported.lines().filter(|l| !l.starts_with('#')).collect();
    let recomputed = fs::read_to_string(&table).unwrap();
    let recomputed: Vec<&str> = recomputed.lines().collect();
    assert_eq!(exported.len(), recomputed.len());
    let col = |header: &str, name: &str| header.split(',').position(|c| c == name).unwrap();
    let (e1, r1) = (col(exported[0], "kappa1"), col(recomputed[0], "kappa1"));
    let (mut kmin, mut kmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for (a, b) in exported[1..].iter().zip(&recomputed[1..]) {
        let a: Vec<&str> = a.split(',').collect();
        let b: Vec<&str> = b.split(',').collect();
        for o in 0..2 {
            let x: f64 = a[e1 + o].parse().unwrap();
            let y: f64 = b[r1 + o].parse().unwrap();
            if x.is_nan() {
                assert!(y.is_nan());
                continue;
            }
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}");
            kmin = kmin.min(y);
            kmax = kmax.max(y);
        }
    }
    assert!((kmin - last["kappa_min"].as_f64().unwrap()).abs() <= 1e-12);
    assert!((kmax - last["kappa_max"].as_f64().unwrap()).abs() <= 1e-12);
}

#[test]
fn non_convex_field_is_flagged() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sphere.toml", SPHERE);
    let field = dir.path().join("sphere.csv");
    let o = run(&["solve", cfg.to_str().unwrap(), "--export-field", field.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));

    // bend the graph into a saddle: u_tilde *= 1 + 4 (y1^2 - y2^2)
    let text = fs::read_to_string(&field).unwrap();
    let mut lines = text.lines();
    let mut out = String::new();
    let mut header = None;
    for line in lines.by_ref() {
        out.push_str(line);
        out.push('\n');
        if !line.starts_with('#') {
            header = Some(line.to_string());
            break;
        }
    }
    let header = header.unwrap();
    let idx = |name: &str| header.split(',').position(|c| c == name).unwrap();
    let (iy1, iy2, iut, iu) = (idx("y1"), idx("y2"), idx("u_tilde"), idx("u"));
    for line in lines {
        let mut cells: Vec<String> = line.split(',').map(String::from).collect();
        let y1: f64 = cells[iy1].parse().unwrap();
        let y2: f64 = cells[iy2].parse().unwrap();
        let s = 1.0 + 4.0 * (y1 * y1 - y2 * y2);
        for i in [iut, iu] {
            let v: f64 = cells[i].parse().unwrap();
            cells[i] = (v * s).to_string();
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let saddle = dir.path().join("saddle.csv");
    fs::write(&saddle, out).unwrap();

    let k = run(&["curvature", saddle.to_str().unwrap()]);
    assert_eq!(k.status.code(), Some(0), "{}", stderr(&k));
    assert!(stderr(&k).contains("NOT strictly locally convex"), "{}", stderr(&k));
    assert!(stdout(&k).starts_with("ring,sector,"));
}
