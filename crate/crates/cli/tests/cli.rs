use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use tngeo_cli::fit::{fit_decay, fit_entropy};

fn tngeo(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tngeo")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"seed": 8, "geometry": {"kind": "mera", "n": 16, "chi": 2},
            "sweep": {"quantity": "entropy", "l": [1, 2, 4, 6, 8]}, "workers": 4}"#,
    );
    let outs: Vec<_> = ["a", "b"].iter().map(|d| tmp.path().join(d)).collect();
    for o in &outs {
        let r = tngeo(&["run", "--config", &cfg, "--out", o.to_str().unwrap()]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    for f in ["sweep.csv", "report.json", "manifest.json"] {
        let a = std::fs::read(outs[0].join(f)).unwrap();
        assert_eq!(a, std::fs::read(outs[1].join(f)).unwrap(), "{f} differs");
        assert!(!a.is_empty());
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(outs[0].join("report.json")).unwrap()).unwrap();
    assert_eq!(report["points"].as_array().unwrap().len(), 5);
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"seed": 1, "geometry": {"kind": "mps", "n": 16, "chi": 3}}"#);
    let a = tngeo(&["mps", "spectrum", "--config", &cfg]);
    let b = tngeo(&["mps", "spectrum", "--config", &cfg, "--seed", "2"]);
    let c = tngeo(&["mps", "spectrum", "--config", &cfg, "--seed", "1"]);
    assert!(a.status.success());
    assert_ne!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.json", r#"{"geometry": {"kind": "mps", "n": 16, "chi": 3}}"#);
    let r = tngeo(&["build", "--config", &bad]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("seed"));
    assert_eq!(tngeo(&["no-such-command"]).status.code(), Some(2));

    let pts = tmp.path().join("p.csv");
    std::fs::write(&pts, "r,c\n1,1e-20\n2,1e-20\n3,1e-20\n4,1e-20\n5,1e-20\n").unwrap();
    let r = tngeo(&["fit", "decay", "--input", pts.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn graph_and_geodesic_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"seed": 1, "geometry": {"kind": "mps", "n": 64, "chi": 2}}"#);
    let r = tngeo(&["geodesic", "--config", &cfg, "--x1", "3", "--x2", "40", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(v["length"], 38);
    let text = String::from_utf8(tngeo(&["build", "--config", &cfg]).stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("node ")).count(), 64);
}

#[test]
fn table_command_lists_nine_entries() {
    let r = tngeo(&["branch", "classify", "--table", "--format", "csv"]);
    let text = String::from_utf8(r.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.contains("3,surface:2,L^2·log L"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_model_is_scale_invariant(
        ys in prop::collection::vec(0.1f64..5.0, 6),
        c in 0.01f64..100.0,
    ) {
        let pts: Vec<(f64, f64)> = ys.iter().enumerate().map(|(k, &y)| ((2 << k) as f64, y)).collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(l, s)| (l, c * s)).collect();
        let a = fit_entropy(&pts).unwrap();
        let b = fit_entropy(&scaled).unwrap();
        prop_assert_eq!(a.model, b.model);
    }

    #[test]
    fn reports_are_well_formed(xi in 0.5f64..20.0, noise in prop::collection::vec(-0.05f64..0.05, 10)) {
        let pts: Vec<(f64, f64)> = noise.iter().enumerate()
            .map(|(k, e)| { let r = (k + 1) as f64; (r, (-r / xi).exp() * (1.0 + e)) })
            .collect();
        let rep = fit_decay(&pts).unwrap();
        prop_assert!((0.0..=1.0).contains(&rep.r2));
        prop_assert!(rep.margin >= 0.0);
        prop_assert_eq!(rep.points.len(), 10);
        prop_assert_eq!(rep.residuals.len(), 10 - rep.dropped);
    }
}
