use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dualwave(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dualwave"));
    cmd.args(args);
    match workers {
        Some(w) => cmd.env("DUALWAVE_WORKERS", w),
        None => cmd.env_remove("DUALWAVE_WORKERS"),
    };
    cmd.output().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn config_errors_exit_with_one() {
    let out = dualwave(&[], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario"));

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    fs::write(&file, "scenario = \"free_gaussian\"\n[grid]\nn = 1024\nspacing = 0.1\n").unwrap();
    let out = dualwave(&["--config", path(&file)], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let out = dualwave(&["--scenario", "free_gaussian", "--hbar", "-1"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.hbar"));

    let out = dualwave(&["--scenario", "free_gaussian"], Some("none"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn harmonic_run_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dualwave(&["--scenario", "harmonic_coherent", "--engines", "exact,semiclassical", "--out", path(dir.path())], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["semiclassical"]["status"], "ok");
    assert!(r["semiclassical"]["l2_error"].as_f64().unwrap() < 1e-6);
    assert!(r["bohm"].is_null() && r["soliton"].is_null());
    assert!(dir.path().join("semiclassical.csv").exists());
}

#[test]
fn engine_failure_exits_with_two() {
    // Every path refocuses at half a period: the semiclassical engine fails
    // while the exact one still reports.
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("focal.toml");
    fs::write(&file, "scenario = \"harmonic_coherent\"\nengines = [\"exact\", \"semiclassical\"]\n[time]\nduration = 3.141592653589793\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = dualwave(&["--config", path(&file), "--out", path(&out_dir)], None);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out_dir);
    assert_eq!(r["exact"]["status"], "ok");
    assert_eq!(r["semiclassical"]["status"], "failed");
    assert!(r["semiclassical"]["error"].as_str().unwrap().contains("caustic"));
}

#[test]
fn sweep_expands_into_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dualwave(
        &["--scenario", "well_packet", "--engines", "exact,semiclassical", "--sweep", "model.hbar=0.2,0.1", "--out", path(dir.path())],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (a, b) = (report(&dir.path().join("run_000")), report(&dir.path().join("run_001")));
    assert_eq!(a["config"]["model"]["hbar"], 0.2);
    assert_eq!(b["config"]["model"]["hbar"], 0.1);
    assert_ne!(a["config_hash"], b["config_hash"]);
    assert!(!dir.path().join("run_002").exists());
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let (one, many) = (dir.path().join("one"), dir.path().join("many"));
    let args = |d: &Path| {
        vec!["--scenario", "free_gaussian", "--seed", "11", "--engines", "exact,bohm,soliton", "--out"]
            .into_iter()
            .map(String::from)
            .chain([d.to_str().unwrap().to_string()])
            .collect::<Vec<_>>()
    };
    for (d, w) in [(&one, "1"), (&many, "4")] {
        let a = args(d);
        let out = dualwave(&a.iter().map(String::as_str).collect::<Vec<_>>(), Some(w));
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["bohm_ensemble.csv", "soliton_probe.csv", "exact_final.csv", "exact_frames.bin"] {
        assert_eq!(fs::read(one.join(name)).unwrap(), fs::read(many.join(name)).unwrap(), "{name}");
    }
    let (mut a, mut b) = (report(&one), report(&many));
    for r in [&mut a, &mut b] {
        let o = r.as_object_mut().unwrap();
        o.remove("timings");
        o["config"].as_object_mut().unwrap().remove("output");
    }
    assert_eq!(a, b);
}
