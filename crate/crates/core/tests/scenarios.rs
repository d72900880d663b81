use dualwave::scenario::{parse_config, run_scenario, Section};
use serde_json::Value;

fn config(text: &str, dir: &std::path::Path) -> dualwave::scenario::ScenarioConfig {
    let mut cfg = parse_config(text).unwrap().remove(0);
    cfg.output = dir.to_path_buf();
    cfg
}

fn without_timings(path: &std::path::Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let obj = v.as_object_mut().unwrap();
    obj.remove("timings");
    obj["config"].as_object_mut().unwrap().remove("output");
    v
}

#[test]
fn free_gaussian_runs_are_reproducible() {
    let text = r#"
scenario = "free_gaussian"
[grid]
n = 512
[ensemble]
n = 1000
seed = 42
"#;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_scenario(&config(text, a.path())).unwrap();
    let rb = run_scenario(&config(text, b.path())).unwrap();
    assert!(!ra.failed(), "{ra:#?}");
    assert_eq!(without_timings(&a.path().join("report.json")), without_timings(&b.path().join("report.json")));
    for f in ra.files.iter().filter(|f| f.as_str() != "report.json") {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let Some(Section::Ok(sc)) = &rb.semiclassical else { panic!() };
    assert!(sc.l2_error < 1e-6, "{}", sc.l2_error);
}

#[test]
fn well_eigenstate_shows_the_mismatch() {
    let text = r#"
scenario = "well_eigenstate"
engines = ["exact", "bohm", "soliton"]
[ensemble]
n = 1000
"#;
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&config(text, dir.path())).unwrap();
    let bohm = report.bohm.as_ref().and_then(Section::ok).expect("bohm ran");
    let soliton = report.soliton.as_ref().and_then(Section::ok).expect("soliton ran");
    assert!(bohm.probe_path_length < 1e-9, "{}", bohm.probe_path_length);
    // One classical period of the billiard covers 2L.
    assert!((soliton.path_length - 2.0).abs() < 1e-9, "{}", soliton.path_length);
    assert_eq!(bohm.crossing_violations, 0);
}

#[test]
fn harmonic_coherent_semiclassics_is_exact() {
    let text = r#"
scenario = "harmonic_coherent"
engines = ["exact", "semiclassical"]
"#;
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&config(text, dir.path())).unwrap();
    let sc = report.semiclassical.as_ref().and_then(Section::ok).expect("semiclassical ran");
    assert!(sc.l2_error < 1e-6, "{}", sc.l2_error);
}
