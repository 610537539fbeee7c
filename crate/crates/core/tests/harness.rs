use std::path::Path;

use conslaw::harness::{
    emit_report, load_run, preset, run_experiment, Check, DissipationStage, ExperimentConfig,
    InitialCondition, Manifest, ReportFormat, StageStatus, MANIFEST, PRESETS,
};
use conslaw::io::read_json;

fn small_shock(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        "small_shock",
        "burgers",
        InitialCondition::Riemann { ul: 1.0, ur: 0.0, x0: 0.0 },
        128,
        0.5,
    );
    c.out_dir = out.to_path_buf();
    c.stages.dissipation = Some(DissipationStage { levels: 16 });
    c.checks = vec![Check::DissipationTotal { expected: 0.5 / 12.0, rel_tol: 0.15 }];
    c
}

fn hashes(m: &Manifest) -> Vec<(String, String)> {
    m.files.iter().map(|f| (f.path.clone(), f.sha256.clone())).collect()
}

#[test]
fn every_preset_validates_and_names_itself() {
    let dir = tempfile::tempdir().unwrap();
    for name in PRESETS {
        let cfg = preset(name, dir.path()).unwrap();
        assert_eq!(&cfg.name, name);
        cfg.validate().unwrap();
    }
    assert!(preset("nope", dir.path()).is_none());
}

#[test]
fn bad_flux_is_rejected_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_shock(dir.path());
    cfg.flux = "cubic".into();
    assert!(run_experiment(&cfg).is_err());
    assert!(!dir.path().join("small_shock").exists());
}

#[test]
fn non_power_of_two_grids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_shock(dir.path());
    cfg.n = 100;
    assert!(cfg.validate().is_err());
}

#[test]
fn config_json_round_trip_keeps_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = preset("composite", dir.path()).unwrap();
    let text = serde_json::to_string_pretty(&cfg).unwrap();
    let mut back: ExperimentConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back.out_dir, Path::new("runs"));
    back.out_dir = cfg.out_dir.clone();
    assert_eq!(back, cfg);
    assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
    let mut moved = cfg.clone();
    moved.out_dir = "elsewhere".into();
    assert_eq!(moved.hash().unwrap(), cfg.hash().unwrap());
}

#[test]
fn initial_conditions_parse_from_short_keys() {
    let ic: InitialCondition = "riemann:1,0,0.25".parse().unwrap();
    assert_eq!(ic, InitialCondition::Riemann { ul: 1.0, ur: 0.0, x0: 0.25 });
    assert!("riemann:1".parse::<InitialCondition>().is_err());
    assert!("wiggle:1".parse::<InitialCondition>().is_err());
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |out: &Path, threads: usize| {
        let cfg = preset("shock_dissipation", out).unwrap();
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap())
    };
    let (da, ma) = run(a.path(), 1);
    let (db, mb) = run(b.path(), 4);
    assert!(ma.all_checks_passed());
    assert_eq!(hashes(&ma), hashes(&mb));
    assert_eq!(
        std::fs::read(da.join(MANIFEST)).unwrap(),
        std::fs::read(db.join(MANIFEST)).unwrap()
    );
}

#[test]
fn small_run_passes_and_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_shock(dir.path());
    let (run_dir, m) = run_experiment(&cfg).unwrap();
    assert!(m.all_checks_passed(), "{:?}", m.checks);
    let (mut back, frames) = load_run(&run_dir).unwrap();
    back.out_dir = cfg.out_dir.clone();
    assert_eq!(back, cfg);
    assert!(!frames.is_empty());
    let on_disk: Manifest = read_json(&run_dir.join(MANIFEST)).unwrap();
    assert_eq!(hashes(&on_disk), hashes(&m));
    assert_eq!(on_disk.checks, m.checks);
}

#[test]
fn report_marks_stages_that_did_not_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_shock(dir.path());
    cfg.stages.dissipation = None;
    cfg.checks.clear();
    let (run_dir, _) = run_experiment(&cfg).unwrap();
    let path = emit_report(&run_dir, ReportFormat::Json).unwrap();
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(rep["complete"], true);
    assert_eq!(rep["sections"]["solve"]["state"], "ok");
    for s in ["dissipation", "structure", "degiorgi", "characteristics", "decay"] {
        assert_eq!(rep["sections"][s]["state"], "absent", "{s}");
    }
}

#[test]
fn checks_on_missing_stages_do_not_pass() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_shock(dir.path());
    cfg.stages.dissipation = None;
    let (_, m) = run_experiment(&cfg).unwrap();
    assert_eq!(m.checks[0].passed, None);
    assert!(!m.all_checks_passed());
    assert_eq!(m.stage("solve").unwrap().status, StageStatus::Ok);
}

#[test]
fn damaged_runs_report_as_incomplete() {
    let dir = tempfile::tempdir().unwrap();
    let (run_dir, m) = run_experiment(&small_shock(dir.path())).unwrap();
    let victim = &m.files.iter().find(|f| f.path.ends_with(".csv")).unwrap().path;
    std::fs::write(run_dir.join(victim), "tampered").unwrap();
    let md = std::fs::read_to_string(emit_report(&run_dir, ReportFormat::Markdown).unwrap()).unwrap();
    assert!(md.contains("Incomplete run") && md.contains(victim.as_str()));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(emit_report(&run_dir, ReportFormat::Json).unwrap()).unwrap())
            .unwrap();
    assert_eq!(json["complete"], false);
    assert_eq!(json["all_passed"], false);
    let csv = std::fs::read_to_string(emit_report(&run_dir, ReportFormat::Csv).unwrap()).unwrap();
    assert!(csv.contains("missing or modified"));
}
