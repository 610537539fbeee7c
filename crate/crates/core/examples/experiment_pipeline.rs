//! Full pipeline from a preset: run directory, manifest and reports.

use conslaw::harness::{emit_report, preset, run_experiment, ReportFormat, PRESETS};

fn main() -> conslaw::Result<()> {
    let out = std::env::temp_dir().join("conslaw-runs");
    for name in PRESETS {
        let cfg = preset(name, &out).expect("preset");
        let (dir, manifest) = run_experiment(&cfg)?;
        emit_report(&dir, ReportFormat::Markdown)?;
        let checks: Vec<String> = manifest
            .checks
            .iter()
            .map(|c| format!("{}={}", c.name, c.passed == Some(true)))
            .collect();
        println!("{name:<28} {} files, {}", manifest.files.len(), checks.join(" "));
    }
    println!("reports under {}", out.display());
    Ok(())
}
