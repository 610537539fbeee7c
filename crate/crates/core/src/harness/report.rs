use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Value};

use super::{sha256_hex, Manifest, StageStatus, MANIFEST};
use crate::error::{Error, Result};
use crate::io;

const SECTIONS: &[&str] = &["solve", "dissipation", "structure", "degiorgi", "characteristics", "decay"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "md" | "markdown" => Ok(Self::Markdown),
            _ => Err(Error::input(format!("unknown report format `{s}`"))),
        }
    }
}

impl ReportFormat {
    fn file_name(self) -> &'static str {
        match self {
            Self::Json => "report.json",
            Self::Csv => "report.csv",
            Self::Markdown => "report.md",
        }
    }
}

/// Files listed in the manifest that are missing or whose hash changed.
fn damaged_files(dir: &Path, manifest: &Manifest) -> Vec<String> {
    manifest
        .files
        .iter()
        .filter(|f| match std::fs::read(dir.join(&f.path)) {
            Ok(b) => sha256_hex(&b) != f.sha256,
            Err(_) => true,
        })
        .map(|f| f.path.clone())
        .collect()
}

fn section_state(manifest: &Manifest, name: &str) -> (&'static str, Value) {
    match manifest.stage(name) {
        None => ("absent", Value::Null),
        Some(s) => match s.status {
            StageStatus::Ok => ("ok", s.summary.clone()),
            StageStatus::Failed => ("failed", json!({ "error": s.error })),
            StageStatus::Skipped => ("skipped", json!({ "reason": s.error })),
        },
    }
}

/// Report over a run directory; returns the path written.
pub fn emit_report(dir: &Path, format: ReportFormat) -> Result<PathBuf> {
    let manifest: Manifest = io::read_json(&dir.join(MANIFEST))?;
    let damaged = damaged_files(dir, &manifest);
    let complete = damaged.is_empty();
    let out = dir.join(format.file_name());
    let text = match format {
        ReportFormat::Json => {
            let sections: serde_json::Map<String, Value> = SECTIONS
                .iter()
                .map(|&name| {
                    let (state, body) = section_state(&manifest, name);
                    (name.to_string(), json!({ "state": state, "summary": body }))
                })
                .collect();
            serde_json::to_string_pretty(&json!({
                "name": manifest.name,
                "crate_version": manifest.crate_version,
                "config_sha256": manifest.config_sha256,
                "complete": complete,
                "damaged_files": damaged,
                "sections": sections,
                "checks": manifest.checks,
                "all_passed": manifest.all_checks_passed() && complete,
            }))?
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::Format { path: out.clone(), reason: e.to_string() };
            w.write_record(["kind", "name", "value", "detail", "passed"]).map_err(csv_err)?;
            for &name in SECTIONS {
                let (state, _) = section_state(&manifest, name);
                w.write_record(["section", name, "", state, ""]).map_err(csv_err)?;
            }
            for f in &damaged {
                w.write_record(["file", f, "", "missing or modified", "false"]).map_err(csv_err)?;
            }
            for c in &manifest.checks {
                let value = c.value.map(|v| format!("{v:e}")).unwrap_or_default();
                let passed = c.passed.map(|p| p.to_string()).unwrap_or_else(|| "n/a".into());
                w.write_record(["check", &c.name, &value, &c.tolerance, &passed]).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Format { path: out.clone(), reason: e.to_string() })?;
            String::from_utf8(bytes).expect("csv is utf-8")
        }
        ReportFormat::Markdown => {
            let mut s = String::new();
            let _ = writeln!(s, "# Run `{}`\n", manifest.name);
            let _ = writeln!(s, "crate {} / config {}\n", manifest.crate_version, &manifest.config_sha256[..12]);
            if !complete {
                let _ = writeln!(s, "**Incomplete run.** Missing or modified: {}\n", damaged.join(", "));
            }
            for &name in SECTIONS {
                let (state, body) = section_state(&manifest, name);
                let _ = writeln!(s, "## {name}\n");
                match state {
                    "absent" => {
                        let _ = writeln!(s, "_not run_\n");
                    }
                    _ => {
                        let _ = writeln!(s, "status: {state}\n");
                        if let Value::Object(map) = body {
                            for (k, v) in map {
                                let _ = writeln!(s, "- {k}: {v}");
                            }
                            s.push('\n');
                        }
                    }
                }
            }
            if !manifest.checks.is_empty() {
                let _ = writeln!(s, "## checks\n\n| check | value | tolerance | result |\n|---|---|---|---|");
                for c in &manifest.checks {
                    let value = c.value.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
                    let result = match c.passed {
                        Some(true) => "PASS",
                        Some(false) => "FAIL",
                        None => "n/a",
                    };
                    let _ = writeln!(s, "| {} | {} | {} | {} |", c.name, value, c.tolerance, result);
                }
            }
            s
        }
    };
    std::fs::write(&out, text).map_err(|e| Error::io(&out, e))?;
    Ok(out)
}
