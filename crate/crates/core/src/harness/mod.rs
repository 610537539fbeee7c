//! Experiment orchestration: JSON configs, run directories with hashed
//! manifests, reports, and the acceptance driver.

pub mod acceptance;
mod config;
mod report;

pub use config::{
    Check, CharacteristicsStage, DecayStage, DegiorgiStage, DissipationStage, Domain,
    ExperimentConfig, InitialCondition, SnapshotSpec, Stages, StructureStage, Threshold,
};
pub use report::{emit_report, ReportFormat};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::characteristics::backward_characteristic;
use crate::decay::{decay_experiment_at, fit_decay_exponent, log_times, DecayFit, DecaySeries};
use crate::degiorgi::{truncation_ladder, Ball, TruncationLadder};
use crate::error::{Error, Result};
use crate::flux::FluxSpec;
use crate::grid::ScalarField;
use crate::io;
use crate::kinetic::{default_levels, entropy_dissipation, DissipationMeasure};
use crate::solver::{solve, Snapshots, Trajectory};
use crate::structure::{auto_threshold, blowup_trace, grid_floor, jump_set, JumpMask, ShockFit};

pub const MANIFEST: &str = "manifest.json";
pub const RUN_CONFIG: &str = "run.json";
pub const FRAMES: &str = "frames.clfr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: StageStatus,
    pub error: Option<String>,
    pub summary: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: Option<f64>,
    pub tolerance: String,
    /// `None` when the stage the check reads did not run.
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub crate_version: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub stages: Vec<StageRecord>,
    pub checks: Vec<CheckRecord>,
    pub files: Vec<FileRecord>,
}

impl Manifest {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed == Some(true))
            && self.stages.iter().all(|s| s.status != StageStatus::Failed)
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn file_record(dir: &Path, name: &str) -> Result<FileRecord> {
    let path = dir.join(name);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(FileRecord {
        path: name.to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

/// Stage outputs kept in memory for the checks.
#[derive(Default)]
struct Products {
    trajectory: Option<Trajectory>,
    measure: Option<DissipationMeasure>,
    mask: Option<JumpMask>,
    fits: Vec<ShockFit>,
    ladder: Option<(TruncationLadder, f64)>,
    polygon: Option<(f64, f64, f64, f64)>,
    decay: Option<(DecaySeries, DecayFit)>,
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    flux: FluxSpec,
    dir: PathBuf,
    files: Vec<String>,
    stages: Vec<StageRecord>,
    products: Products,
}

impl Runner<'_> {
    fn record(&mut self, stage: &str, outcome: Result<Value>) {
        let rec = match outcome {
            Ok(summary) => StageRecord {
                stage: stage.into(),
                status: StageStatus::Ok,
                error: None,
                summary,
            },
            Err(e) => StageRecord {
                stage: stage.into(),
                status: StageStatus::Failed,
                error: Some(e.to_string()),
                summary: Value::Null,
            },
        };
        self.stages.push(rec);
    }

    fn skip(&mut self, stage: &str, why: &str) {
        self.stages.push(StageRecord {
            stage: stage.into(),
            status: StageStatus::Skipped,
            error: Some(why.into()),
            summary: Value::Null,
        });
    }

    fn out(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn initial(&self) -> Result<ScalarField> {
        self.cfg.initial_field(&self.flux)
    }

    fn stage_solve(&mut self) -> Result<Value> {
        let u0 = self.initial()?;
        let snapshots = match &self.cfg.snapshots {
            SnapshotSpec::EveryStep => Snapshots::EveryStep,
            SnapshotSpec::Times(t) => Snapshots::Times(t.clone()),
        };
        let traj = solve(&u0, &self.flux, self.cfg.t_end, &snapshots, &self.cfg.solver_config())?;
        let frames_path = self.out(FRAMES);
        io::write_frames(&frames_path, &traj.frames)?;
        let final_path = self.out("final.csv");
        io::write_field_csv(&final_path, traj.last())?;
        let summary = json!({
            "frames": traj.frames.len(),
            "t_final": traj.last().time,
            "sup_initial": traj.first().sup_norm(),
            "sup_final": traj.last().sup_norm(),
            "mass_initial": traj.first().integral(),
            "mass_final": traj.last().integral(),
        });
        self.products.trajectory = Some(traj);
        Ok(summary)
    }

    fn every_step(&self) -> Result<Trajectory> {
        if let (SnapshotSpec::EveryStep, Some(t)) = (&self.cfg.snapshots, &self.products.trajectory) {
            return Ok(t.clone());
        }
        let u0 = self.initial()?;
        solve(&u0, &self.flux, self.cfg.t_end, &Snapshots::EveryStep, &self.cfg.solver_config())
    }

    fn stage_dissipation(&mut self, st: &DissipationStage) -> Result<Value> {
        let traj = self.every_step()?;
        let (lo, hi) = traj
            .frames
            .iter()
            .map(|f| f.bounds())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
        let levels = default_levels(lo, hi, st.levels);
        let measure = entropy_dissipation(&traj, &self.flux, &levels)?;
        let path = self.out("mu.csv");
        io::write_measure_csv(&path, &measure)?;
        let summary = json!({
            "steps": traj.frames.len() - 1,
            "levels": levels.len(),
            "total": measure.total,
            "clipped": measure.clipped,
            "rate": measure.rate(),
            "entries": measure.entries.len(),
        });
        self.products.measure = Some(measure);
        Ok(summary)
    }

    fn stage_structure(&mut self, st: &StructureStage) -> Result<Value> {
        let (jp, cp, fp) = (self.out("mask.json"), self.out("mask.csv"), self.out("shock_fits.json"));
        let measure = self
            .products
            .measure
            .as_ref()
            .ok_or_else(|| Error::input("structure needs the dissipation stage"))?;
        let traj = self.products.trajectory.as_ref().expect("solve ran");
        let h = traj.geometry().max_spacing();
        let radii: Vec<f64> = st.radii_cells.iter().map(|r| r * h).collect();
        let threshold = match st.threshold {
            Threshold::Auto => {
                let (lo, hi) = traj.first().bounds();
                auto_threshold(hi - lo)
            }
            Threshold::Value(v) => v,
        };
        let mask = jump_set(measure, &radii, threshold)?;
        io::write_mask(&jp, &cp, &mask)?;
        let mut fits = Vec::new();
        let fit_radii: Vec<f64> = st.blowup_radii_cells.iter().map(|r| r * h).collect();
        for p in &st.blowup_points {
            fits.push(blowup_trace(traj.last(), p, &fit_radii)?);
        }
        io::write_json(&fp, &fits)?;
        let summary = json!({
            "threshold": threshold,
            "radii": radii,
            "flagged": mask.count(),
            "max_score": mask.score.iter().cloned().fold(0.0, f64::max),
            "fits": fits.iter().map(|f| json!({
                "center": f.center, "normal": f.normal, "u_plus": f.u_plus,
                "u_minus": f.u_minus, "residual": f.residual, "single_shock": f.single_shock,
            })).collect::<Vec<_>>(),
        });
        self.products.mask = Some(mask);
        self.products.fits = fits;
        Ok(summary)
    }

    fn stage_degiorgi(&mut self, st: &DegiorgiStage) -> Result<Value> {
        let path = self.out("ladder.csv");
        let traj = self.products.trajectory.as_ref().expect("solve ran");
        let field = traj.last();
        let ball = Ball::new(st.center.clone(), st.scale)?;
        let u_top = match st.u_top {
            Some(u) => u,
            None => 2.0 * ball.sup(field, 1.0).max(0.0),
        };
        let u_top = if u_top > 0.0 { u_top } else { 1.0 };
        let ladder = truncation_ladder(field, &ball, u_top, st.steps)?;
        let floor = grid_floor(field, &self.flux);
        io::write_ladder_csv(&path, &ladder)?;
        let summary = json!({
            "U": u_top,
            "A_0": ladder.masses[0],
            "A_K": ladder.last_mass(),
            "nonincreasing": ladder.is_nonincreasing(),
            "grid_floor": floor,
        });
        self.products.ladder = Some((ladder, floor));
        Ok(summary)
    }

    fn stage_characteristics(&mut self, st: &CharacteristicsStage) -> Result<Value> {
        let u0 = self.initial()?;
        let t0 = u0.time;
        let times: Vec<f64> = (0..=st.k)
            .map(|j| t0 + (self.cfg.t_end - t0) * j as f64 / st.k as f64)
            .collect();
        let traj = solve(&u0, &self.flux, self.cfg.t_end, &Snapshots::Times(times), &self.cfg.solver_config())?;
        let poly = backward_characteristic(&traj, &st.x0, st.v0, st.k)?;
        let h = traj.geometry().max_spacing();
        let floor = grid_floor(traj.last(), &self.flux);
        let mut value_dev = 0.0f64;
        for (t, p) in poly.times.iter().zip(&poly.points) {
            let frame = traj.frame_at(*t, 1e-9).expect("frame at vertex");
            if let Some(u) = frame.interpolate(p) {
                value_dev = value_dev.max((u - st.v0).abs());
            }
        }
        let chord = poly.chord_deviation();
        let bound = poly.max_speed * (self.cfg.t_end - t0) / st.k as f64 + 3.0 * h;
        let path = self.out("polygon.csv");
        io::write_polygon_csv(&path, &poly)?;
        self.products.polygon = Some((chord, bound, value_dev, floor));
        Ok(json!({
            "endpoint": poly.points[0],
            "chord_deviation": chord,
            "chord_bound": bound,
            "value_deviation": value_dev,
            "grid_floor": floor,
        }))
    }

    fn stage_decay(&mut self, st: &DecayStage) -> Result<Value> {
        let u0 = self.initial()?;
        let mut times = log_times(u0.time, self.cfg.t_end - u0.time, st.n_samples);
        times.extend(st.extra_times.iter().copied());
        times.sort_by(|a, b| a.total_cmp(b));
        let series = decay_experiment_at(&self.flux, &u0, &times, &self.cfg.solver_config())?;
        let t_min = st.t_min.unwrap_or(self.cfg.t_end / 8.0);
        let fit = fit_decay_exponent(&series, t_min)?;
        let path = self.out("series.csv");
        io::write_series_csv(&path, &series)?;
        let summary = json!({
            "samples": series.times.len(),
            "t_min": t_min,
            "gamma_hat": fit.gamma_hat,
            "C_hat": fit.c_hat,
            "t_shift": fit.t_shift,
            "plain_gamma": fit.plain_gamma,
            "nonincreasing": series.is_nonincreasing(),
        });
        self.products.decay = Some((series, fit));
        Ok(summary)
    }

    fn evaluate(&self, check: &Check) -> CheckRecord {
        let p = &self.products;
        let rec = |name: String, value: Option<f64>, tol: String, passed: Option<bool>| CheckRecord {
            name,
            value,
            tolerance: tol,
            passed,
        };
        match check {
            Check::DissipationTotal { expected, rel_tol } => {
                let v = p.measure.as_ref().map(|m| m.total);
                rec(
                    "dissipation_total".into(),
                    v,
                    format!("{expected} +- {}%", rel_tol * 100.0),
                    v.map(|v| (v - expected).abs() <= rel_tol * expected.abs()),
                )
            }
            Check::JumpBand { speed, offset, cells } => {
                let v = p.mask.as_ref().map(|m| {
                    let h = m.geometry.spacing[1..].iter().cloned().fold(0.0, f64::max);
                    m.flagged_centers()
                        .iter()
                        .map(|c| (c[1] - offset - speed * c[0]).abs() / h)
                        .fold(0.0, f64::max)
                });
                let nonempty = p.mask.as_ref().map(|m| m.count() > 0);
                rec(
                    "jump_band_cells".into(),
                    v,
                    format!("<= {cells} cells from x = {offset} + {speed} t"),
                    v.zip(nonempty).map(|(v, ne)| ne && v <= *cells),
                )
            }
            Check::NoJumps => {
                let v = p.mask.as_ref().map(|m| m.count() as f64);
                rec("flagged_cells".into(), v, "== 0".into(), v.map(|v| v == 0.0))
            }
            Check::DecayExponent { expected, tol } => {
                let v = p.decay.as_ref().map(|d| d.1.gamma_hat);
                rec(
                    "decay_exponent".into(),
                    v,
                    format!("{expected} +- {tol}"),
                    v.map(|v| (v - expected).abs() <= *tol),
                )
            }
            Check::DecayMax { exponent, times, rel_tol } => {
                let v = p.decay.as_ref().and_then(|(s, _)| {
                    times
                        .iter()
                        .map(|&t| s.sup_at(t).map(|u| (u / (t + 1.0).powf(-exponent) - 1.0).abs()))
                        .collect::<Option<Vec<f64>>>()
                        .map(|e| e.into_iter().fold(0.0, f64::max))
                });
                rec(
                    "decay_max_rel_error".into(),
                    v,
                    format!("<= {rel_tol}"),
                    v.map(|v| v <= *rel_tol),
                )
            }
            Check::LadderCollapse => {
                let v = p.ladder.as_ref().map(|l| l.0.last_mass());
                rec(
                    "ladder_A_K".into(),
                    v,
                    "<= grid floor".into(),
                    p.ladder.as_ref().map(|(l, f)| l.last_mass() <= *f && l.is_nonincreasing()),
                )
            }
            Check::PolygonStraight => {
                let v = p.polygon.map(|x| x.0);
                rec(
                    "polygon_chord_deviation".into(),
                    v,
                    "<= M/k + 3h, value drift <= 3 grid floor".into(),
                    p.polygon.map(|(c, b, dev, floor)| c <= b && dev <= 3.0 * floor),
                )
            }
        }
    }
}

/// Runs the configured pipeline into `out_dir/name`. Stage errors are
/// recorded in the manifest; downstream stages that need them are skipped.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(PathBuf, Manifest)> {
    cfg.validate()?;
    let flux = FluxSpec::from_key(&cfg.flux)?;
    let dir = cfg.out_dir.join(&cfg.name);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut runner = Runner {
        cfg,
        flux,
        dir: dir.clone(),
        files: Vec::new(),
        stages: Vec::new(),
        products: Products::default(),
    };
    let cfg_path = runner.out(RUN_CONFIG);
    io::write_json(&cfg_path, cfg)?;

    let solved = runner.stage_solve();
    let solve_ok = solved.is_ok();
    runner.record("solve", solved);
    let s = &cfg.stages;
    if let Some(st) = &s.dissipation {
        if solve_ok {
            let r = runner.stage_dissipation(st);
            runner.record("dissipation", r);
        } else {
            runner.skip("dissipation", "solve failed");
        }
    }
    if let Some(st) = &s.structure {
        if runner.products.measure.is_some() {
            let r = runner.stage_structure(st);
            runner.record("structure", r);
        } else {
            runner.skip("structure", "no dissipation measure");
        }
    }
    if let Some(st) = &s.degiorgi {
        if solve_ok {
            let r = runner.stage_degiorgi(st);
            runner.record("degiorgi", r);
        } else {
            runner.skip("degiorgi", "solve failed");
        }
    }
    if let Some(st) = &s.characteristics {
        let r = runner.stage_characteristics(st);
        runner.record("characteristics", r);
    }
    if let Some(st) = &s.decay {
        let r = runner.stage_decay(st);
        runner.record("decay", r);
    }
    let checks: Vec<CheckRecord> = cfg.checks.iter().map(|c| runner.evaluate(c)).collect();
    let files = runner
        .files
        .iter()
        .filter(|f| dir.join(f).exists())
        .map(|f| file_record(&dir, f))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        name: cfg.name.clone(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: cfg.hash()?,
        config: cfg.clone(),
        stages: runner.stages,
        checks,
        files,
    };
    io::write_json(&dir.join(MANIFEST), &manifest)?;
    Ok((dir, manifest))
}

/// Config and frames of a finished run directory.
pub fn load_run(dir: &Path) -> Result<(ExperimentConfig, Vec<ScalarField>)> {
    let cfg: ExperimentConfig = io::read_json(&dir.join(RUN_CONFIG))?;
    let frames = io::read_frames(&dir.join(FRAMES))?;
    Ok((cfg, frames))
}

/// Named configs for the run-based acceptance criteria.
pub fn preset(name: &str, out_dir: &Path) -> Option<ExperimentConfig> {
    config::preset(name, out_dir)
}

pub const PRESETS: &[&str] = &[
    "shock_dissipation",
    "rarefaction",
    "composite",
    "decay_burgers",
    "decay_power2",
    "degiorgi_rarefaction",
    "characteristics_rarefaction",
];
