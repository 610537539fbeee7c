use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use conslaw::characteristics::backward_characteristic;
use conslaw::decay::{decay_box, decay_experiment_at, fit_decay_exponent, log_times};
use conslaw::degiorgi::{truncation_ladder, Ball, DEFAULT_LADDER_STEPS};
use conslaw::flux::estimate_alpha;
use conslaw::harness::{
    acceptance, emit_report, load_run, preset, run_experiment, Domain, ExperimentConfig,
    InitialCondition, ReportFormat, SnapshotSpec, PRESETS,
};
use conslaw::io;
use conslaw::kinetic::{default_levels, entropy_dissipation, DissipationMeasure};
use conslaw::scaling::{apply_scaling, build_scaling};
use conslaw::solver::{solve, Boundary, NumericalFlux, Snapshots, SolverConfig};
use conslaw::structure::{auto_threshold, grid_floor, jump_set};
use conslaw::{Error, FluxSpec, Geometry, Result, ScalarField};

#[derive(Parser)]
#[command(name = "conslaw", version, about = "Scalar conservation law experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment into a run directory.
    Solve(SolveArgs),
    /// Entropy dissipation measure of a run.
    Dissipation {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value_t = 64)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Jump set of a run.
    Structure {
        #[arg(long)]
        run: PathBuf,
        /// Radii in cells.
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        radii: Vec<f64>,
        /// `auto` or a number.
        #[arg(long, default_value = "auto")]
        threshold: String,
        #[arg(long, default_value_t = 64)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncation ladder on the last frame of a run.
    Degiorgi {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_delimiter = ',')]
        center: Option<Vec<f64>>,
        #[arg(long)]
        scale: Option<f64>,
        /// `auto` (twice the sup on B_1) or a number.
        #[arg(long = "U", default_value = "auto")]
        u_top: String,
        #[arg(long = "K", default_value_t = DEFAULT_LADDER_STEPS)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Backward characteristic polygon from the last time of a run.
    Char {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        v0: f64,
        #[arg(long, default_value_t = 64)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Large-time decay of the sup norm.
    Decay {
        #[arg(long)]
        flux: String,
        /// Initial data; by default the explicit decay example matching `power:m`.
        #[arg(long)]
        ic: Option<String>,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, default_value_t = 24)]
        samples: usize,
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rescale a field CSV by S_lambda.
    Scale {
        #[arg(long)]
        flux: String,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nonlinearity report of a catalogue flux.
    FluxReport {
        #[arg(long)]
        flux: String,
        #[arg(long, default_value_t = 64)]
        xi_samples: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025,0.0125,0.00625,0.003125")]
        deltas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Accept {
        /// Criteria to run; all when empty.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    flux: Option<String>,
    /// `kind[:p1,p2,...]`, e.g. `riemann:1,0`.
    #[arg(long, allow_hyphen_values = true)]
    ic: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    t_start: Option<f64>,
    /// `lo,hi` per axis.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    domain: Option<Vec<f64>>,
    /// Comma-separated times or `every`.
    #[arg(long)]
    snapshots: Option<String>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    boundary: Option<Boundary>,
    #[arg(long)]
    numerical_flux: Option<NumericalFlux>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Report formats to emit: json, csv, md.
    #[arg(long, value_delimiter = ',')]
    report: Vec<String>,
}

fn build_config(a: &SolveArgs) -> Result<ExperimentConfig> {
    let mut cfg = if let Some(p) = &a.preset {
        preset(p, &a.out).ok_or_else(|| {
            Error::Input(format!("unknown preset `{p}`; known: {}", PRESETS.join(", ")))
        })?
    } else if let Some(path) = &a.config {
        let mut c: ExperimentConfig = io::read_json(path)?;
        c.out_dir = a.out.clone();
        c
    } else {
        let flux = a.flux.clone().ok_or_else(|| Error::Input("--flux is required".into()))?;
        let ic: InitialCondition = a
            .ic
            .as_deref()
            .ok_or_else(|| Error::Input("--ic is required".into()))?
            .parse()?;
        let n = a.n.ok_or_else(|| Error::Input("--n is required".into()))?;
        let t_end = a.t_end.ok_or_else(|| Error::Input("--t-end is required".into()))?;
        let mut c = ExperimentConfig::new("run", &flux, ic, n, t_end);
        c.dim = FluxSpec::from_key(&flux)?.spatial_dim();
        c.out_dir = a.out.clone();
        c
    };
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(t) = a.t_end {
        cfg.t_end = t;
    }
    if let Some(t) = a.t_start {
        cfg.t_start = t;
    }
    if let Some(d) = &a.domain {
        if d.len() % 2 != 0 {
            return Err(Error::Input("--domain takes lo,hi per axis".into()));
        }
        cfg.domain = Some(Domain {
            lo: d.iter().step_by(2).copied().collect(),
            hi: d.iter().skip(1).step_by(2).copied().collect(),
        });
    }
    if let Some(s) = &a.snapshots {
        cfg.snapshots = if s == "every" {
            SnapshotSpec::EveryStep
        } else {
            SnapshotSpec::Times(
                s.split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Input(format!("bad time `{t}`"))))
                    .collect::<Result<_>>()?,
            )
        };
    }
    if let Some(c) = a.cfl {
        cfg.cfl = c;
    }
    if let Some(b) = a.boundary {
        cfg.boundary = b;
    }
    if let Some(f) = a.numerical_flux {
        cfg.numerical_flux = f;
    }
    if let Some(n) = &a.name {
        cfg.name = n.clone();
    }
    Ok(cfg)
}

fn print_json(v: &serde_json::Value) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v).expect("json"));
}

/// Every-step trajectory of a run, re-solved from its configured initial data.
fn run_trajectory(dir: &Path) -> Result<(ExperimentConfig, FluxSpec, conslaw::solver::Trajectory)> {
    let (cfg, _) = load_run(dir)?;
    let flux = FluxSpec::from_key(&cfg.flux)?;
    let u0 = cfg.initial_field(&flux)?;
    let traj = solve(&u0, &flux, cfg.t_end, &Snapshots::EveryStep, &cfg.solver_config())?;
    Ok((cfg, flux, traj))
}

fn run_measure(dir: &Path, levels: usize) -> Result<(conslaw::solver::Trajectory, DissipationMeasure)> {
    let (_, flux, traj) = run_trajectory(dir)?;
    let (lo, hi) = traj
        .frames
        .iter()
        .map(|f| f.bounds())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    let measure = entropy_dissipation(&traj, &flux, &default_levels(lo, hi, levels))?;
    Ok((traj, measure))
}

fn execute(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Solve(a) => {
            let cfg = build_config(&a)?;
            let (dir, manifest) = run_experiment(&cfg)?;
            for f in &a.report {
                let path = emit_report(&dir, f.parse::<ReportFormat>()?)?;
                eprintln!("wrote {}", path.display());
            }
            for s in &manifest.stages {
                println!("stage {:<16} {:?}{}", s.stage, s.status, s.error.as_deref().map(|e| format!(": {e}")).unwrap_or_default());
            }
            for c in &manifest.checks {
                let tag = match c.passed {
                    Some(true) => "PASS",
                    Some(false) => "FAIL",
                    None => "n/a",
                };
                println!("[{tag}] {} = {:?} ({})", c.name, c.value, c.tolerance);
            }
            println!("run directory {}", dir.display());
            Ok(manifest.all_checks_passed())
        }
        Cmd::Dissipation { run, levels, out } => {
            let (_, measure) = run_measure(&run, levels)?;
            let out = out.unwrap_or_else(|| run.join("mu.csv"));
            io::write_measure_csv(&out, &measure)?;
            print_json(&json!({
                "total": measure.total,
                "rate": measure.rate(),
                "clipped": measure.clipped,
                "out": out,
            }));
            Ok(true)
        }
        Cmd::Structure { run, radii, threshold, levels, out } => {
            let (traj, measure) = run_measure(&run, levels)?;
            let h = traj.geometry().max_spacing();
            let radii: Vec<f64> = radii.iter().map(|r| r * h).collect();
            let threshold = if threshold == "auto" {
                let (lo, hi) = traj.first().bounds();
                auto_threshold(hi - lo)
            } else {
                threshold
                    .parse::<f64>()
                    .map_err(|_| Error::Input(format!("bad threshold `{threshold}`")))?
            };
            let mask = jump_set(&measure, &radii, threshold)?;
            let dir = out.unwrap_or_else(|| run.clone());
            std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
            io::write_mask(&dir.join("mask.json"), &dir.join("mask.csv"), &mask)?;
            print_json(&json!({ "flagged": mask.count(), "threshold": threshold, "radii": radii }));
            Ok(true)
        }
        Cmd::Degiorgi { run, center, scale, u_top, steps, out } => {
            let (cfg, frames) = load_run(&run)?;
            let flux = FluxSpec::from_key(&cfg.flux)?;
            let field = frames.last().ok_or_else(|| Error::Input("run has no frames".into()))?;
            let g = field.geometry();
            let upper = g.upper();
            let center = center.unwrap_or_else(|| {
                g.lower().iter().zip(&upper).map(|(a, b)| 0.5 * (a + b)).collect()
            });
            let scale = scale.unwrap_or_else(|| {
                let half = g
                    .lower()
                    .iter()
                    .zip(&upper)
                    .zip(&center)
                    .map(|((a, b), c)| (c - a).min(b - c))
                    .fold(f64::INFINITY, f64::min);
                0.45 * half
            });
            let ball = Ball::new(center, scale)?;
            let u_top = if u_top == "auto" {
                2.0 * ball.sup(field, 1.0).max(0.0)
            } else {
                u_top.parse::<f64>().map_err(|_| Error::Input(format!("bad U `{u_top}`")))?
            };
            let ladder = truncation_ladder(field, &ball, u_top, steps)?;
            let out = out.unwrap_or_else(|| run.join("ladder.csv"));
            io::write_ladder_csv(&out, &ladder)?;
            let floor = grid_floor(field, &flux);
            print_json(&json!({
                "U": u_top,
                "A_0": ladder.masses[0],
                "A_K": ladder.last_mass(),
                "grid_floor": floor,
                "nonincreasing": ladder.is_nonincreasing(),
            }));
            Ok(ladder.is_nonincreasing())
        }
        Cmd::Char { run, x0, v0, k, out } => {
            let (cfg, _) = load_run(&run)?;
            let flux = FluxSpec::from_key(&cfg.flux)?;
            let u0 = cfg.initial_field(&flux)?;
            let t0 = u0.time;
            let times: Vec<f64> = (0..=k).map(|j| t0 + (cfg.t_end - t0) * j as f64 / k as f64).collect();
            let traj = solve(&u0, &flux, cfg.t_end, &Snapshots::Times(times), &cfg.solver_config())?;
            let poly = backward_characteristic(&traj, &x0, v0, k)?;
            let out = out.unwrap_or_else(|| run.join("polygon.csv"));
            io::write_polygon_csv(&out, &poly)?;
            print_json(&json!({
                "foot": poly.points[0],
                "chord_deviation": poly.chord_deviation(),
                "max_speed": poly.max_speed,
                "out": out,
            }));
            Ok(true)
        }
        Cmd::Decay { flux, ic, t_end, n, samples, t_min, out } => {
            let f = FluxSpec::from_key(&flux)?;
            let ic: InitialCondition = match ic {
                Some(s) => s.parse()?,
                None => InitialCondition::DecayExample {
                    m: flux.strip_prefix("power:").and_then(|m| m.parse().ok()).unwrap_or(1),
                },
            };
            let d = f.spatial_dim();
            let (lo, hi) = decay_box(&f, &vec![0.0; d], &vec![1.0; d], (0.0, 1.0), t_end, 0.25);
            let g = Geometry::from_box(&lo, &hi, &vec![n; d])?;
            let u0 = ic.field(&g, &f, 0.0, 0)?;
            let series = decay_experiment_at(&f, &u0, &log_times(0.0, t_end, samples), &SolverConfig::default())?;
            let fit = fit_decay_exponent(&series, t_min.unwrap_or(t_end / 8.0))?;
            if let Some(out) = out {
                io::write_series_csv(&out, &series)?;
            }
            print_json(&json!({
                "gamma_hat": fit.gamma_hat,
                "C_hat": fit.c_hat,
                "t_shift": fit.t_shift,
                "plain_gamma": fit.plain_gamma,
                "nonincreasing": series.is_nonincreasing(),
            }));
            Ok(series.is_nonincreasing())
        }
        Cmd::Scale { flux, lambda, r, input, out } => {
            let f = FluxSpec::from_key(&flux)?;
            let field: ScalarField = io::read_field_csv(&input, 0.0)?;
            let map = build_scaling(&f, lambda)?;
            let scaled = apply_scaling(&field, r, &map)?;
            io::write_field_csv(&out, &scaled)?;
            print_json(&json!({ "det": map.det, "matrix": map.matrix, "out": out }));
            Ok(true)
        }
        Cmd::FluxReport { flux, xi_samples, deltas, out } => {
            let f = FluxSpec::from_key(&flux)?;
            let report = estimate_alpha(&f, xi_samples, &deltas)?;
            match out {
                Some(p) => io::write_json(&p, &report)?,
                None => print_json(&serde_json::to_value(&report)?),
            }
            Ok(!report.degenerate)
        }
        Cmd::Accept { criteria, json } => {
            let results = if criteria.is_empty() {
                acceptance::run_all()
            } else {
                criteria
                    .iter()
                    .map(|&id| acceptance::run_criterion(id))
                    .collect::<Result<Vec<_>>>()?
            };
            for r in &results {
                println!("{}", r.line());
            }
            if let Some(p) = json {
                io::write_json(&p, &results)?;
            }
            Ok(results.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("CONSLAW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("conslaw: cannot size thread pool: {e}");
        }
    }
    match execute(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("conslaw: {e}");
            ExitCode::from(2)
        }
    }
}
