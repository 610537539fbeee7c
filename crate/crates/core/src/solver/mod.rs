//! Monotone finite-volume scheme for `u_t + div A(u) = 0` with forward Euler
//! in time and dimensional splitting across axes.

pub mod entropy;
pub mod numflux;
pub mod riemann;

pub use entropy::{
    cell_entropy_residuals, max_cell_residual, weak_entropy_check, EntropyKind, WeakCheck,
};
pub use numflux::{AxisFlux, NumericalFlux};
pub use riemann::{exact_decay_solution, riemann_exact};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::FluxSpec;
use crate::grid::{Geometry, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Outflow,
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "outflow" => Ok(Self::Outflow),
            "periodic" => Ok(Self::Periodic),
            _ => Err(Error::input(format!("unknown boundary mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub cfl: f64,
    pub boundary: Boundary,
    pub numerical_flux: NumericalFlux,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.45,
            boundary: Boundary::Outflow,
            numerical_flux: NumericalFlux::EngquistOsher,
        }
    }
}

impl SolverConfig {
    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(Error::input(format!("cfl = {} outside (0, 0.5]", self.cfl)));
        }
        Ok(())
    }
}

/// Time-ordered frames on a common grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub frames: Vec<ScalarField>,
    pub flux_name: String,
    pub flux: FluxSpec,
    pub config: SolverConfig,
    /// Uniform step between consecutive frames when every step was recorded.
    pub step_dt: Option<f64>,
}

impl Trajectory {
    pub fn new(
        frames: Vec<ScalarField>,
        flux: FluxSpec,
        config: SolverConfig,
        step_dt: Option<f64>,
    ) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::input("trajectory needs at least one frame"));
        }
        let g0 = frames[0].geometry();
        if frames.iter().any(|f| !f.geometry().same_shape(g0)) {
            return Err(Error::geometry("frames live on different grids"));
        }
        if frames.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::input("frame times must increase strictly"));
        }
        Ok(Self {
            frames,
            flux_name: flux.name.clone(),
            flux,
            config,
            step_dt,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        self.frames[0].geometry()
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.time).collect()
    }

    pub fn first(&self) -> &ScalarField {
        &self.frames[0]
    }

    pub fn last(&self) -> &ScalarField {
        self.frames.last().expect("nonempty")
    }

    /// Frame whose time is within `tol` of `t`.
    pub fn frame_at(&self, t: f64, tol: f64) -> Option<&ScalarField> {
        self.frames.iter().find(|f| (f.time - t).abs() <= tol)
    }

    /// Uniform time spacing of the frames, if any.
    pub fn uniform_dt(&self) -> Option<f64> {
        if self.frames.len() < 2 {
            return None;
        }
        let t = self.times();
        let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        let ok = t
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.max(1e-300));
        ok.then_some(dt)
    }

    /// Stacks the frames into one field with time as axis 0; cell centers in
    /// time sit at the frame times.
    pub fn space_time(&self) -> Result<ScalarField> {
        let dt = self
            .uniform_dt()
            .ok_or_else(|| Error::input("space-time view needs uniformly spaced frames"))?;
        let g = self.geometry();
        let mut dims = vec![self.frames.len()];
        dims.extend(&g.dims);
        let mut origin = vec![self.frames[0].time - 0.5 * dt];
        origin.extend(&g.origin);
        let mut spacing = vec![dt];
        spacing.extend(&g.spacing);
        let geometry = Geometry::new(dims, origin, spacing)?;
        let mut values = Vec::with_capacity(geometry.len());
        for f in &self.frames {
            values.extend_from_slice(f.values());
        }
        ScalarField::new(geometry, values, self.frames[0].time)
    }
}

fn check_dims(field: &ScalarField, flux: &FluxSpec) -> Result<()> {
    if field.ndim() != flux.spatial_dim() {
        return Err(Error::geometry(format!(
            "flux {} moves {} spatial directions, field has {}",
            flux.name,
            flux.spatial_dim(),
            field.ndim()
        )));
    }
    Ok(())
}

pub(crate) fn axis_fluxes(flux: &FluxSpec, kind: NumericalFlux) -> Vec<AxisFlux> {
    (0..flux.spatial_dim())
        .map(|k| AxisFlux::new(flux.components[flux.spatial_component(k)], kind))
        .collect()
}

/// Largest stable step: `cfl * min_k h_k / max |a_k|` over the field's range.
pub fn cfl_dt(field: &ScalarField, flux: &FluxSpec, cfl: f64) -> Result<f64> {
    check_dims(field, flux)?;
    if !(cfl > 0.0 && cfl <= 0.5) {
        return Err(Error::input(format!("cfl = {cfl} outside (0, 0.5]")));
    }
    let (lo, hi) = field.bounds();
    let g = field.geometry();
    let mut dt = f64::INFINITY;
    for k in 0..g.ndim() {
        let speed = flux.max_abs_speed(flux.spatial_component(k), lo, hi);
        if speed > 0.0 {
            dt = dt.min(cfl * g.spacing[k] / speed);
        }
    }
    if dt.is_infinite() {
        dt = cfl * g.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    }
    Ok(dt)
}

fn line_update(line: &[f64], af: &AxisFlux, lam: f64, boundary: Boundary) -> Vec<f64> {
    let n = line.len();
    let prim: Vec<f64> = line.iter().map(|&u| af.prim(u)).collect();
    let face = |i: usize, j: usize| af.flux_with(line[i], line[j], prim[i], prim[j]);
    let (gl, gr) = match boundary {
        Boundary::Outflow => (0, n - 1),
        Boundary::Periodic => (n - 1, 0),
    };
    let mut out = Vec::with_capacity(n);
    let mut left = face(gl, 0);
    for j in 0..n {
        let right = if j + 1 < n { face(j, j + 1) } else { face(n - 1, gr) };
        out.push(line[j] - lam * (right - left));
        left = right;
    }
    out
}

/// Start offsets of every line of cells along `axis`.
pub(crate) fn line_starts(g: &Geometry, axis: usize) -> Vec<usize> {
    let s = g.strides()[axis];
    let n = g.dims[axis];
    (0..g.len())
        .filter(|&i| (i / s) % n == 0)
        .collect()
}

pub(crate) fn gather(values: &[f64], start: usize, stride: usize, n: usize) -> Vec<f64> {
    (0..n).map(|j| values[start + j * stride]).collect()
}

/// One sweep of the scheme along `axis`.
pub(crate) fn sweep(
    values: &[f64],
    g: &Geometry,
    axis: usize,
    af: &AxisFlux,
    dt: f64,
    boundary: Boundary,
) -> Vec<f64> {
    let lam = dt / g.spacing[axis];
    if g.ndim() == 1 {
        return line_update(values, af, lam, boundary);
    }
    let s = g.strides()[axis];
    let n = g.dims[axis];
    let starts = line_starts(g, axis);
    let lines: Vec<(usize, Vec<f64>)> = starts
        .par_iter()
        .map(|&st| (st, line_update(&gather(values, st, s, n), af, lam, boundary)))
        .collect();
    let mut out = vec![0.0; values.len()];
    for (st, line) in lines {
        for (j, v) in line.into_iter().enumerate() {
            out[st + j * s] = v;
        }
    }
    out
}

/// Values after each sweep of one split step: `stages[0]` is the input,
/// `stages[k + 1]` follows the sweep along axis `k`.
pub(crate) fn split_stages(
    field: &ScalarField,
    flux: &FluxSpec,
    dt: f64,
    config: &SolverConfig,
) -> Vec<Vec<f64>> {
    let g = field.geometry();
    let fluxes = axis_fluxes(flux, config.numerical_flux);
    let mut stages = vec![field.values().to_vec()];
    for (k, af) in fluxes.iter().enumerate() {
        let next = sweep(stages.last().unwrap(), g, k, af, dt, config.boundary);
        stages.push(next);
    }
    stages
}

/// One forward-Euler step with per-axis numerical fluxes.
pub fn step(
    field: &ScalarField,
    flux: &FluxSpec,
    dt: f64,
    config: &SolverConfig,
) -> Result<ScalarField> {
    config.validate()?;
    let limit = cfl_dt(field, flux, config.cfl)?;
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-9) {
        return Err(Error::Stability { dt, limit });
    }
    let mut stages = split_stages(field, flux, dt, config);
    let values = stages.pop().expect("stages");
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite value in cell {i}")));
    }
    let mut out = field.with_values(values)?;
    out.time = field.time + dt;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshots {
    /// Absolute times; steps are clipped to land on them.
    Times(Vec<f64>),
    /// Every step with a uniform dt, stable for the initial data.
    EveryStep,
}

/// Runs from `u0.time` to `t_end` with adaptive steps.
pub fn solve(
    u0: &ScalarField,
    flux: &FluxSpec,
    t_end: f64,
    snapshots: &Snapshots,
    config: &SolverConfig,
) -> Result<Trajectory> {
    config.validate()?;
    check_dims(u0, flux)?;
    let t0 = u0.time;
    if !(t_end > t0) {
        return Err(Error::input(format!("t_end = {t_end} must exceed the start time {t0}")));
    }
    match snapshots {
        Snapshots::EveryStep => {
            let dt_max = cfl_dt(u0, flux, config.cfl)?;
            let n = ((t_end - t0) / dt_max).ceil().max(1.0) as usize;
            solve_fixed(u0, flux, (t_end - t0) / n as f64, n, config)
        }
        Snapshots::Times(times) => {
            let mut targets: Vec<f64> = times.clone();
            let eps = 1e-12 * t_end.abs().max(1.0);
            if targets.iter().any(|&t| t < t0 - eps || t > t_end + eps || !t.is_finite()) {
                return Err(Error::input(format!("snapshot times must lie in [{t0}, {t_end}]")));
            }
            if targets.is_empty() {
                targets = vec![t0, t_end];
            }
            targets.sort_by(|a, b| a.total_cmp(b));
            targets.dedup_by(|a, b| (*a - *b).abs() <= eps);
            let mut frames = Vec::with_capacity(targets.len());
            let mut u = u0.clone();
            for &target in &targets {
                while u.time < target - eps {
                    let mut dt = cfl_dt(&u, flux, config.cfl)?;
                    let hit = u.time + dt >= target - eps;
                    if hit {
                        dt = target - u.time;
                    }
                    u = step(&u, flux, dt, config)?;
                    if hit {
                        u.time = target;
                    }
                }
                let mut snap = u.clone();
                snap.time = target;
                frames.push(snap);
            }
            Trajectory::new(frames, flux.clone(), *config, None)
        }
    }
}

/// `n_steps` steps of size `dt`, recording every frame.
pub fn solve_fixed(
    u0: &ScalarField,
    flux: &FluxSpec,
    dt: f64,
    n_steps: usize,
    config: &SolverConfig,
) -> Result<Trajectory> {
    config.validate()?;
    check_dims(u0, flux)?;
    let mut frames = Vec::with_capacity(n_steps + 1);
    frames.push(u0.clone());
    let t0 = u0.time;
    for k in 1..=n_steps {
        let mut next = step(frames.last().unwrap(), flux, dt, config)?;
        next.time = t0 + dt * k as f64;
        frames.push(next);
    }
    Trajectory::new(frames, flux.clone(), *config, Some(dt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_field(n: usize, ul: f64, ur: f64) -> ScalarField {
        let g = Geometry::line(-1.0, 1.0, n).unwrap();
        ScalarField::from_fn(g, 0.0, |p| if p[0] < 0.0 { ul } else { ur }).unwrap()
    }

    #[test]
    fn constant_is_preserved() {
        let g = Geometry::from_box(&[0.0, 0.0], &[1.0, 1.0], &[16, 16]).unwrap();
        let u = ScalarField::constant(g, 0.7, 0.0).unwrap();
        let f = FluxSpec::generalized_burgers(2).unwrap();
        let dt = cfl_dt(&u, &f, 0.45).unwrap();
        let v = step(&u, &f, dt, &SolverConfig::default()).unwrap();
        assert!(v.values().iter().all(|&x| (x - 0.7).abs() < 1e-15));
    }

    #[test]
    fn cfl_examples() {
        let g = Geometry::line(0.0, 1.0, 100).unwrap();
        let u = ScalarField::from_fn(g.clone(), 0.0, |p| p[0]).unwrap();
        let b = FluxSpec::burgers();
        let (lo, hi) = u.bounds();
        let expect = 0.45 * 0.01 / hi.abs().max(lo.abs());
        assert!((cfl_dt(&u, &b, 0.45).unwrap() - expect).abs() < 1e-15);
        let u2 = u.map(|v| 2.0 * v).unwrap();
        let ratio = cfl_dt(&u2, &b, 0.45).unwrap() / cfl_dt(&u, &b, 0.45).unwrap();
        assert!((ratio - 0.5).abs() < 1e-12);
        assert!(cfl_dt(&u, &b, 0.6).is_err());
    }

    #[test]
    fn oversize_step_rejected() {
        let u = step_field(64, 1.0, 0.0);
        let b = FluxSpec::burgers();
        let dt = cfl_dt(&u, &b, 0.45).unwrap();
        assert!(matches!(
            step(&u, &b, 2.0 * dt, &SolverConfig::default()),
            Err(Error::Stability { .. })
        ));
    }

    #[test]
    fn snapshot_times_are_hit() {
        let u = step_field(64, 1.0, 0.0);
        let traj = solve(
            &u,
            &FluxSpec::burgers(),
            0.5,
            &Snapshots::Times(vec![0.1, 0.25, 0.5]),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.times(), vec![0.1, 0.25, 0.5]);
    }

    #[test]
    fn periodic_conserves_mass() {
        let g = Geometry::line(0.0, 1.0, 128).unwrap();
        let u = ScalarField::from_fn(g, 0.0, |p| (6.283185307179586 * p[0]).sin()).unwrap();
        let cfg = SolverConfig::default().with_boundary(Boundary::Periodic);
        let traj = solve(&u, &FluxSpec::burgers(), 1.0, &Snapshots::Times(vec![1.0]), &cfg).unwrap();
        assert!((traj.last().integral() - u.integral()).abs() < 1e-13);
    }
}
