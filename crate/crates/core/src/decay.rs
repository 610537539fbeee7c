//! Large-time sup-norm decay: experiments, exponent fits and the bootstrap
//! of the decay exponent.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::{FluxSpec, Shape};
use crate::grid::{Geometry, ScalarField};
use crate::solver::{solve, SolverConfig, Snapshots};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub l1_norm: f64,
    pub linf_norm: f64,
    pub flux_name: String,
    pub dim: usize,
}

impl DecaySeries {
    pub fn is_nonincreasing(&self) -> bool {
        self.sup_norms
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300)
    }

    pub fn sup_at(&self, t: f64) -> Option<f64> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .map(|i| self.sup_norms[i])
    }
}

/// Box that keeps the support `[lo, hi]` (per axis) interior up to `t_end`:
/// each side moves out by `1.1 t_end` times the outward speed bound over the
/// value range, plus `margin`.
pub fn decay_box(
    flux: &FluxSpec,
    support_lo: &[f64],
    support_hi: &[f64],
    value_range: (f64, f64),
    t_end: f64,
    margin: f64,
) -> (Vec<f64>, Vec<f64>) {
    let d = flux.spatial_dim();
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    for k in 0..d {
        let (smin, smax) = flux.components[flux.spatial_component(k)]
            .deriv_range(0, value_range.0, value_range.1);
        lo.push(support_lo[k] + smin.min(0.0) * 1.1 * t_end - margin);
        hi.push(support_hi[k] + smax.max(0.0) * 1.1 * t_end + margin);
    }
    (lo, hi)
}

/// `n_samples` log-spaced times in `[t0 + t_end / 100, t0 + t_end]`.
pub fn log_times(t0: f64, t_end: f64, n_samples: usize) -> Vec<f64> {
    let n = n_samples.max(2);
    let a = (t_end / 100.0).ln();
    let b = t_end.ln();
    (0..n)
        .map(|i| t0 + (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn boundary_max(field: &ScalarField) -> f64 {
    let g = field.geometry();
    let mut worst = 0.0f64;
    for flat in 0..g.len() {
        let idx = g.unflat(flat);
        if idx.iter().zip(&g.dims).any(|(&i, &n)| i == 0 || i + 1 == n) {
            worst = worst.max(field.values()[flat].abs());
        }
    }
    worst
}

/// Solves from `u0` and records `sup |u|` at the given absolute times. Fails
/// once the solution reaches the boundary cells.
pub fn decay_experiment_at(
    flux: &FluxSpec,
    u0: &ScalarField,
    times: &[f64],
    config: &SolverConfig,
) -> Result<DecaySeries> {
    let linf = u0.sup_norm();
    let tol = 1e-10 * linf.max(1e-300);
    if boundary_max(u0) > tol {
        return Err(Error::SupportEscaped { time: u0.time });
    }
    let t_end = times.iter().cloned().fold(u0.time, f64::max);
    let series = if linf == 0.0 {
        times.iter().map(|_| 0.0).collect()
    } else {
        let traj = solve(u0, flux, t_end, &Snapshots::Times(times.to_vec()), config)?;
        let mut out = Vec::with_capacity(traj.frames.len());
        for f in &traj.frames {
            if boundary_max(f) > tol {
                return Err(Error::SupportEscaped { time: f.time });
            }
            out.push(f.sup_norm());
        }
        out
    };
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * t_end.abs().max(1.0));
    Ok(DecaySeries {
        times: sorted,
        sup_norms: series,
        l1_norm: u0.l1_norm(),
        linf_norm: linf,
        flux_name: flux.name.clone(),
        dim: flux.spatial_dim(),
    })
}

/// Sup-norm series at `n_samples` log-spaced times up to `t_end`.
pub fn decay_experiment(
    flux: &FluxSpec,
    u0: &ScalarField,
    t_end: f64,
    n_samples: usize,
) -> Result<DecaySeries> {
    if !(t_end > 0.0) {
        return Err(Error::input("t_end must be positive"));
    }
    decay_experiment_at(flux, u0, &log_times(u0.time, t_end, n_samples), &SolverConfig::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fit of `log s` against `log(t + t_shift)`.
    pub gamma_hat: f64,
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    pub t_shift: f64,
    /// Fit against `log t` with no shift.
    pub plain_gamma: f64,
    pub plain_c: f64,
    pub samples: usize,
}

fn fit_with_shift(pts: &[(f64, f64)], shift: f64) -> (f64, f64, f64) {
    let xy: Vec<(f64, f64)> = pts.iter().map(|&(t, s)| ((t + shift).ln(), s.ln())).collect();
    let (slope, intercept) = crate::flux::least_squares(&xy);
    let sse = xy
        .iter()
        .map(|&(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    (slope, intercept, sse)
}

/// Least-squares decay exponent over samples with `t >= t_min`. The time
/// origin is shifted by the `t_shift` in `[0, max t]` that best linearizes
/// the log-log data.
pub fn fit_decay_exponent(series: &DecaySeries, t_min: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.sup_norms)
        .filter(|(&t, &s)| t >= t_min && t > 0.0 && s > 0.0)
        .map(|(&t, &s)| (t, s))
        .collect();
    if pts.len() < 5 {
        return Err(Error::input(format!(
            "need at least 5 positive samples with t >= {t_min}, got {}",
            pts.len()
        )));
    }
    let d = series.dim.max(1) as f64;
    let t_max = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    let (plain_slope, plain_icpt, _) = fit_with_shift(&pts, 0.0);
    let grid = 2000;
    let mut best = (0.0, fit_with_shift(&pts, 0.0));
    for i in 1..=grid {
        let shift = t_max * i as f64 / grid as f64;
        let fit = fit_with_shift(&pts, shift);
        if fit.2 < best.1 .2 {
            best = (shift, fit);
        }
    }
    // golden refinement around the best grid point
    let step = t_max / grid as f64;
    let (mut a, mut b) = ((best.0 - step).max(0.0), (best.0 + step).min(t_max));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - phi * (b - a);
        let e = a + phi * (b - a);
        if fit_with_shift(&pts, c).2 < fit_with_shift(&pts, e).2 {
            b = e;
        } else {
            a = c;
        }
    }
    let mid = 0.5 * (a + b);
    let refined = fit_with_shift(&pts, mid);
    if refined.2 < best.1 .2 {
        best = (mid, refined);
    }
    let (shift, (slope, intercept, _)) = best;
    Ok(DecayFit {
        gamma_hat: -slope / d + 0.0,
        c_hat: intercept.exp(),
        t_shift: shift,
        plain_gamma: -plain_slope / d + 0.0,
        plain_c: plain_icpt.exp(),
        samples: pts.len(),
    })
}

/// `gamma <- 2 gamma - gamma^2 / gamma0`, `n` times; returns all `n + 1` values.
pub fn bootstrap_gamma(gamma0: f64, gamma_init: f64, n: usize) -> Result<Vec<f64>> {
    if !(gamma0 > 0.0 && gamma_init > 0.0 && gamma_init <= gamma0) {
        return Err(Error::input(format!(
            "need 0 < gamma_init = {gamma_init} <= gamma0 = {gamma0}"
        )));
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut g = gamma_init;
    out.push(g);
    for _ in 0..n {
        g = 2.0 * g - g * g / gamma0;
        out.push(g);
    }
    Ok(out)
}

/// Dimension `d` when the flux is time plus `v, v^2, ..., v^d`.
fn generalized_burgers_dim(flux: &FluxSpec) -> Option<usize> {
    if !flux.time_augmented {
        return None;
    }
    let d = flux.spatial_dim();
    let time_ok = matches!(flux.components[0].shape, Shape::Monomial(0));
    let rest_ok = (1..=d).all(|k| {
        let c = &flux.components[k];
        c.shape == Shape::Monomial(k as u32) && c.scale == 1.0 && c.rate == 1.0 && c.shift == 0.0
    });
    (time_ok && rest_ok).then_some(d)
}

/// Exponent of `||u0||_inf` in the bound.
pub fn linf_exponent(d: usize, gamma: f64) -> f64 {
    1.0 - gamma * (1.0 + (d * (d + 1)) as f64 / 2.0)
}

fn unit_bound(d: usize, l1: f64, linf: f64, gamma: f64, t: f64) -> f64 {
    linf.powf(linf_exponent(d, gamma)) * l1.powf(gamma) * t.powf(-(d as f64) * gamma)
}

/// Calibration run: a unit tent in 1D, a unit cone in 2D.
fn calibration(d: usize, gamma: f64) -> Result<f64> {
    let flux = FluxSpec::generalized_burgers(d as u32)?;
    let (n, t_end, samples) = if d == 1 { (2048, 16.0, 12) } else { (128, 4.0, 8) };
    let (lo, hi) = decay_box(&flux, &vec![-1.0; d], &vec![1.0; d], (0.0, 1.0), t_end, 0.25);
    let dims = vec![n; d];
    let g = Geometry::from_box(&lo, &hi, &dims)?;
    let u0 = ScalarField::from_fn(g, 0.0, |p| (1.0 - crate::flux::norm(p)).max(0.0))?;
    let times: Vec<f64> = (0..samples)
        .map(|i| (t_end.ln() * i as f64 / (samples - 1) as f64).exp())
        .collect();
    let series = decay_experiment_at(&flux, &u0, &times, &SolverConfig::default())?;
    let worst = series
        .times
        .iter()
        .zip(&series.sup_norms)
        .map(|(&t, &s)| s / unit_bound(d, series.l1_norm, series.linf_norm, gamma, t))
        .fold(0.0, f64::max);
    Ok(1.05 * worst)
}

fn calibrated_constant(d: usize, gamma: f64) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (d, gamma.to_bits());
    if let Some(&c) = cache.lock().expect("calibration cache").get(&key) {
        return Ok(c);
    }
    let c = calibration(d, gamma)?;
    cache.lock().expect("calibration cache").insert(key, c);
    Ok(c)
}

/// `C1 ||u0||_inf^{1 - gamma(1 + d(d+1)/2)} ||u0||_1^gamma t^{-d gamma}` with
/// `C1` calibrated once per `(d, gamma)`.
pub fn decay_constant_prediction(
    flux: &FluxSpec,
    l1: f64,
    linf: f64,
    gamma: f64,
    t: f64,
) -> Result<f64> {
    let d = generalized_burgers_dim(flux).ok_or_else(|| {
        Error::Unsupported(format!("{} is not a generalized Burgers flux", flux.name))
    })?;
    if d > 2 {
        return Err(Error::Unsupported(format!(
            "no calibration run in {d} space dimensions"
        )));
    }
    let g0 = crate::scaling::gamma_zero(flux)?;
    if !(gamma > 0.0 && gamma < g0) {
        return Err(Error::input(format!("gamma = {gamma} must lie in (0, {g0})")));
    }
    if !(t > 0.0 && l1 >= 0.0 && linf >= 0.0) {
        return Err(Error::input("need t > 0 and nonnegative norms"));
    }
    Ok(calibrated_constant(d, gamma)? * unit_bound(d, l1, linf, gamma, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(times: Vec<f64>, f: impl Fn(f64) -> f64) -> DecaySeries {
        DecaySeries {
            sup_norms: times.iter().map(|&t| f(t)).collect(),
            times,
            l1_norm: 1.0,
            linf_norm: 1.0,
            flux_name: "burgers".into(),
            dim: 1,
        }
    }

    #[test]
    fn fits_of_analytic_series() {
        let times: Vec<f64> = (0..=16).map(|i| 4.0 * 2f64.powf(i as f64 / 4.0)).collect();
        let fit = fit_decay_exponent(&series(times.clone(), |t| (t + 1.0).powf(-0.5)), 0.0).unwrap();
        assert!((fit.gamma_hat - 0.5).abs() < 0.02);
        assert!((fit.t_shift - 1.0).abs() < 1e-3);
        let flat = fit_decay_exponent(&series(times.clone(), |_| 0.3), 0.0).unwrap();
        assert!(flat.gamma_hat.abs() < 1e-12);
        assert!(fit_decay_exponent(&series(times[..4].to_vec(), |t| t), 0.0).is_err());
    }

    #[test]
    fn bootstrap_examples() {
        let s = bootstrap_gamma(0.5, 0.1, 3).unwrap();
        assert_eq!(s.len(), 4);
        assert!((s[1] - 0.18).abs() < 1e-15);
        let s = bootstrap_gamma(0.5, 0.25, 2).unwrap();
        assert!((0.5 - s[1] - 0.125).abs() < 1e-15);
        assert!((0.5 - s[2] - 0.03125).abs() < 1e-15);
        assert!(bootstrap_gamma(0.5, 0.5, 5).unwrap().iter().all(|&g| g == 0.5));
        assert!(bootstrap_gamma(0.5, 0.6, 1).is_err());
    }

    #[test]
    fn bound_exponents() {
        assert!((linf_exponent(1, 0.4) - 0.2).abs() < 1e-15);
        let f = FluxSpec::power(2).unwrap();
        assert!(decay_constant_prediction(&f, 1.0, 1.0, 0.2, 1.0).is_err());
    }
}
