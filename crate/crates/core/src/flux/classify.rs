//! Quantitative genuine nonlinearity: sublevel measures, Hörmander order and
//! the nondegeneracy constant.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dot, norm, sphere_directions, FluxSpec};
use crate::error::{Error, Result};

pub const DEFAULT_V_SAMPLES: usize = 100_000;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub v_samples: usize,
    pub directions: usize,
    pub deltas: Vec<f64>,
    pub worst_xi: Vec<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityReport {
    pub alpha_hat: f64,
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    pub m_hat: usize,
    pub c0_hat: f64,
    pub degenerate: bool,
    pub sample_grid: SampleGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionFit {
    pub xi: Vec<f64>,
    pub measures: Vec<f64>,
    pub alpha: f64,
    pub c: f64,
    pub degenerate: bool,
}

fn check_unit(xi: &[f64], dim: usize) -> Result<()> {
    if xi.len() != dim {
        return Err(Error::input(format!("direction has {} entries, flux has {dim}", xi.len())));
    }
    if (norm(xi) - 1.0).abs() > 1e-12 {
        return Err(Error::input("direction is not a unit vector"));
    }
    Ok(())
}

fn projections(flux: &FluxSpec, xi: &[f64], v_samples: usize) -> (Vec<f64>, f64) {
    let (lo, hi) = flux.interval;
    let h = (hi - lo) / (v_samples - 1) as f64;
    let f = (0..v_samples)
        .map(|i| dot(&flux.a(lo + h * i as f64), xi))
        .collect();
    (f, h)
}

// Length of {t in [0, h] : |f0 + (f1 - f0) t / h| < delta}.
fn cell_measure(f0: f64, f1: f64, h: f64, delta: f64) -> f64 {
    let df = f1 - f0;
    if df == 0.0 {
        return if f0.abs() < delta { h } else { 0.0 };
    }
    let ta = (-delta - f0) / df * h;
    let tb = (delta - f0) / df * h;
    let (a, b) = (ta.min(tb).max(0.0), ta.max(tb).min(h));
    (b - a).max(0.0)
}

fn sublevel_measure(f: &[f64], h: f64, delta: f64) -> f64 {
    f.windows(2).map(|w| cell_measure(w[0], w[1], h, delta)).sum()
}

/// Measure of `{v in I : |a(v) . xi| < delta}` from `v_samples` uniform samples
/// with linear interpolation inside each sample cell.
pub fn nonlinearity_measure(
    flux: &FluxSpec,
    xi: &[f64],
    delta: f64,
    v_samples: usize,
) -> Result<f64> {
    check_unit(xi, flux.dim())?;
    if !(delta > 0.0) {
        return Err(Error::input("delta must be positive"));
    }
    if v_samples < 2 {
        return Err(Error::input("need at least two v samples"));
    }
    if flux.interval_len() == 0.0 {
        return Ok(0.0);
    }
    let (f, h) = projections(flux, xi, v_samples);
    Ok(sublevel_measure(&f, h, delta))
}

fn fit_direction(flux: &FluxSpec, xi: Vec<f64>, deltas: &[f64], v_samples: usize) -> DirectionFit {
    let (f, h) = projections(flux, &xi, v_samples);
    let measures: Vec<f64> = deltas.iter().map(|&d| sublevel_measure(&f, h, d)).collect();
    let full = flux.interval_len();
    let saturated = measures.iter().all(|&m| m >= full * (1.0 - 1e-9));
    let pts: Vec<(f64, f64)> = deltas
        .iter()
        .zip(&measures)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&d, &m)| (d.ln(), m.ln()))
        .collect();
    if pts.len() < 2 {
        let c = deltas
            .iter()
            .zip(&measures)
            .map(|(d, m)| m / d)
            .fold(0.0, f64::max);
        return DirectionFit {
            xi,
            measures,
            alpha: 1.0,
            c,
            degenerate: true,
        };
    }
    let (slope, intercept) = least_squares(&pts);
    DirectionFit {
        xi,
        measures,
        alpha: slope,
        c: intercept.exp(),
        degenerate: saturated,
    }
}

pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Worst-direction fit of `measure ~ C delta^alpha` over a sphere sample.
pub fn estimate_alpha(
    flux: &FluxSpec,
    xi_samples: usize,
    delta_grid: &[f64],
) -> Result<NonlinearityReport> {
    estimate_alpha_with(flux, xi_samples, delta_grid, DEFAULT_V_SAMPLES)
}

pub fn estimate_alpha_with(
    flux: &FluxSpec,
    xi_samples: usize,
    delta_grid: &[f64],
    v_samples: usize,
) -> Result<NonlinearityReport> {
    if delta_grid.len() < 2 {
        return Err(Error::input("delta grid needs at least two entries"));
    }
    if delta_grid.iter().any(|&d| !(d > 0.0 && d < 1.0))
        || delta_grid.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::input("delta grid must be strictly decreasing inside (0, 1)"));
    }
    if xi_samples < flux.dim() {
        return Err(Error::input("need at least dim directions"));
    }
    if v_samples < 2 {
        return Err(Error::input("need at least two v samples"));
    }
    let fits: Vec<DirectionFit> = sphere_directions(flux.dim(), xi_samples)
        .into_par_iter()
        .map(|xi| fit_direction(flux, xi, delta_grid, v_samples))
        .collect();
    let worst = fits
        .iter()
        .min_by(|a, b| a.alpha.total_cmp(&b.alpha))
        .expect("nonempty direction sample");
    let mut notes = Vec::new();
    let degenerate_dirs: Vec<&DirectionFit> = fits.iter().filter(|f| f.degenerate).collect();
    for f in degenerate_dirs.iter().take(4) {
        notes.push(format!(
            "degenerate direction {:?}: measures {:?}",
            f.xi, f.measures
        ));
    }
    let saturated = fits
        .iter()
        .any(|f| f.degenerate && f.measures.iter().all(|&m| m > 0.0));
    let m_hat = hormander_order(flux, 2001)?;
    let c0_hat = if m_hat <= flux.m_max {
        nondegeneracy_constant(flux, 2001, 256)?
    } else {
        0.0
    };
    Ok(NonlinearityReport {
        alpha_hat: worst.alpha.clamp(1e-6, 1.0),
        c_hat: worst.c,
        m_hat,
        c0_hat,
        degenerate: saturated,
        sample_grid: SampleGrid {
            v_samples,
            directions: fits.len(),
            deltas: delta_grid.to_vec(),
            worst_xi: worst.xi.clone(),
            notes,
        },
    })
}

fn v_sample_points(flux: &FluxSpec, v_samples: usize) -> Vec<f64> {
    let (lo, hi) = flux.interval;
    let n = v_samples.max(2);
    let mut pts: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    if lo < 0.0 && hi > 0.0 {
        pts.push(0.0);
    }
    for c in &flux.components {
        for j in 0..=flux.m_max {
            pts.extend(c.zeros(j, lo, hi));
        }
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    pts
}

fn rank(cols: &[Vec<f64>], dim: usize) -> usize {
    let m = DMatrix::from_fn(dim, cols.len(), |r, c| cols[c][r]);
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * top).count()
}

fn local_order(flux: &FluxSpec, v: f64) -> usize {
    let dim = flux.dim();
    let mut cols = Vec::new();
    for m in 0..=flux.m_max {
        cols.push(flux.deriv(v, m));
        if cols.len() >= dim && rank(&cols, dim) == dim {
            return m;
        }
    }
    flux.m_max + 1
}

/// Smallest `m <= m_max` with `{a, a', ..., a^(m)}` spanning at every sample;
/// `m_max + 1` when none does.
pub fn hormander_order(flux: &FluxSpec, v_samples: usize) -> Result<usize> {
    if flux.m_max + 1 < flux.dim() {
        return Err(Error::Precondition(format!(
            "m_max = {} cannot span dimension {}",
            flux.m_max,
            flux.dim()
        )));
    }
    Ok(v_sample_points(flux, v_samples)
        .par_iter()
        .map(|&v| local_order(flux, v))
        .max()
        .unwrap_or(flux.m_max + 1))
}

fn objective(flux: &FluxSpec, m: usize, v: f64, xi: &[f64]) -> f64 {
    (0..=m)
        .map(|j| dot(&flux.deriv(v, j), xi).abs())
        .fold(0.0, f64::max)
}

fn tangent_basis(xi: &[f64]) -> Vec<Vec<f64>> {
    let dim = xi.len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for k in 0..dim {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        let p = dot(&e, xi);
        for (ei, x) in e.iter_mut().zip(xi) {
            *ei -= p * x;
        }
        for b in &basis {
            let p = dot(&e, b);
            for (ei, bi) in e.iter_mut().zip(b) {
                *ei -= p * bi;
            }
        }
        let r = norm(&e);
        if r > 1e-6 {
            basis.push(e.iter().map(|x| x / r).collect());
        }
        if basis.len() + 1 == dim {
            break;
        }
    }
    basis
}

fn refine(flux: &FluxSpec, m: usize, mut v: f64, mut xi: Vec<f64>) -> f64 {
    let (lo, hi) = flux.interval;
    let mut best = objective(flux, m, v, &xi);
    let mut step_v = (hi - lo).max(1e-12) * 1e-2;
    let mut step_xi = 1e-2;
    while step_v > 1e-13 || step_xi > 1e-13 {
        let mut improved = false;
        for sgn in [-1.0, 1.0] {
            let cand = (v + sgn * step_v).clamp(lo, hi);
            let val = objective(flux, m, cand, &xi);
            if val < best {
                best = val;
                v = cand;
                improved = true;
            }
        }
        for t in tangent_basis(&xi) {
            for sgn in [-1.0, 1.0] {
                let mut cand: Vec<f64> = xi
                    .iter()
                    .zip(&t)
                    .map(|(x, ti)| x + sgn * step_xi * ti)
                    .collect();
                let r = norm(&cand);
                cand.iter_mut().for_each(|x| *x /= r);
                let val = objective(flux, m, v, &cand);
                if val < best {
                    best = val;
                    xi = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step_v *= 0.5;
            step_xi *= 0.5;
        }
    }
    best
}

/// `min_{v, |xi| = 1} max_{j <= m} |xi . a^(j)(v)|` with `m` the Hörmander order
/// (capped at `m_max`): grid search then compass refinement of the best
/// candidates.
pub fn nondegeneracy_constant(flux: &FluxSpec, v_samples: usize, xi_samples: usize) -> Result<f64> {
    let m = hormander_order(flux, v_samples)?.min(flux.m_max);
    let dirs = sphere_directions(flux.dim(), xi_samples.max(flux.dim()));
    let vs = v_sample_points(flux, v_samples);
    let mut cands: Vec<(f64, f64, usize)> = vs
        .par_iter()
        .map(|&v| {
            let derivs: Vec<Vec<f64>> = (0..=m).map(|j| flux.deriv(v, j)).collect();
            let (k, val) = dirs
                .iter()
                .enumerate()
                .map(|(k, xi)| {
                    let val = derivs
                        .iter()
                        .map(|d| dot(d, xi).abs())
                        .fold(0.0, f64::max);
                    (k, val)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("directions");
            (val, v, k)
        })
        .collect();
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = cands
        .iter()
        .take(8)
        .map(|&(_, v, k)| refine(flux, m, v, dirs[k].clone()))
        .fold(f64::INFINITY, f64::min);
    Ok(best.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignTag {
    Neg,
    Small,
    Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignPiece {
    pub lo: f64,
    pub hi: f64,
    pub tag: SignTag,
}

impl SignPiece {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

fn crossing(g: &dyn Fn(f64) -> f64, target: f64, lo: f64, hi: f64) -> f64 {
    if g(lo) >= target {
        return lo;
    }
    if g(hi) <= target {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if g(mid) < target {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Splits `I` by the sign of `f^(k-1)` at level `delta`, given `f^(k) >= 1`.
/// `f(v, j)` returns the `j`-th derivative of `f`. Empty pieces are dropped.
pub fn sign_decomposition(
    f: &dyn Fn(f64, usize) -> f64,
    interval: (f64, f64),
    delta: f64,
    k: usize,
) -> Result<Vec<SignPiece>> {
    let (lo, hi) = interval;
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::input("bad interval"));
    }
    if !(delta > 0.0) {
        return Err(Error::input("delta must be positive"));
    }
    if k == 0 {
        return Err(Error::input("k must be at least 1"));
    }
    let n = 1000;
    let samples: Vec<f64> = (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();
    if let Some(&v) = samples.iter().find(|&&v| f(v, k) < 1.0 - 1e-12) {
        return Err(Error::Contract(format!(
            "derivative of order {k} is {} < 1 at v = {v}",
            f(v, k)
        )));
    }
    let g = |v: f64| f(v, k - 1);
    if let Some(w) = samples.windows(2).find(|w| g(w[1]) < g(w[0])) {
        return Err(Error::Contract(format!(
            "order {} derivative decreases on [{}, {}]",
            k - 1,
            w[0],
            w[1]
        )));
    }
    let p = crossing(&g, -delta, lo, hi);
    let q = crossing(&g, delta, p, hi);
    if q - p > 2.0 * delta * (1.0 + 1e-9) {
        return Err(Error::Contract(format!(
            "middle piece has length {} > 2 delta",
            q - p
        )));
    }
    let pieces = [
        SignPiece {
            lo,
            hi: p,
            tag: SignTag::Neg,
        },
        SignPiece {
            lo: p,
            hi: q,
            tag: SignTag::Small,
        },
        SignPiece {
            lo: q,
            hi,
            tag: SignTag::Pos,
        },
    ];
    Ok(pieces.into_iter().filter(|s| s.len() > 0.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::Component;

    #[test]
    fn measure_examples() {
        let b = FluxSpec::burgers();
        let m = nonlinearity_measure(&b, &[0.0, 1.0], 0.1, 100_000).unwrap();
        assert!((m - 0.2).abs() < 1e-9);
        assert_eq!(nonlinearity_measure(&b, &[1.0, 0.0], 0.1, 1000).unwrap(), 0.0);
        let g = FluxSpec::generalized_burgers(2)
            .unwrap()
            .with_interval(0.0, 1.0)
            .unwrap();
        let m = nonlinearity_measure(&g, &[0.0, 0.0, 1.0], 0.25, 100_000).unwrap();
        assert!((m - 0.5).abs() < 1e-6);
        assert!(nonlinearity_measure(&b, &[1.0, 1.0], 0.1, 100).is_err());
        assert!(nonlinearity_measure(&b, &[0.0, 1.0], 0.0, 100).is_err());
    }

    #[test]
    fn orders() {
        assert_eq!(hormander_order(&FluxSpec::burgers(), 101).unwrap(), 1);
        let g = FluxSpec::generalized_burgers(2).unwrap();
        assert_eq!(hormander_order(&g, 101).unwrap(), 2);
        let flat = FluxSpec::new(
            "flat",
            vec![Component::constant(1.0), Component::constant(0.0)],
            (0.0, 1.0),
            1,
            true,
        )
        .unwrap();
        assert_eq!(hormander_order(&flat, 101).unwrap(), 2);
    }

    #[test]
    fn sign_pieces() {
        let f = |v: f64, j: usize| match j {
            0 => v,
            1 => 1.0,
            _ => 0.0,
        };
        let p = sign_decomposition(&f, (-1.0, 1.0), 0.3, 1).unwrap();
        assert_eq!(p.len(), 3);
        assert!((p[0].hi + 0.3).abs() < 1e-12 && (p[2].lo - 0.3).abs() < 1e-12);
        let p = sign_decomposition(&f, (0.5, 1.0), 0.3, 1).unwrap();
        assert_eq!(p, vec![SignPiece { lo: 0.5, hi: 1.0, tag: SignTag::Pos }]);
        let bad = |v: f64, j: usize| if j == 0 { -v } else { -1.0 };
        assert!(sign_decomposition(&bad, (0.0, 1.0), 0.1, 1).is_err());
    }
}
