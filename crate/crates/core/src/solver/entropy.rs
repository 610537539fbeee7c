//! Discrete entropy inequalities: cellwise residuals of the scheme under
//! Kruzhkov entropies, and a weak-form check for arbitrary space-time fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{axis_fluxes, gather, line_starts, split_stages, AxisFlux, Boundary, SolverConfig};
use crate::error::{Error, Result};
use crate::flux::FluxSpec;
use crate::grid::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyKind {
    /// `|u - l|`, for entropy solutions.
    Kruzhkov,
    /// `(u - l)_+`, for subsolutions.
    Plus,
}

impl EntropyKind {
    #[inline]
    pub fn eta(self, u: f64, l: f64) -> f64 {
        match self {
            Self::Kruzhkov => (u - l).abs(),
            Self::Plus => (u - l).max(0.0),
        }
    }

    #[inline]
    fn num_flux(self, af: &AxisFlux, ul: f64, ur: f64, l: f64) -> f64 {
        match self {
            Self::Kruzhkov => af.kruzhkov(ul, ur, l),
            Self::Plus => af.kruzhkov_plus(ul, ur, l),
        }
    }

    /// Exact entropy flux `q(u)` for the flux component with primitive `prim`.
    #[inline]
    fn q(self, prim: impl Fn(f64) -> f64, u: f64, l: f64) -> f64 {
        let d = prim(u) - prim(l);
        match self {
            Self::Kruzhkov => {
                if u > l {
                    d
                } else if u < l {
                    -d
                } else {
                    0.0
                }
            }
            Self::Plus => {
                if u > l {
                    d
                } else {
                    0.0
                }
            }
        }
    }
}

#[inline]
fn neighbours(j: usize, n: usize, boundary: Boundary) -> (usize, usize) {
    match boundary {
        Boundary::Outflow => (j.saturating_sub(1), (j + 1).min(n - 1)),
        Boundary::Periodic => ((j + n - 1) % n, (j + 1) % n),
    }
}

/// Contribution of one sweep to the residual of cell `j` at level `l`.
#[inline]
#[allow(clippy::too_many_arguments)]
fn sweep_cell_residual(
    before: &[f64],
    after: &[f64],
    j: usize,
    lam: f64,
    af: &AxisFlux,
    boundary: Boundary,
    l: f64,
    kind: EntropyKind,
) -> f64 {
    let n = before.len();
    let (jm, jp) = neighbours(j, n, boundary);
    let gl = kind.num_flux(af, before[jm], before[j], l);
    let gr = kind.num_flux(af, before[j], before[jp], l);
    kind.eta(after[j], l) - kind.eta(before[j], l) + lam * (gr - gl)
}

/// Sparse entropy residuals of one scheme step `before -> after`, over the
/// sorted `levels`. Only (cell, level) pairs whose level lies inside the local
/// stencil range are visited; elsewhere the residual vanishes identically.
///
/// For a pair that is not a scheme step (e.g. a maximum of two solutions) the
/// scheme is applied to `before` and the gap `eta(after) - eta(H(before))` is
/// added, so the result is the residual of the given pair.
pub fn step_level_residuals(
    before: &ScalarField,
    after: &ScalarField,
    flux: &FluxSpec,
    dt: f64,
    config: &SolverConfig,
    levels: &[f64],
    kind: EntropyKind,
) -> Result<Vec<(usize, usize, f64)>> {
    if !before.geometry().same_shape(after.geometry()) {
        return Err(Error::geometry("residual frames live on different grids"));
    }
    let g = before.geometry();
    let stages = split_stages(before, flux, dt, config);
    let fluxes = axis_fluxes(flux, config.numerical_flux);
    let mut acc: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
    let level_range = |lo: f64, hi: f64| {
        let a = levels.partition_point(|&l| l < lo);
        let b = levels.partition_point(|&l| l <= hi);
        a..b
    };
    for (k, af) in fluxes.iter().enumerate() {
        let s = g.strides()[k];
        let n = g.dims[k];
        let lam = dt / g.spacing[k];
        let contrib: Vec<Vec<(usize, usize, f64)>> = line_starts(g, k)
            .par_iter()
            .map(|&st| {
                let b = gather(&stages[k], st, s, n);
                let a = gather(&stages[k + 1], st, s, n);
                let mut out = Vec::new();
                for j in 0..n {
                    let (jm, jp) = neighbours(j, n, config.boundary);
                    let lo = b[jm].min(b[j]).min(b[jp]).min(a[j]);
                    let hi = b[jm].max(b[j]).max(b[jp]).max(a[j]);
                    for li in level_range(lo, hi) {
                        let r = sweep_cell_residual(
                            &b,
                            &a,
                            j,
                            lam,
                            af,
                            config.boundary,
                            levels[li],
                            kind,
                        );
                        out.push((st + j * s, li, r));
                    }
                }
                out
            })
            .collect();
        for line in contrib {
            for (cell, li, r) in line {
                *acc.entry((cell, li)).or_insert(0.0) += r;
            }
        }
    }
    let scheme_out = stages.last().expect("stages");
    for (cell, (&h, &w)) in scheme_out.iter().zip(after.values()).enumerate() {
        if h == w {
            continue;
        }
        for (li, &l) in levels.iter().enumerate() {
            let gap = kind.eta(w, l) - kind.eta(h, l);
            if gap != 0.0 {
                *acc.entry((cell, li)).or_insert(0.0) += gap;
            }
        }
    }
    Ok(acc.into_iter().map(|((c, l), r)| (c, l, r)).collect())
}

/// Dense residuals of one step at a single level.
pub fn cell_entropy_residuals(
    before: &ScalarField,
    after: &ScalarField,
    flux: &FluxSpec,
    dt: f64,
    config: &SolverConfig,
    level: f64,
    kind: EntropyKind,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; before.len()];
    for (cell, _, r) in step_level_residuals(before, after, flux, dt, config, &[level], kind)? {
        out[cell] += r;
    }
    Ok(out)
}

/// Largest cell residual over all steps of an every-step trajectory and all
/// levels. Entropy solutions give values at or below round-off.
pub fn max_cell_residual(
    traj: &super::Trajectory,
    levels: &[f64],
    kind: EntropyKind,
) -> Result<f64> {
    let dt = traj
        .step_dt
        .ok_or_else(|| Error::input("cell residuals need an every-step trajectory"))?;
    let mut levels = levels.to_vec();
    levels.sort_by(|a, b| a.total_cmp(b));
    let worst = traj
        .frames
        .par_windows(2)
        .map(|w| {
            step_level_residuals(&w[0], &w[1], &traj.flux, dt, &traj.config, &levels, kind)
                .map(|v| v.iter().map(|x| x.2).fold(f64::NEG_INFINITY, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(f64::NEG_INFINITY, f64::max).max(0.0))
}

/// `5 * h * Lip(A) * range(u)`: the first-order tolerance for residual tests.
pub fn scheme_tolerance(field: &ScalarField, flux: &FluxSpec) -> f64 {
    let (lo, hi) = field.bounds();
    5.0 * field.geometry().max_spacing() * flux.max_speed_norm(lo, hi) * (hi - lo)
}

/// `count` evenly spaced interior levels of the field's range.
pub fn interior_levels(field: &ScalarField, count: usize) -> Vec<f64> {
    let (lo, hi) = field.bounds();
    (0..count)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / count as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakCheck {
    pub tests: usize,
    pub levels: usize,
    /// Most negative `int Q(u) . grad phi` found.
    pub worst_value: f64,
    /// Tolerance for that test function.
    pub worst_tol: f64,
    /// Largest `-value / tol` over all tests; at most 1 passes.
    pub worst_ratio: f64,
    pub passed: bool,
}

// integral of the hat max(0, 1 - |x - c| / w) over [a, b]
fn hat_integral(a: f64, b: f64, c: f64, w: f64) -> f64 {
    let prim = |x: f64| {
        let s = ((x - c) / w).clamp(-1.0, 1.0);
        // antiderivative of (1 - |s|) in s, times w
        w * (s - s * s.abs() / 2.0)
    };
    prim(b) - prim(a)
}

fn hat(x: f64, c: f64, w: f64) -> f64 {
    (1.0 - (x - c).abs() / w).max(0.0)
}

/// Weak entropy inequality `int Q(u) . grad phi >= -tol_phi` for tensor hats of
/// half-width `support` cells on a space-time field whose axes match the
/// components of `flux` (time first for time-augmented fluxes). The field is
/// read as piecewise constant, so each test integral is exact.
pub fn weak_entropy_check(
    field: &ScalarField,
    flux: &FluxSpec,
    levels: &[f64],
    support: usize,
    kind: EntropyKind,
) -> Result<WeakCheck> {
    let g = field.geometry();
    let d = g.ndim();
    if d != flux.dim() {
        return Err(Error::geometry(format!(
            "space-time field has {d} axes, flux has {} components",
            flux.dim()
        )));
    }
    let support = support.max(1);
    if g.dims.iter().any(|&n| n < 2 * support + 1) {
        return Err(Error::geometry("grid too small for the test functions"));
    }
    let (lo, hi) = field.bounds();
    let lip = flux.max_speed_norm(lo, hi);
    let h = g.max_spacing();
    let widths: Vec<f64> = g.spacing.iter().map(|s| support as f64 * s).collect();
    let grad_norm = widths.iter().map(|w| w.powi(-2)).sum::<f64>().sqrt();
    // hat centers on cell centers, spaced `support` cells, support inside the box
    let center_axes: Vec<Vec<usize>> = g
        .dims
        .iter()
        .map(|&n| (support..n - support).step_by(support).collect())
        .collect();
    let mut centers: Vec<Vec<usize>> = vec![vec![]];
    for axis in &center_axes {
        centers = centers
            .into_iter()
            .flat_map(|c| {
                axis.iter().map(move |&i| {
                    let mut c = c.clone();
                    c.push(i);
                    c
                })
            })
            .collect();
    }
    let strides = g.strides();
    let vals = field.values();
    let comps = &flux.components;
    let results: Vec<(f64, f64, f64)> = centers
        .par_iter()
        .flat_map_iter(|c| {
            let lo_idx: Vec<usize> = c.iter().map(|&i| i - support).collect();
            let ext: Vec<usize> = vec![2 * support + 1; d];
            let count: usize = ext.iter().product();
            let cpos: Vec<f64> = (0..d).map(|k| g.axis_center(k, c[k])).collect();
            // per-axis cell integrals and face differences of the 1D hats
            let mut integ = vec![Vec::new(); d];
            let mut diff = vec![Vec::new(); d];
            for k in 0..d {
                for o in 0..ext[k] {
                    let i = lo_idx[k] + o;
                    let a = g.origin[k] + i as f64 * g.spacing[k];
                    let b = a + g.spacing[k];
                    integ[k].push(hat_integral(a, b, cpos[k], widths[k]));
                    diff[k].push(hat(b, cpos[k], widths[k]) - hat(a, cpos[k], widths[k]));
                }
            }
            // TV over the support
            let mut tv = 0.0;
            let vol = g.cell_volume();
            let cell_of = |offs: &[usize]| -> usize {
                (0..d).map(|k| (lo_idx[k] + offs[k]) * strides[k]).sum()
            };
            let unflat = |mut code: usize| -> Vec<usize> {
                let mut offs = vec![0; d];
                for k in (0..d).rev() {
                    offs[k] = code % ext[k];
                    code /= ext[k];
                }
                offs
            };
            for code in 0..count {
                let offs = unflat(code);
                let u = vals[cell_of(&offs)];
                for k in 0..d {
                    if offs[k] + 1 < ext[k] {
                        let mut o2 = offs.clone();
                        o2[k] += 1;
                        tv += (vals[cell_of(&o2)] - u).abs() * vol / g.spacing[k];
                    }
                }
            }
            let tol = 5.0 * h * lip * tv * grad_norm + 1e-12 * (1.0 + tv);
            levels
                .iter()
                .map(|&l| {
                    let mut total = 0.0;
                    for code in 0..count {
                        let offs = unflat(code);
                        let u = vals[cell_of(&offs)];
                        for k in 0..d {
                            let mut w = diff[k][offs[k]];
                            if w == 0.0 {
                                continue;
                            }
                            for m in 0..d {
                                if m != k {
                                    w *= integ[m][offs[m]];
                                }
                            }
                            let q = kind.q(|v| comps[k].primitive(v), u, l);
                            total += q * w;
                        }
                    }
                    (total, tol, -total / tol)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let worst = results
        .iter()
        .cloned()
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .unwrap_or((0.0, 1.0, f64::NEG_INFINITY));
    Ok(WeakCheck {
        tests: centers.len(),
        levels: levels.len(),
        worst_value: worst.0,
        worst_tol: worst.1,
        worst_ratio: worst.2,
        passed: worst.2 <= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;
    use crate::solver::{cfl_dt, solve_fixed};

    #[test]
    fn hat_integrals() {
        assert!((hat_integral(-2.0, 2.0, 0.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((hat_integral(0.0, 0.5, 0.0, 1.0) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn shock_step_has_nonpositive_residuals() {
        let g = Geometry::line(-1.0, 1.0, 200).unwrap();
        let u = ScalarField::from_fn(g, 0.0, |p| if p[0] < 0.0 { 1.0 } else { 0.0 }).unwrap();
        let f = FluxSpec::burgers();
        let dt = cfl_dt(&u, &f, 0.45).unwrap();
        let traj = solve_fixed(&u, &f, dt, 50, &SolverConfig::default()).unwrap();
        let levels = interior_levels(&u, 16);
        let worst = max_cell_residual(&traj, &levels, EntropyKind::Kruzhkov).unwrap();
        assert!(worst < 1e-13, "{worst}");
    }
}
