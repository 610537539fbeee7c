//! Structural objects of a solution: semicontinuous envelopes, the jump set
//! of the dissipation measure, oscillation moduli and blowup fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::{sphere_directions, FluxSpec};
use crate::grid::{ball_reduce, Geometry, ScalarField};
use crate::kinetic::DissipationMeasure;

/// Numerical blur `Lip(A) * h * range(u)` below which discrete limits are
/// indistinguishable from zero. The speed norm covers the flux components
/// that move along the field's axes.
pub fn grid_floor(field: &ScalarField, flux: &FluxSpec) -> f64 {
    let (lo, hi) = field.bounds();
    let lip = if field.ndim() == flux.dim() {
        flux.max_speed_norm(lo, hi)
    } else {
        (0..flux.spatial_dim())
            .map(|k| flux.max_abs_speed(flux.spatial_component(k), lo, hi).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    lip.max(1e-12) * field.geometry().max_spacing() * (hi - lo)
}

fn check_radii(geometry: &Geometry, radii: &[f64], decreasing: bool) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::input("need at least one radius"));
    }
    if radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(Error::input("radii must be positive"));
    }
    if decreasing && radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::input("radii must be strictly decreasing"));
    }
    let h = geometry.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    let r_min = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    if r_min < h * (1.0 - 1e-9) {
        return Err(Error::input(format!(
            "radius {r_min} is below the grid resolution {h}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePair {
    /// Envelopes at the smallest radius.
    pub lower: ScalarField,
    pub upper: ScalarField,
    pub radii_used: Vec<f64>,
    /// Envelopes per radius, in the order of `radii_used`.
    pub lower_by_radius: Vec<ScalarField>,
    pub upper_by_radius: Vec<ScalarField>,
}

impl EnvelopePair {
    /// True when upper shrinks and lower grows cellwise as the radius drops.
    pub fn is_monotone(&self) -> bool {
        let pairs = |v: &[ScalarField], up: bool| {
            v.windows(2).all(|w| {
                w[0].values().iter().zip(w[1].values()).all(|(a, b)| {
                    if up {
                        b <= a
                    } else {
                        b >= a
                    }
                })
            })
        };
        pairs(&self.upper_by_radius, true) && pairs(&self.lower_by_radius, false)
    }
}

/// Ball minimum and maximum of `field` at each of the strictly decreasing
/// `radii`; the last radius gives `lower` and `upper`.
pub fn semicontinuous_envelopes(field: &ScalarField, radii: &[f64]) -> Result<EnvelopePair> {
    let g = field.geometry();
    check_radii(g, radii, true)?;
    let mut lower_by_radius = Vec::with_capacity(radii.len());
    let mut upper_by_radius = Vec::with_capacity(radii.len());
    for &r in radii {
        let lo = ball_reduce(g, field.values(), r, f64::INFINITY, f64::min);
        let hi = ball_reduce(g, field.values(), r, f64::NEG_INFINITY, f64::max);
        lower_by_radius.push(field.with_values(lo)?);
        upper_by_radius.push(field.with_values(hi)?);
    }
    Ok(EnvelopePair {
        lower: lower_by_radius.last().cloned().expect("radii"),
        upper: upper_by_radius.last().cloned().expect("radii"),
        radii_used: radii.to_vec(),
        lower_by_radius,
        upper_by_radius,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpMask {
    pub geometry: Geometry,
    pub flagged: Vec<bool>,
    pub threshold: f64,
    pub radii: Vec<f64>,
    /// `max_r mu(B_r(x) x R) / r^{D-1}` per cell.
    pub score: Vec<f64>,
}

impl JumpMask {
    pub fn count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }

    pub fn flagged_cells(&self) -> Vec<usize> {
        (0..self.flagged.len()).filter(|&i| self.flagged[i]).collect()
    }

    pub fn flagged_centers(&self) -> Vec<Vec<f64>> {
        self.flagged_cells()
            .into_iter()
            .map(|i| self.geometry.center(i))
            .collect()
    }

    /// Flag of the cell containing `point`; false outside the grid.
    pub fn is_flagged_at(&self, point: &[f64]) -> bool {
        self.geometry
            .locate(point)
            .map(|idx| self.flagged[self.geometry.flat(&idx)])
            .unwrap_or(false)
    }

    /// Flag of any cell whose center lies within `radius` of `point`.
    pub fn any_flagged_near(&self, point: &[f64], radius: f64) -> bool {
        self.geometry
            .cells_in_ball(point, radius)
            .iter()
            .any(|&i| self.flagged[i])
    }
}

/// Default jump threshold `0.01 * range^3`.
pub fn auto_threshold(value_range: f64) -> f64 {
    0.01 * value_range.powi(3)
}

/// Flags a space-time cell when `mu(B_r x R) / r^{D-1} >= threshold` for some
/// radius, `D` being the dimension of the measure's geometry.
pub fn jump_set(measure: &DissipationMeasure, radii: &[f64], threshold: f64) -> Result<JumpMask> {
    let g = &measure.geometry;
    check_radii(g, radii, false)?;
    if !(threshold > 0.0) {
        return Err(Error::input("threshold must be positive"));
    }
    let exponent = g.ndim() as i32 - 1;
    let mut score = vec![0.0f64; g.len()];
    for &r in radii {
        let sums = ball_reduce(g, &measure.cell_totals, r, 0.0, |a, b| a + b);
        let norm = r.powi(exponent);
        score
            .par_iter_mut()
            .zip(sums)
            .for_each(|(s, m)| *s = s.max(m / norm));
    }
    Ok(JumpMask {
        geometry: g.clone(),
        flagged: score.iter().map(|&s| s >= threshold).collect(),
        threshold,
        radii: radii.to_vec(),
        score,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oscillation {
    pub radii: Vec<f64>,
    /// `max - min` over `B_r(x)`.
    pub osc: Vec<f64>,
    /// Mean deviation from the ball average over `B_r(x)`.
    pub vmo: Vec<f64>,
}

impl Oscillation {
    /// Value at the smallest radius.
    pub fn finest(&self) -> (f64, f64) {
        let i = (0..self.radii.len())
            .min_by(|&a, &b| self.radii[a].total_cmp(&self.radii[b]))
            .expect("radii");
        (self.osc[i], self.vmo[i])
    }

    /// Osc is nonincreasing as the radius decreases, up to `slack`.
    pub fn decreasing(&self, slack: f64) -> bool {
        let mut order: Vec<usize> = (0..self.radii.len()).collect();
        order.sort_by(|&a, &b| self.radii[b].total_cmp(&self.radii[a]));
        order
            .windows(2)
            .all(|w| self.osc[w[1]] <= self.osc[w[0]] + slack)
    }
}

pub fn oscillation_modulus(field: &ScalarField, x: &[f64], radii: &[f64]) -> Result<Oscillation> {
    let g = field.geometry();
    check_radii(g, radii, false)?;
    let mut osc = Vec::with_capacity(radii.len());
    let mut vmo = Vec::with_capacity(radii.len());
    for &r in radii {
        if !g.contains_ball(x, r) {
            return Err(Error::geometry(format!(
                "ball of radius {r} around {x:?} leaves the domain"
            )));
        }
        let vals: Vec<f64> = g
            .cells_in_ball(x, r)
            .iter()
            .map(|&i| field.values()[i])
            .collect();
        let (lo, hi) = crate::grid::min_max(&vals);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        osc.push(hi - lo);
        vmo.push(vals.iter().map(|v| (v - mean).abs()).sum::<f64>() / vals.len() as f64);
    }
    Ok(Oscillation {
        radii: radii.to_vec(),
        osc,
        vmo,
    })
}

/// Single-shock fit of the blowup at one radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusFit {
    pub radius: f64,
    /// Unit normal pointing into the `u_plus` side.
    pub normal: Vec<f64>,
    pub u_plus: f64,
    pub u_minus: f64,
    /// Mean `|u - profile|` over the rescaled unit ball.
    pub residual: f64,
    /// `max |u - u_plus|` over the cone `y . n > collar |y|`, and likewise
    /// for `u_minus` on the opposite cone.
    pub cone_dev_plus: f64,
    pub cone_dev_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockFit {
    pub center: Vec<f64>,
    /// Fit at the smallest radius.
    pub normal: Vec<f64>,
    pub u_plus: f64,
    pub u_minus: f64,
    pub residual: Vec<f64>,
    pub fits: Vec<RadiusFit>,
    /// False when the residual exceeds half the jump at every radius.
    pub single_shock: bool,
}

pub const SHOCK_DIRECTIONS: usize = 180;
pub const SHOCK_COLLAR: f64 = 0.1;

fn candidate_normals(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0]],
        2 => (0..SHOCK_DIRECTIONS)
            .map(|k| {
                let th = std::f64::consts::PI * k as f64 / SHOCK_DIRECTIONS as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        d => sphere_directions(d, SHOCK_DIRECTIONS),
    }
}

fn fit_at_radius(field: &ScalarField, x0: &[f64], r: f64) -> Result<RadiusFit> {
    let g = field.geometry();
    let cells = g.cells_in_ball(x0, r);
    if cells.len() < 2 {
        return Err(Error::input(format!("radius {r} holds fewer than two cells")));
    }
    let pts: Vec<(Vec<f64>, f64)> = cells
        .iter()
        .map(|&i| {
            let c = g.center(i);
            let y: Vec<f64> = c.iter().zip(x0).map(|(a, b)| (a - b) / r).collect();
            (y, field.values()[i])
        })
        .collect();
    let evaluate = |n: &[f64]| {
        let (mut sp, mut np, mut sm, mut nm) = (0.0, 0usize, 0.0, 0usize);
        for (y, u) in &pts {
            let s = crate::flux::dot(y, n);
            if s > SHOCK_COLLAR {
                sp += u;
                np += 1;
            } else if s < -SHOCK_COLLAR {
                sm += u;
                nm += 1;
            }
        }
        if np == 0 || nm == 0 {
            return None;
        }
        let (up, um) = (sp / np as f64, sm / nm as f64);
        let res = pts
            .iter()
            .map(|(y, u)| {
                let s = crate::flux::dot(y, n);
                (u - if s >= 0.0 { up } else { um }).abs()
            })
            .sum::<f64>()
            / pts.len() as f64;
        Some((res, up, um))
    };
    let mut best: Option<(f64, f64, f64, Vec<f64>)> = None;
    for n in candidate_normals(g.ndim()) {
        if let Some((res, up, um)) = evaluate(&n) {
            if best.as_ref().is_none_or(|b| res < b.0 - 1e-15) {
                best = Some((res, up, um, n));
            }
        }
    }
    let (residual, mut up, mut um, mut normal) =
        best.ok_or_else(|| Error::input(format!("radius {r} is too small to split")))?;
    if up < um {
        std::mem::swap(&mut up, &mut um);
        normal.iter_mut().for_each(|c| *c = -*c);
    }
    let (mut dev_p, mut dev_m) = (0.0f64, 0.0f64);
    for (y, u) in &pts {
        let s = crate::flux::dot(y, &normal);
        let len = crate::flux::norm(y);
        if s > SHOCK_COLLAR * len {
            dev_p = dev_p.max((u - up).abs());
        } else if s < -SHOCK_COLLAR * len {
            dev_m = dev_m.max((u - um).abs());
        }
    }
    Ok(RadiusFit {
        radius: r,
        normal,
        u_plus: up,
        u_minus: um,
        residual,
        cone_dev_plus: dev_p,
        cone_dev_minus: dev_m,
    })
}

/// Best single-shock profile of the rescaled field `u(x0 + r y)` on the unit
/// ball, for each of the strictly decreasing `radii`.
pub fn blowup_trace(field: &ScalarField, x0: &[f64], radii: &[f64]) -> Result<ShockFit> {
    let g = field.geometry();
    check_radii(g, radii, true)?;
    if x0.len() != g.ndim() || !g.contains(x0) {
        return Err(Error::input(format!("{x0:?} is not an interior point")));
    }
    if !g.contains_ball(x0, radii[0]) {
        return Err(Error::geometry(format!(
            "ball of radius {} around {x0:?} leaves the domain",
            radii[0]
        )));
    }
    let fits = radii
        .par_iter()
        .map(|&r| fit_at_radius(field, x0, r))
        .collect::<Result<Vec<_>>>()?;
    let last = fits.last().expect("radii");
    let single_shock = fits
        .iter()
        .any(|f| f.residual <= 0.5 * (f.u_plus - f.u_minus));
    Ok(ShockFit {
        center: x0.to_vec(),
        normal: last.normal.clone(),
        u_plus: last.u_plus,
        u_minus: last.u_minus,
        residual: fits.iter().map(|f| f.residual).collect(),
        single_shock,
        fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_line(n: usize) -> ScalarField {
        let g = Geometry::line(-1.0, 1.0, n).unwrap();
        ScalarField::from_fn(g, 0.0, |p| if p[0] < 0.0 { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn envelopes_of_a_step() {
        let u = step_line(64);
        let h = 2.0 / 64.0;
        let env = semicontinuous_envelopes(&u, &[4.0 * h, 2.0 * h, h]).unwrap();
        assert!(env.is_monotone());
        // first cell right of the interface
        assert_eq!(env.upper.values()[32], 1.0);
        assert_eq!(env.lower.values()[31], 0.0);
        assert!(semicontinuous_envelopes(&u, &[0.5 * h]).is_err());
        assert!(semicontinuous_envelopes(&u, &[h, 2.0 * h]).is_err());
    }

    #[test]
    fn oscillation_of_a_step() {
        let u = step_line(256);
        let h = 2.0 / 256.0;
        let o = oscillation_modulus(&u, &[0.0], &[16.0 * h, 4.0 * h, h]).unwrap();
        assert!(o.osc.iter().all(|&x| x == 1.0));
        assert!(o.vmo.iter().all(|&x| x > 0.3));
    }

    #[test]
    fn planar_shock_fit() {
        let g = Geometry::from_box(&[-1.0, -1.0], &[1.0, 1.0], &[128, 128]).unwrap();
        let th: f64 = 0.7;
        let n0 = [th.cos(), th.sin()];
        let u = ScalarField::from_fn(g, 0.0, |p| {
            if p[0] * n0[0] + p[1] * n0[1] > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let fit = blowup_trace(&u, &[0.0, 0.0], &[0.8, 0.4, 0.2]).unwrap();
        let angle = crate::flux::dot(&fit.normal, &n0).clamp(-1.0, 1.0).acos();
        assert!(angle.to_degrees() < 2.0, "{}", angle.to_degrees());
        assert_eq!((fit.u_plus, fit.u_minus), (1.0, 0.0));
        assert!(fit.single_shock);
        assert!(fit.residual.iter().all(|&r| r < 0.02));
    }
}
