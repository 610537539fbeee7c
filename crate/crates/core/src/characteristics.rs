//! Velocity hulls, the cone maximum principle and polygonal backward
//! characteristics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::FluxSpec;
use crate::grid::{Geometry, ScalarField};
use crate::solver::Trajectory;
use crate::structure::{grid_floor, oscillation_modulus};

pub const HULL_SAMPLES: usize = 1000;

/// Convex hull of sampled speed vectors. Axes on which every sample agrees are
/// held fixed; the hull lives on the remaining (at most two) axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityHull {
    pub dim: usize,
    pub fixed: Vec<(usize, f64)>,
    pub free: Vec<usize>,
    /// Vertices in full coordinates; counter-clockwise for a planar hull.
    pub vertices: Vec<Vec<f64>>,
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn planar_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

impl VelocityHull {
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::input("hull needs points of one positive dimension"));
        }
        let mut fixed = Vec::new();
        let mut free = Vec::new();
        for k in 0..dim {
            let (lo, hi) = crate::grid::min_max_iter(points.iter().map(|p| p[k]));
            if hi - lo <= 1e-14 * lo.abs().max(hi.abs()).max(1.0) {
                fixed.push((k, lo));
            } else {
                free.push(k);
            }
        }
        let embed = |q: &[f64]| {
            let mut v = vec![0.0; dim];
            for &(k, c) in &fixed {
                v[k] = c;
            }
            for (j, &k) in free.iter().enumerate() {
                v[k] = q[j];
            }
            v
        };
        let vertices = match free.len() {
            0 => vec![points[0].clone()],
            1 => {
                let k = free[0];
                let (lo, hi) = crate::grid::min_max_iter(points.iter().map(|p| p[k]));
                vec![embed(&[lo]), embed(&[hi])]
            }
            2 => planar_hull(points.iter().map(|p| [p[free[0]], p[free[1]]]).collect())
                .iter()
                .map(|q| embed(q))
                .collect(),
            n => {
                return Err(Error::Unsupported(format!(
                    "velocity hull with {n} free axes"
                )))
            }
        };
        Ok(Self {
            dim,
            fixed,
            free,
            vertices,
        })
    }

    fn project(&self, p: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&k| p[k]).collect()
    }

    /// Euclidean distance from `p` to the hull.
    pub fn distance(&self, p: &[f64]) -> f64 {
        let fixed2: f64 = self.fixed.iter().map(|&(k, c)| (p[k] - c).powi(2)).sum();
        let q = self.project(p);
        let verts: Vec<Vec<f64>> = self.vertices.iter().map(|v| self.project(v)).collect();
        let free2 = match self.free.len() {
            0 => 0.0,
            1 => {
                let (lo, hi) = (verts[0][0], verts[1][0]);
                ((lo - q[0]).max(q[0] - hi).max(0.0)).powi(2)
            }
            _ => {
                let n = verts.len();
                let inside = n >= 3 && (0..n).all(|i| cross(&verts[i], &verts[(i + 1) % n], &q) >= 0.0);
                if inside {
                    0.0
                } else {
                    (0..n)
                        .map(|i| seg_dist2(&q, &verts[i], &verts[(i + 1) % n]))
                        .fold(f64::INFINITY, f64::min)
                }
            }
        };
        (fixed2 + free2).sqrt()
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.distance(p) <= tol
    }

    /// Largest Euclidean norm over the hull.
    pub fn max_norm(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| crate::flux::norm(v))
            .fold(0.0, f64::max)
    }

    /// Bounding box `(lo, hi)` per coordinate.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|k| crate::grid::min_max_iter(self.vertices.iter().map(|v| v[k])))
            .collect()
    }
}

fn seg_dist2(q: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let aq = [q[0] - a[0], q[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let s = if len2 > 0.0 {
        ((aq[0] * ab[0] + aq[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (aq[0] - s * ab[0]).powi(2) + (aq[1] - s * ab[1]).powi(2)
}

fn sample_values(lo: f64, hi: f64) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    (0..=HULL_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / HULL_SAMPLES as f64)
        .collect()
}

/// Hull of `a(v)` for `v` in `[lo, hi]`, in the full speed space of the flux.
pub fn velocity_hull(flux: &FluxSpec, lo: f64, hi: f64) -> Result<VelocityHull> {
    check_interval(flux, lo, hi)?;
    let pts: Vec<Vec<f64>> = sample_values(lo, hi).iter().map(|&v| flux.a(v)).collect();
    VelocityHull::from_points(&pts)
}

/// Hull of the spatial speeds only.
pub fn spatial_hull(flux: &FluxSpec, lo: f64, hi: f64) -> Result<VelocityHull> {
    check_interval(flux, lo, hi)?;
    let axes: Vec<usize> = (0..flux.spatial_dim()).map(|k| flux.spatial_component(k)).collect();
    let pts: Vec<Vec<f64>> = sample_values(lo, hi)
        .iter()
        .map(|&v| axes.iter().map(|&k| flux.components[k].deriv(v, 0)).collect())
        .collect();
    VelocityHull::from_points(&pts)
}

fn check_interval(flux: &FluxSpec, lo: f64, hi: f64) -> Result<()> {
    let (a, b) = flux.interval;
    let slack = 1e-12 * (b - a).abs().max(1.0);
    if !(lo <= hi) || lo < a - slack || hi > b + slack {
        return Err(Error::input(format!(
            "[{lo}, {hi}] is not inside the flux interval [{a}, {b}]"
        )));
    }
    Ok(())
}

fn time_augmented(flux: &FluxSpec) -> Result<()> {
    if !flux.time_augmented {
        return Err(Error::Unsupported(format!(
            "{} has no time direction",
            flux.name
        )));
    }
    Ok(())
}

/// Points of `x - tau K`, thickened by `pad`, on a lattice of step `step`,
/// together with the hull vertices.
fn foot_points(x: &[f64], tau: f64, hull: &VelocityHull, pad: f64, step: f64) -> Vec<Vec<f64>> {
    let d = x.len();
    let bounds = hull.bounds();
    let lo: Vec<f64> = (0..d).map(|k| x[k] - tau * bounds[k].1 - pad).collect();
    let hi: Vec<f64> = (0..d).map(|k| x[k] - tau * bounds[k].0 + pad).collect();
    let counts: Vec<usize> = (0..d)
        .map(|k| ((hi[k] - lo[k]) / step).ceil().max(0.0) as usize + 1)
        .collect();
    let mut out: Vec<Vec<f64>> = hull
        .vertices
        .iter()
        .map(|v| (0..d).map(|k| x[k] - tau * v[k]).collect())
        .collect();
    let total: usize = counts.iter().product();
    for flat in 0..total {
        let mut rem = flat;
        let mut p = vec![0.0; d];
        for k in (0..d).rev() {
            let i = rem % counts[k];
            rem /= counts[k];
            p[k] = (lo[k] + i as f64 * step).min(hi[k]);
        }
        // speed that would carry p to x in time tau
        let speed: Vec<f64> = (0..d).map(|k| (x[k] - p[k]) / tau.max(1e-300)).collect();
        if tau == 0.0 || hull.distance(&speed) * tau <= pad + 1e-12 {
            out.push(p);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeCheck {
    pub x: Vec<f64>,
    pub t: f64,
    pub tau: f64,
    pub upper_at: f64,
    pub foot_max: f64,
    /// `upper(t, x) - max_{x - tau K} upper(t - tau, .)`; at most `tol` passes.
    pub upper_excess: f64,
    pub lower_at: f64,
    pub foot_min: f64,
    /// `min_{x - tau K} lower(t - tau, .) - lower(t, x)`; at most `tol` passes.
    pub lower_excess: f64,
    /// Thickening of the foot set by the scheme's diffusive spread `2 sqrt(Lip h tau)`.
    pub pad: f64,
    pub tol: f64,
    pub passed: bool,
}

fn frame<'a>(traj: &'a Trajectory, t: f64) -> Result<&'a ScalarField> {
    let tol = 1e-9 * t.abs().max(1.0);
    traj.frame_at(t, tol)
        .ok_or_else(|| Error::input(format!("no frame at t = {t}")))
}

fn envelope_at(field: &ScalarField, p: &[f64]) -> Option<(f64, f64)> {
    field.ball_extrema(p, field.geometry().max_spacing())
}

/// Cone maximum principle between frames at `t - tau` and `t`, with
/// envelopes taken over one-cell balls. The foot set is padded by the
/// diffusive width of the monotone scheme, which smears kinks by
/// `O(sqrt(h tau))` rather than `O(h)`.
pub fn cone_max_principle_check(
    traj: &Trajectory,
    x: &[f64],
    t: f64,
    tau: f64,
) -> Result<ConeCheck> {
    time_augmented(&traj.flux)?;
    if !(tau > 0.0) {
        return Err(Error::input("tau must be positive"));
    }
    let now = frame(traj, t)?;
    let before = frame(traj, t - tau)?;
    let g = before.geometry();
    let (vlo, vhi) = before.bounds();
    let hull = spatial_hull(&traj.flux, vlo.max(traj.flux.interval.0), vhi.min(traj.flux.interval.1))?;
    let h = g.max_spacing();
    for v in &hull.vertices {
        let foot: Vec<f64> = x.iter().zip(v).map(|(a, s)| a - tau * s).collect();
        if !g.contains(&foot) {
            return Err(Error::geometry(format!(
                "cone foot {foot:?} leaves the domain"
            )));
        }
    }
    let (lower_at, upper_at) =
        envelope_at(now, x).ok_or_else(|| Error::geometry(format!("{x:?} is outside the grid")))?;
    let mut foot_max = f64::NEG_INFINITY;
    let mut foot_min = f64::INFINITY;
    let lip = hull.max_norm();
    let pad = 2.0 * (lip * h * tau).sqrt();
    for p in foot_points(x, tau, &hull, pad, 0.25 * h) {
        if let Some((lo, hi)) = envelope_at(before, &p) {
            foot_max = foot_max.max(hi);
            foot_min = foot_min.min(lo);
        }
    }
    let tol = grid_floor(before, &traj.flux);
    let upper_excess = upper_at - foot_max;
    let lower_excess = foot_min - lower_at;
    Ok(ConeCheck {
        x: x.to_vec(),
        t,
        tau,
        upper_at,
        foot_max,
        upper_excess,
        lower_at,
        foot_min,
        lower_excess,
        pad,
        tol,
        passed: upper_excess <= tol && lower_excess <= tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharPolygon {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub level: f64,
    /// Value interval `[lo, hi]` seen along each segment `j-1 -> j`.
    pub segment_hulls: Vec<(f64, f64)>,
    /// Largest speed norm over the hull used.
    pub max_speed: f64,
    pub tol: f64,
}

impl CharPolygon {
    /// Largest distance from a vertex to the chord joining the endpoints.
    pub fn chord_deviation(&self) -> f64 {
        let (t0, t1) = (self.times[0], *self.times.last().expect("vertices"));
        let (p0, p1) = (&self.points[0], self.points.last().expect("vertices"));
        self.times
            .iter()
            .zip(&self.points)
            .map(|(&t, p)| {
                let s = (t - t0) / (t1 - t0);
                let chord: Vec<f64> = p0.iter().zip(p1).map(|(a, b)| a + s * (b - a)).collect();
                crate::flux::norm(&p.iter().zip(&chord).map(|(a, b)| a - b).collect::<Vec<_>>())
            })
            .fold(0.0, f64::max)
    }

    /// Segment speeds `(x_j - x_{j-1}) / (t_j - t_{j-1})`.
    pub fn slopes(&self) -> Vec<Vec<f64>> {
        (1..self.points.len())
            .map(|j| {
                let dt = self.times[j] - self.times[j - 1];
                self.points[j]
                    .iter()
                    .zip(&self.points[j - 1])
                    .map(|(a, b)| (a - b) / dt)
                    .collect()
            })
            .collect()
    }
}

/// Polygonal backward characteristic from `(T, x0)` at level `v0`, with `k`
/// equal time steps back to the first frame. The trajectory must hold frames at
/// every `t_j`.
pub fn backward_characteristic(
    traj: &Trajectory,
    x0: &[f64],
    v0: f64,
    k: usize,
) -> Result<CharPolygon> {
    time_augmented(&traj.flux)?;
    if k < 2 {
        return Err(Error::input("need at least two segments"));
    }
    let t_start = traj.first().time;
    let t_end = traj.last().time;
    let times: Vec<f64> = (0..=k)
        .map(|j| t_start + (t_end - t_start) * j as f64 / k as f64)
        .collect();
    let frames: Vec<&ScalarField> = times.iter().map(|&t| frame(traj, t)).collect::<Result<_>>()?;
    let g: &Geometry = traj.geometry();
    let h = g.max_spacing();
    let (mut vlo, mut vhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for f in &frames {
        let (a, b) = f.bounds();
        vlo = vlo.min(a);
        vhi = vhi.max(b);
    }
    let flux = &traj.flux;
    let hull = spatial_hull(flux, vlo.max(flux.interval.0), vhi.min(flux.interval.1))?;
    let tol = 2.0 * grid_floor(frames[k], flux);
    let (lo_t, hi_t) = envelope_at(frames[k], x0)
        .ok_or_else(|| Error::geometry(format!("{x0:?} is outside the grid")))?;
    if v0 < lo_t - tol || v0 > hi_t + tol {
        return Err(Error::Precondition(format!(
            "level {v0} lies outside [{lo_t}, {hi_t}] at {x0:?}"
        )));
    }
    let speed0: Vec<f64> = (0..flux.spatial_dim())
        .map(|a| flux.components[flux.spatial_component(a)].deriv(v0, 0))
        .collect();
    let mut points = vec![x0.to_vec(); k + 1];
    let mut segment_hulls = vec![(0.0, 0.0); k];
    let mut env_prev = (lo_t, hi_t);
    for j in (1..=k).rev() {
        let dt = times[j] - times[j - 1];
        let xj = points[j].clone();
        let pred: Vec<f64> = xj.iter().zip(&speed0).map(|(x, s)| x - dt * s).collect();
        let mut best: Option<(f64, Vec<f64>, (f64, f64))> = None;
        let mut near_miss: Option<(f64, Vec<f64>)> = None;
        let mut candidates = foot_points(&xj, dt, &hull, 0.0, 0.25 * h);
        let pred_speed: Vec<f64> = speed0.clone();
        if hull.contains(&pred_speed, 1e-12) {
            candidates.push(pred.clone());
        }
        for y in candidates {
            if !g.contains(&y) {
                continue;
            }
            let Some((lo, hi)) = envelope_at(frames[j - 1], &y) else {
                continue;
            };
            let miss = (lo - tol - v0).max(v0 - hi - tol).max(0.0);
            if miss == 0.0 {
                let dist = crate::flux::norm(
                    &y.iter().zip(&pred).map(|(a, b)| a - b).collect::<Vec<_>>(),
                );
                if best.as_ref().is_none_or(|b| dist < b.0) {
                    best = Some((dist, y, (lo, hi)));
                }
            } else if near_miss.as_ref().is_none_or(|b| miss < b.0) {
                near_miss = Some((miss, y));
            }
        }
        let Some((_, y, env)) = best else {
            let (miss, best_point) = near_miss.unwrap_or((f64::INFINITY, pred));
            return Err(Error::LevelLost {
                level: v0,
                time: times[j - 1],
                best_point,
                miss,
            });
        };
        segment_hulls[j - 1] = (
            env.0.min(env_prev.0).min(v0),
            env.1.max(env_prev.1).max(v0),
        );
        env_prev = env;
        points[j - 1] = y;
    }
    Ok(CharPolygon {
        times,
        points,
        level: v0,
        segment_hulls,
        max_speed: hull.max_norm(),
        tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineConstancy {
    pub x0: Vec<f64>,
    pub value: f64,
    pub direction: Vec<f64>,
    /// Parameter range of `x0 + s a(u(x0))` inside the domain.
    pub s_range: (f64, f64),
    pub samples: usize,
    pub max_deviation: f64,
}

/// Deviation of a stationary field from `u(x0)` along `x0 + s a(u(x0))`.
/// The field's axes match the flux components.
pub fn line_constancy_check(field: &ScalarField, x0: &[f64], flux: &FluxSpec) -> Result<LineConstancy> {
    let g = field.geometry();
    if g.ndim() != flux.dim() || x0.len() != g.ndim() {
        return Err(Error::input(format!(
            "flux {} has {} components, field has {} axes",
            flux.name,
            flux.dim(),
            g.ndim()
        )));
    }
    let h = g.max_spacing();
    let floor = grid_floor(field, flux);
    let osc = oscillation_modulus(field, x0, &[h]).map_err(|_| {
        Error::Precondition(format!("{x0:?} is too close to the boundary"))
    })?;
    if osc.osc[0] > 3.0 * floor {
        return Err(Error::Precondition(format!(
            "field is not continuous at {x0:?}: oscillation {} above {}",
            osc.osc[0],
            3.0 * floor
        )));
    }
    let value = field
        .interpolate(x0)
        .ok_or_else(|| Error::geometry(format!("{x0:?} is outside the grid")))?;
    let direction = flux.a(value);
    let speed = crate::flux::norm(&direction);
    if speed == 0.0 {
        return Ok(LineConstancy {
            x0: x0.to_vec(),
            value,
            direction,
            s_range: (0.0, 0.0),
            samples: 1,
            max_deviation: 0.0,
        });
    }
    let upper = g.upper();
    let (mut s_lo, mut s_hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..g.ndim() {
        let lo_c = g.axis_center(k, 0);
        let hi_c = upper[k] - 0.5 * g.spacing[k];
        let d = direction[k];
        if d.abs() > 1e-14 {
            let (a, b) = ((lo_c - x0[k]) / d, (hi_c - x0[k]) / d);
            s_lo = s_lo.max(a.min(b));
            s_hi = s_hi.min(a.max(b));
        }
    }
    let step = (0..g.ndim())
        .filter(|&k| direction[k].abs() > 1e-14)
        .map(|k| g.spacing[k] / direction[k].abs())
        .fold(f64::INFINITY, f64::min);
    let n_lo = (s_lo / step).ceil() as i64;
    let n_hi = (s_hi / step).floor() as i64;
    let mut max_dev = 0.0f64;
    let mut samples = 0;
    for n in n_lo..=n_hi {
        let s = n as f64 * step;
        let p: Vec<f64> = x0.iter().zip(&direction).map(|(x, d)| x + s * d).collect();
        if let Some(u) = field.interpolate(&p) {
            max_dev = max_dev.max((u - value).abs());
            samples += 1;
        }
    }
    Ok(LineConstancy {
        x0: x0.to_vec(),
        value,
        direction,
        s_range: (s_lo, s_hi),
        samples,
        max_deviation: max_dev,
    })
}

/// Root of `y - t a(u(y)) = x0` for a spatial frame, by fixed-point iteration
/// seeded at `x0 + t a(u(x0))`. Valid for small `t` on continuous data.
pub fn forward_foot(field: &ScalarField, flux: &FluxSpec, x0: &[f64], t: f64) -> Result<Vec<f64>> {
    let speed = |p: &[f64]| -> Result<Vec<f64>> {
        let u = field
            .interpolate(p)
            .ok_or_else(|| Error::geometry(format!("{p:?} left the grid")))?;
        Ok((0..flux.spatial_dim())
            .map(|k| flux.components[flux.spatial_component(k)].deriv(u, 0))
            .collect())
    };
    let tol = 0.1 * field.geometry().max_spacing();
    let mut y: Vec<f64> = x0.iter().zip(speed(x0)?).map(|(x, s)| x + t * s).collect();
    for _ in 0..100 {
        let next: Vec<f64> = x0.iter().zip(speed(&y)?).map(|(x, s)| x + t * s).collect();
        let step = crate::flux::norm(&next.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        y = next;
        if step <= tol {
            return Ok(y);
        }
    }
    Err(Error::Numerical(format!(
        "forward foot from {x0:?} did not settle at t = {t}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burgers_hull_is_a_segment() {
        let hull = velocity_hull(&FluxSpec::burgers(), 0.0, 1.0).unwrap();
        assert_eq!(hull.fixed, vec![(0, 1.0)]);
        assert_eq!(hull.vertices, vec![vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert!(hull.contains(&[1.0, 0.5], 0.0));
        assert!(!hull.contains(&[0.9, 0.5], 0.01));
        let point = velocity_hull(&FluxSpec::burgers(), 0.3, 0.3).unwrap();
        assert_eq!(point.vertices, vec![vec![1.0, 0.3]]);
    }

    #[test]
    fn parabola_hull() {
        let f = FluxSpec::generalized_burgers(2).unwrap();
        let hull = velocity_hull(&f, 0.0, 1.0).unwrap();
        // between the chord v and the parabola v^2
        assert!(hull.contains(&[1.0, 0.5, 0.4], 1e-12));
        assert!(!hull.contains(&[1.0, 0.5, 0.6], 1e-6));
        assert!(!hull.contains(&[1.0, 0.5, 0.2], 1e-6));
    }
}
