//! Kinetic function `f(x, v)` and the entropy dissipation measure `mu`,
//! estimated from cellwise Kruzhkov entropy residuals of the scheme.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::FluxSpec;
use crate::grid::{Geometry, ScalarField};
use crate::solver::entropy::step_level_residuals;
use crate::solver::{EntropyKind, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticField {
    pub geometry: Geometry,
    pub v_levels: Vec<f64>,
    /// Row-major `(cell, level)` entries in {-1, 0, 1}.
    pub values: Vec<i8>,
}

impl KineticField {
    pub fn at(&self, cell: usize, level: usize) -> i8 {
        self.values[cell * self.v_levels.len() + level]
    }

    /// `sum_levels |f| * width` per cell, which recovers `|u|` to within one
    /// level width.
    pub fn reconstruct_abs(&self) -> Vec<f64> {
        let w = level_widths(&self.v_levels);
        let nl = self.v_levels.len();
        self.values
            .chunks(nl)
            .map(|row| row.iter().zip(&w).map(|(&f, &w)| f.abs() as f64 * w).sum())
            .collect()
    }
}

fn check_sorted(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::input("need at least one level"));
    }
    if levels.iter().any(|l| !l.is_finite()) || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("levels must be finite and strictly increasing"));
    }
    Ok(())
}

#[inline]
fn chi(u: f64, v: f64) -> i8 {
    if 0.0 < v && v < u {
        1
    } else if u < v && v < 0.0 {
        -1
    } else {
        0
    }
}

pub fn kinetic_function(field: &ScalarField, v_levels: &[f64]) -> Result<KineticField> {
    check_sorted(v_levels)?;
    let values = field
        .values()
        .iter()
        .flat_map(|&u| v_levels.iter().map(move |&v| chi(u, v)))
        .collect();
    Ok(KineticField {
        geometry: field.geometry().clone(),
        v_levels: v_levels.to_vec(),
        values,
    })
}

/// Widths of the Voronoi cells of the levels; the outer cells mirror their
/// inner half. A single level gets unit width.
pub fn level_widths(levels: &[f64]) -> Vec<f64> {
    let n = levels.len();
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| {
            let left = if i == 0 {
                levels[1] - levels[0]
            } else {
                levels[i] - levels[i - 1]
            };
            let right = if i + 1 == n {
                levels[n - 1] - levels[n - 2]
            } else {
                levels[i + 1] - levels[i]
            };
            0.5 * (left + right)
        })
        .collect()
}

/// `count` bin midpoints over `[lo - 1%, hi + 1%]` of the range.
pub fn default_levels(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(1);
    let pad = 0.01 * (hi - lo).abs().max(1e-3 * lo.abs().max(hi.abs())).max(1e-12);
    let (a, b) = (lo - pad, hi + pad);
    (0..count)
        .map(|i| a + (b - a) * (i as f64 + 0.5) / count as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassEntry {
    pub t_index: usize,
    pub cell_index: usize,
    pub level_index: usize,
    pub mass: f64,
}

/// Nonnegative mass per (space-time cell, level). Time cells are the steps
/// `[t_n, t_{n+1}]` of the trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationMeasure {
    pub geometry: Geometry,
    pub v_levels: Vec<f64>,
    pub entries: Vec<MassEntry>,
    /// Mass per space-time cell, summed over levels.
    pub cell_totals: Vec<f64>,
    /// Mass per level, summed over cells.
    pub level_totals: Vec<f64>,
    pub total: f64,
    /// Mass of the positive residuals removed by clipping.
    pub clipped: f64,
}

impl DissipationMeasure {
    pub fn zero(geometry: Geometry, v_levels: Vec<f64>) -> Self {
        let n = geometry.len();
        let nl = v_levels.len();
        Self {
            geometry,
            v_levels,
            entries: Vec::new(),
            cell_totals: vec![0.0; n],
            level_totals: vec![0.0; nl],
            total: 0.0,
            clipped: 0.0,
        }
    }

    pub fn spatial_cells(&self) -> usize {
        self.geometry.dims[1..].iter().product()
    }

    pub fn time_window(&self) -> f64 {
        self.geometry.dims[0] as f64 * self.geometry.spacing[0]
    }

    /// Mass of the cells whose centers lie in `B_r(center)`, all levels.
    pub fn ball_mass(&self, center: &[f64], radius: f64) -> f64 {
        self.geometry
            .cells_in_ball(center, radius)
            .iter()
            .map(|&i| self.cell_totals[i])
            .sum()
    }

    /// Mass in `B_r(center) x [v_lo, v_hi]`, counting each level's Voronoi cell
    /// by its overlap with the slab.
    pub fn slab_mass(&self, center: &[f64], radius: f64, v_lo: f64, v_hi: f64) -> f64 {
        let widths = level_widths(&self.v_levels);
        let frac: Vec<f64> = self
            .v_levels
            .iter()
            .zip(&widths)
            .map(|(&l, &w)| {
                let (a, b) = (l - 0.5 * w, l + 0.5 * w);
                ((b.min(v_hi) - a.max(v_lo)).max(0.0)) / w
            })
            .collect();
        let cells: std::collections::HashSet<usize> =
            self.geometry.cells_in_ball(center, radius).into_iter().collect();
        let nx = self.spatial_cells();
        self.entries
            .iter()
            .filter(|e| cells.contains(&(e.t_index * nx + e.cell_index)))
            .map(|e| e.mass * frac[e.level_index])
            .sum()
    }

    /// Total mass per unit time.
    pub fn rate(&self) -> f64 {
        self.total / self.time_window()
    }
}

/// Dissipation measure of an every-step trajectory under `flux`.
///
/// For each step, level `l` and cell, the residual `D` of `|u - l|` under the
/// scheme's numerical entropy flux gives mass `max(0, -D) / 2 * |cell| * width(l)`.
pub fn entropy_dissipation(
    traj: &Trajectory,
    flux: &FluxSpec,
    v_levels: &[f64],
) -> Result<DissipationMeasure> {
    check_sorted(v_levels)?;
    let dt = traj
        .step_dt
        .ok_or_else(|| Error::input("dissipation needs an every-step trajectory"))?;
    if flux.spatial_dim() != traj.geometry().ndim() {
        return Err(Error::input(format!(
            "flux {} does not match a {}-dimensional trajectory",
            flux.name,
            traj.geometry().ndim()
        )));
    }
    let g = traj.geometry();
    let steps = traj.frames.len() - 1;
    let mut dims = vec![steps.max(1)];
    dims.extend(&g.dims);
    let mut origin = vec![traj.frames[0].time];
    origin.extend(&g.origin);
    let mut spacing = vec![dt];
    spacing.extend(&g.spacing);
    let st_geometry = Geometry::new(dims, origin, spacing)?;
    if steps == 0 {
        return Ok(DissipationMeasure::zero(st_geometry, v_levels.to_vec()));
    }
    let widths = level_widths(v_levels);
    let vol = g.cell_volume();
    let per_step: Vec<(Vec<MassEntry>, f64)> = traj
        .frames
        .par_windows(2)
        .enumerate()
        .map(|(n, w)| {
            let res = step_level_residuals(
                &w[0],
                &w[1],
                flux,
                dt,
                &traj.config,
                v_levels,
                EntropyKind::Kruzhkov,
            )?;
            let mut entries = Vec::new();
            let mut clipped = 0.0;
            for (cell, li, d) in res {
                let m = 0.5 * d.abs() * vol * widths[li];
                if d < 0.0 {
                    entries.push(MassEntry {
                        t_index: n,
                        cell_index: cell,
                        level_index: li,
                        mass: m,
                    });
                } else {
                    clipped += m;
                }
            }
            Ok((entries, clipped))
        })
        .collect::<Result<_>>()?;
    let mut measure = DissipationMeasure::zero(st_geometry, v_levels.to_vec());
    let nx = g.len();
    for (entries, clipped) in per_step {
        measure.clipped += clipped;
        for e in entries {
            measure.cell_totals[e.t_index * nx + e.cell_index] += e.mass;
            measure.level_totals[e.level_index] += e.mass;
            measure.total += e.mass;
            measure.entries.push(e);
        }
    }
    Ok(measure)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureBounds {
    pub center: Vec<f64>,
    pub radius: f64,
    pub delta: f64,
    pub max_speed: f64,
    pub l1_outer: f64,
    /// `mu(B_R x R)` and its bound `max|a| / (delta R) * ||u||_{L1(B_{R(1+delta)})}`.
    pub lhs_total: f64,
    pub rhs_total: f64,
    /// Slab `[v, v + r]`: `mu(B_R x [v, v+r])` against `r` times the same bound.
    pub slab: (f64, f64),
    pub lhs_slab: f64,
    pub rhs_slab: f64,
    pub tol: f64,
    pub total_ok: bool,
    pub slab_ok: bool,
}

/// Plug-in check of the two mass bounds on `B_R(center)` for a nonnegative
/// space-time `field` (time on axis 0) and its measure.
pub fn measure_bounds_check(
    measure: &DissipationMeasure,
    field: &ScalarField,
    flux: &FluxSpec,
    delta: f64,
    center: &[f64],
    radius: f64,
    slab: (f64, f64),
) -> Result<MeasureBounds> {
    if !(delta > 0.0 && radius > 0.0 && slab.1 >= 0.0) {
        return Err(Error::input("delta, radius and slab width must be positive"));
    }
    let g = field.geometry();
    if g.ndim() != measure.geometry.ndim() || center.len() != g.ndim() {
        return Err(Error::input("field, measure and center disagree in dimension"));
    }
    let outer = radius * (1.0 + delta);
    if !g.contains_ball(center, outer) {
        return Err(Error::input(format!(
            "ball of radius {outer} around {center:?} leaves the domain"
        )));
    }
    if field.bounds().0 < -1e-12 {
        return Err(Error::input("bounds are stated for nonnegative fields"));
    }
    let vol = g.cell_volume();
    let l1_outer: f64 = g
        .cells_in_ball(center, outer)
        .iter()
        .map(|&i| field.values()[i].abs())
        .sum::<f64>()
        * vol;
    let max_speed = flux.max_speed_norm(0.0, field.bounds().1.max(0.0));
    let rhs_total = max_speed / (delta * radius) * l1_outer;
    let lhs_total = measure.ball_mass(center, radius);
    let lhs_slab = measure.slab_mass(center, radius, slab.0, slab.0 + slab.1);
    let rhs_slab = slab.1 * rhs_total;
    let tol = 5.0 * g.max_spacing() * rhs_total / radius + measure.clipped;
    Ok(MeasureBounds {
        center: center.to_vec(),
        radius,
        delta,
        max_speed,
        l1_outer,
        lhs_total,
        rhs_total,
        slab,
        lhs_slab,
        rhs_slab,
        tol,
        total_ok: lhs_total <= rhs_total + tol,
        slab_ok: lhs_slab <= rhs_slab + tol,
    })
}
