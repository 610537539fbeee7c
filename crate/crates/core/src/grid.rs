//! Uniform axis-aligned grids and cell-averaged scalar fields.
//!
//! Cells are stored row-major with the last axis varying fastest. Cell `i`
//! along an axis covers `[origin + i*h, origin + (i+1)*h]`, so its center sits
//! at `origin + (i + 0.5)*h`. For space-time data axis 0 is time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub dims: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
}

impl Geometry {
    pub fn new(dims: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len() != origin.len() || dims.len() != spacing.len() {
            return Err(Error::geometry("dims, origin and spacing must have equal nonzero length"));
        }
        if dims.iter().any(|&n| n == 0) {
            return Err(Error::geometry("every axis needs at least one cell"));
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::geometry(format!("spacing must be positive, got {spacing:?}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::geometry("origin must be finite"));
        }
        Ok(Self {
            dims,
            origin,
            spacing,
        })
    }

    /// Grid with `n` cells per axis covering the box `[lo, hi]`.
    pub fn from_box(lo: &[f64], hi: &[f64], dims: &[usize]) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != dims.len() {
            return Err(Error::geometry("box corners and dims disagree in length"));
        }
        let spacing = lo
            .iter()
            .zip(hi)
            .zip(dims)
            .map(|((a, b), &n)| (b - a) / n.max(1) as f64)
            .collect();
        Self::new(dims.to_vec(), lo.to_vec(), spacing)
    }

    pub fn line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::from_box(&[lo], &[hi], &[n])
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn lower(&self) -> &[f64] {
        &self.origin
    }

    pub fn upper(&self) -> Vec<f64> {
        (0..self.ndim())
            .map(|k| self.origin[k] + self.dims[k] as f64 * self.spacing[k])
            .collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.ndim()];
        for k in (0..self.ndim().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            flat = flat * self.dims[k] + i;
        }
        flat
    }

    pub fn unflat(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.ndim()];
        for k in (0..self.ndim()).rev() {
            idx[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
        idx
    }

    pub fn axis_center(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + (i as f64 + 0.5) * self.spacing[axis]
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        self.unflat(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.axis_center(k, i))
            .collect()
    }

    /// Index of the cell containing `point`, if inside the domain.
    pub fn locate(&self, point: &[f64]) -> Option<Vec<usize>> {
        if point.len() != self.ndim() {
            return None;
        }
        let mut idx = Vec::with_capacity(self.ndim());
        for k in 0..self.ndim() {
            let s = (point[k] - self.origin[k]) / self.spacing[k];
            if !(s >= 0.0 && s <= self.dims[k] as f64) {
                return None;
            }
            idx.push((s.floor() as usize).min(self.dims[k] - 1));
        }
        Some(idx)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        self.locate(point).is_some()
    }

    /// True when the closed ball `B_r(center)` lies inside the domain box.
    pub fn contains_ball(&self, center: &[f64], radius: f64) -> bool {
        let upper = self.upper();
        center.len() == self.ndim()
            && (0..self.ndim()).all(|k| {
                center[k] - radius >= self.origin[k] - 1e-12 * radius.max(1.0)
                    && center[k] + radius <= upper[k] + 1e-12 * radius.max(1.0)
            })
    }

    /// Flat indices of cells whose centers lie within `radius` of `center`.
    pub fn cells_in_ball(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let d = self.ndim();
        let mut lo = vec![0usize; d];
        let mut hi = vec![0usize; d];
        for k in 0..d {
            let a = ((center[k] - radius - self.origin[k]) / self.spacing[k] - 0.5).ceil();
            let b = ((center[k] + radius - self.origin[k]) / self.spacing[k] - 0.5).floor();
            if b < 0.0 || a > (self.dims[k] - 1) as f64 || a > b {
                return Vec::new();
            }
            lo[k] = a.max(0.0) as usize;
            hi[k] = (b as usize).min(self.dims[k] - 1);
        }
        let r2 = radius * radius * (1.0 + 1e-12);
        let mut out = Vec::new();
        let mut idx = lo.clone();
        loop {
            let dist2: f64 = (0..d)
                .map(|k| {
                    let c = self.axis_center(k, idx[k]) - center[k];
                    c * c
                })
                .sum();
            if dist2 <= r2 {
                out.push(self.flat(&idx));
            }
            let mut k = d;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if idx[k] < hi[k] {
                    idx[k] += 1;
                    break;
                }
                idx[k] = lo[k];
            }
        }
    }

    /// Index offsets of a discrete ball of physical radius `radius` around a
    /// cell center.
    pub fn ball_offsets(&self, radius: f64) -> Vec<Vec<isize>> {
        let d = self.ndim();
        let reach: Vec<isize> = self
            .spacing
            .iter()
            .map(|h| (radius / h + 1e-9).floor() as isize)
            .collect();
        let r2 = radius * radius * (1.0 + 1e-12);
        let mut out = Vec::new();
        let mut off: Vec<isize> = reach.iter().map(|r| -r).collect();
        loop {
            let dist2: f64 = (0..d)
                .map(|k| {
                    let c = off[k] as f64 * self.spacing[k];
                    c * c
                })
                .sum();
            if dist2 <= r2 {
                out.push(off.clone());
            }
            let mut k = d;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if off[k] < reach[k] {
                    off[k] += 1;
                    break;
                }
                off[k] = -reach[k];
            }
        }
    }

    pub(crate) fn offset_index(&self, idx: &[usize], off: &[isize]) -> Option<usize> {
        let mut flat = 0usize;
        for k in 0..self.ndim() {
            let j = idx[k] as isize + off[k];
            if j < 0 || j >= self.dims[k] as isize {
                return None;
            }
            flat = flat * self.dims[k] + j as usize;
        }
        Some(flat)
    }

    pub fn same_shape(&self, other: &Geometry) -> bool {
        self.dims == other.dims
            && self
                .origin
                .iter()
                .zip(&other.origin)
                .chain(self.spacing.iter().zip(&other.spacing))
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    geometry: Geometry,
    values: Vec<f64>,
    bounds: (f64, f64),
    pub time: f64,
}

impl ScalarField {
    pub fn new(geometry: Geometry, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::geometry(format!(
                "{} values for a grid of {} cells",
                values.len(),
                geometry.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value at cell {bad}")));
        }
        let bounds = min_max(&values);
        Ok(Self {
            geometry,
            values,
            bounds,
            time,
        })
    }

    pub fn constant(geometry: Geometry, value: f64, time: f64) -> Result<Self> {
        let n = geometry.len();
        Self::new(geometry, vec![value; n], time)
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(geometry: Geometry, time: f64, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..geometry.len())
            .map(|i| f(&geometry.center(i)))
            .collect();
        Self::new(geometry, values, time)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn ndim(&self) -> usize {
        self.geometry.ndim()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_range(&self) -> f64 {
        self.bounds.1 - self.bounds.0
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.geometry.clone(), values, self.time)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.geometry.same_shape(&other.geometry) {
            return Err(Error::geometry("fields live on different grids"));
        }
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn sup_norm(&self) -> f64 {
        self.bounds.0.abs().max(self.bounds.1.abs())
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.geometry.cell_volume()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.geometry.cell_volume()
    }

    pub fn l1_distance(&self, other: &ScalarField) -> Result<f64> {
        if !self.geometry.same_shape(&other.geometry) {
            return Err(Error::geometry("fields live on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.geometry.cell_volume())
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.values[self.geometry.flat(idx)]
    }

    /// Value of the cell containing `point`.
    pub fn cell_value(&self, point: &[f64]) -> Option<f64> {
        self.geometry
            .locate(point)
            .map(|idx| self.values[self.geometry.flat(&idx)])
    }

    /// Multilinear interpolation between cell centers, constant beyond the
    /// outermost centers. `None` outside the domain.
    pub fn interpolate(&self, point: &[f64]) -> Option<f64> {
        let g = &self.geometry;
        if !g.contains(point) {
            return None;
        }
        let d = g.ndim();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for k in 0..d {
            if g.dims[k] == 1 {
                continue;
            }
            let s = (point[k] - g.origin[k]) / g.spacing[k] - 0.5;
            let i0 = s.floor().clamp(0.0, (g.dims[k] - 2) as f64);
            base[k] = i0 as usize;
            frac[k] = (s - i0).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        let mut idx = vec![0usize; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for k in 0..d {
                let bit = (corner >> k) & 1;
                if g.dims[k] == 1 {
                    if bit == 1 {
                        w = 0.0;
                    }
                    idx[k] = 0;
                    continue;
                }
                idx[k] = base[k] + bit;
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
            }
            if w != 0.0 {
                acc += w * self.values[g.flat(&idx)];
            }
        }
        Some(acc)
    }

    /// Min and max over the cells whose centers lie in `B_r(center)`.
    pub fn ball_extrema(&self, center: &[f64], radius: f64) -> Option<(f64, f64)> {
        let cells = self.geometry.cells_in_ball(center, radius);
        if cells.is_empty() {
            return None;
        }
        Some(min_max_iter(cells.iter().map(|&i| self.values[i])))
    }

    /// Discrete total variation: sum over axes of |jumps| times face area.
    pub fn total_variation(&self) -> f64 {
        let g = &self.geometry;
        let strides = g.strides();
        let vol = g.cell_volume();
        let mut tv = 0.0;
        for k in 0..g.ndim() {
            let face = vol / g.spacing[k];
            for flat in 0..g.len() {
                let i = (flat / strides[k]) % g.dims[k];
                if i + 1 < g.dims[k] {
                    tv += (self.values[flat + strides[k]] - self.values[flat]).abs() * face;
                }
            }
        }
        tv
    }

    /// Restriction of a space-time field to a single slice along axis 0.
    pub fn slice_axis0(&self, i: usize) -> Result<ScalarField> {
        let g = &self.geometry;
        if g.ndim() < 2 || i >= g.dims[0] {
            return Err(Error::geometry("slice index out of range"));
        }
        let inner: usize = g.dims[1..].iter().product();
        let geometry = Geometry::new(
            g.dims[1..].to_vec(),
            g.origin[1..].to_vec(),
            g.spacing[1..].to_vec(),
        )?;
        ScalarField::new(
            geometry,
            self.values[i * inner..(i + 1) * inner].to_vec(),
            g.axis_center(0, i),
        )
    }
}

pub(crate) fn min_max(values: &[f64]) -> (f64, f64) {
    min_max_iter(values.iter().copied())
}

pub(crate) fn min_max_iter(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Extremum or sum of a field over the discrete ball around every cell.
pub(crate) fn ball_reduce(
    geometry: &Geometry,
    values: &[f64],
    radius: f64,
    init: f64,
    op: impl Fn(f64, f64) -> f64 + Sync,
) -> Vec<f64> {
    use rayon::prelude::*;
    let offsets = geometry.ball_offsets(radius);
    (0..geometry.len())
        .into_par_iter()
        .map(|flat| {
            let idx = geometry.unflat(flat);
            offsets.iter().fold(init, |acc, off| {
                match geometry.offset_index(&idx, off) {
                    Some(j) => op(acc, values[j]),
                    None => acc,
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_round_trip_and_centers() {
        let g = Geometry::from_box(&[0.0, -1.0], &[1.0, 1.0], &[4, 8]).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.flat(&g.unflat(flat)), flat);
        }
        assert_eq!(g.center(0), vec![0.125, -0.875]);
        assert_eq!(g.strides(), vec![8, 1]);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Geometry::new(vec![4], vec![0.0], vec![0.0]).is_err());
        assert!(Geometry::new(vec![0], vec![0.0], vec![1.0]).is_err());
        assert!(Geometry::new(vec![2, 2], vec![0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_linear_data() {
        let g = Geometry::from_box(&[0.0, 0.0], &[1.0, 2.0], &[10, 20]).unwrap();
        let f = ScalarField::from_fn(g, 0.0, |p| 2.0 * p[0] - p[1] + 0.5).unwrap();
        for p in [[0.3, 0.7], [0.51, 1.49], [0.06, 0.06]] {
            let v = f.interpolate(&p).unwrap();
            assert!((v - (2.0 * p[0] - p[1] + 0.5)).abs() < 1e-12);
        }
        assert!(f.interpolate(&[1.5, 0.0]).is_none());
    }

    #[test]
    fn ball_cells_match_offsets() {
        let g = Geometry::from_box(&[0.0, 0.0], &[1.0, 1.0], &[20, 20]).unwrap();
        let center = g.center(g.flat(&[10, 10]));
        let direct = g.cells_in_ball(&center, 0.12);
        let offsets = g.ball_offsets(0.12);
        assert_eq!(direct.len(), offsets.len());
    }

    #[test]
    fn total_variation_of_a_step() {
        let g = Geometry::line(-1.0, 1.0, 100).unwrap();
        let f = ScalarField::from_fn(g, 0.0, |p| if p[0] < 0.0 { 2.0 } else { 0.5 }).unwrap();
        assert!((f.total_variation() - 1.5).abs() < 1e-12);
        assert_eq!(f.bounds(), (0.5, 2.0));
    }
}
