//! Anisotropic scaling `S_lambda` adapted to the derivatives of `a` at 0, and
//! the rescaled functions `u_{r,lambda}(x) = u(r S_lambda x) / lambda`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::FluxSpec;
use crate::grid::{Geometry, ScalarField};

const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingMap {
    /// Derivative orders `j_i`, one per basis vector `a^(j_i)(0)`. For
    /// time-augmented fluxes the leading 0 is the time direction.
    pub indexes: Vec<usize>,
    pub lambda: f64,
    pub matrix: Vec<Vec<f64>>,
    pub det: f64,
    /// Sum of the spatial indexes.
    pub q: usize,
    /// Upper end of the admissible lambda range; `None` when the basis stays
    /// independent on the whole value interval.
    pub v0: Option<f64>,
    pub time_augmented: bool,
}

impl ScalingMap {
    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn spatial_indexes(&self) -> &[usize] {
        if self.time_augmented {
            &self.indexes[1..]
        } else {
            &self.indexes
        }
    }

    pub fn diagonal(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        let scale = self
            .matrix
            .iter()
            .flatten()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..n {
            for j in 0..n {
                if i != j && self.matrix[i][j].abs() > 1e-12 * scale {
                    return None;
                }
            }
        }
        Some((0..n).map(|i| self.matrix[i][i]).collect())
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `v -> S^{-1} a(lambda v)`, the law satisfied by `u_{r,lambda}`.
    pub fn transformed_flux(&self, flux: &FluxSpec) -> Result<FluxSpec> {
        let diag = self.diagonal().ok_or_else(|| {
            Error::Unsupported("transformed flux needs a diagonal scaling matrix".into())
        })?;
        flux.transformed(&diag, self.lambda)
    }
}

fn rank(cols: &[Vec<f64>], dim: usize) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(dim, cols.len(), |r, c| cols[c][r]);
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * top).count()
}

/// Greedy (hence lexicographically smallest) derivative orders whose values
/// at 0 form a basis.
pub fn scaling_indexes(flux: &FluxSpec) -> Result<Vec<usize>> {
    let dim = flux.dim();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut idx = Vec::new();
    for j in 0..=flux.m_max {
        let col = flux.deriv(0.0, j);
        cols.push(col);
        if rank(&cols, dim) == cols.len() {
            idx.push(j);
            if idx.len() == dim {
                return Ok(idx);
            }
        } else {
            cols.pop();
        }
    }
    Err(Error::Construction(format!(
        "derivatives of a at 0 up to order {} span only {} of {dim} directions",
        flux.m_max,
        idx.len()
    )))
}

fn basis_independent_on(flux: &FluxSpec, indexes: &[usize], lo: f64, hi: f64) -> bool {
    let n = 64;
    (0..=n).all(|i| {
        let v = lo + (hi - lo) * i as f64 / n as f64;
        let cols: Vec<Vec<f64>> = indexes.iter().map(|&j| flux.deriv(v, j)).collect();
        rank(&cols, flux.dim()) == flux.dim()
    })
}

/// Largest dyadic `2^-k v_hi` for which the basis stays independent on
/// `[-lambda, lambda]`; `None` if it does on all of the value interval.
pub fn admissible_v0(flux: &FluxSpec, indexes: &[usize]) -> Option<f64> {
    let (lo, hi) = flux.interval;
    if basis_independent_on(flux, indexes, lo, hi) {
        return None;
    }
    let top = lo.abs().max(hi.abs());
    (0..60)
        .map(|k| top * 0.5f64.powi(k))
        .find(|&lam| basis_independent_on(flux, indexes, (-lam).max(lo), lam.min(hi)))
        .or(Some(0.0))
}

pub fn build_scaling(flux: &FluxSpec, lambda: f64) -> Result<ScalingMap> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::input("lambda must be positive"));
    }
    let indexes = scaling_indexes(flux)?;
    let v0 = admissible_v0(flux, &indexes);
    if let Some(v0) = v0 {
        if lambda >= v0 {
            return Err(Error::Range(format!("lambda = {lambda} is not below v0 = {v0}")));
        }
    }
    let dim = flux.dim();
    let b = DMatrix::from_fn(dim, dim, |r, c| flux.deriv(0.0, indexes[c])[r]);
    let b_inv = b
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Construction("derivative basis is singular".into()))?;
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        indexes.iter().map(|&j| lambda.powi(j as i32)),
    ));
    let s = &b * d * b_inv;
    let matrix = (0..dim)
        .map(|r| (0..dim).map(|c| s[(r, c)]).collect())
        .collect();
    let q: usize = indexes.iter().sum();
    Ok(ScalingMap {
        indexes,
        lambda,
        matrix,
        det: lambda.powi(q as i32),
        q,
        v0,
        time_augmented: flux.time_augmented,
    })
}

/// `gamma_0 = 1 / (1 + q)`.
pub fn gamma_zero(flux: &FluxSpec) -> Result<f64> {
    let indexes = scaling_indexes(flux)?;
    let lambda = match admissible_v0(flux, &indexes) {
        None => 0.5,
        Some(v0) => 0.5 * v0.min(1.0),
    };
    let map = build_scaling(flux, lambda)?;
    Ok(1.0 / (1.0 + map.q as f64))
}

/// Restriction of `map` to the axes a field of dimension `ndim` carries, and
/// the factor applied to the field's time stamp.
fn block_for(field_ndim: usize, map: &ScalingMap, r: f64) -> Result<(ScalingMap, f64)> {
    if field_ndim == map.dim() {
        return Ok((map.clone(), 1.0));
    }
    if map.time_augmented && field_ndim + 1 == map.dim() {
        let mut sub = map.clone();
        sub.matrix = map.matrix[1..]
            .iter()
            .map(|row| row[1..].to_vec())
            .collect();
        sub.indexes = map.indexes[1..].to_vec();
        return Ok((sub, 1.0 / r));
    }
    Err(Error::geometry(format!(
        "field of dimension {field_ndim} does not match a scaling of dimension {}",
        map.dim()
    )))
}

/// `u_{r,lambda}` on the preimage of the field's box (diagonal maps only).
pub fn apply_scaling(field: &ScalarField, r: f64, map: &ScalingMap) -> Result<ScalarField> {
    let (block, _) = block_for(field.ndim(), map, r)?;
    let diag = block.diagonal().ok_or_else(|| {
        Error::Unsupported("default target grid needs a diagonal map; pass a target".into())
    })?;
    let g = field.geometry();
    let upper = g.upper();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for k in 0..g.ndim() {
        let s = r * diag[k];
        let (a, b) = (g.origin[k] / s, upper[k] / s);
        lo.push(a.min(b));
        hi.push(a.max(b));
    }
    let target = Geometry::from_box(&lo, &hi, &g.dims)?;
    apply_scaling_onto(field, r, map, &target)
}

/// `u_{r,lambda}` sampled at the centers of `target`.
pub fn apply_scaling_onto(
    field: &ScalarField,
    r: f64,
    map: &ScalingMap,
    target: &Geometry,
) -> Result<ScalarField> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::input("r must be positive"));
    }
    let (block, time_factor) = block_for(field.ndim(), map, r)?;
    if target.ndim() != field.ndim() {
        return Err(Error::geometry("target grid dimension differs from the field"));
    }
    let g = field.geometry();
    let lo = g.lower().to_vec();
    let hi = g.upper();
    let slack: Vec<f64> = g.spacing.iter().map(|h| 1e-9 * h).collect();
    let mut values = Vec::with_capacity(target.len());
    for i in 0..target.len() {
        let x = target.center(i);
        let mut y: Vec<f64> = block.apply(&x).iter().map(|v| r * v).collect();
        for k in 0..y.len() {
            if y[k] < lo[k] - slack[k] || y[k] > hi[k] + slack[k] {
                return Err(Error::geometry(format!(
                    "target point {x:?} maps to {y:?}, outside the field's domain"
                )));
            }
            y[k] = y[k].clamp(lo[k], hi[k]);
        }
        let u = field
            .interpolate(&y)
            .ok_or_else(|| Error::geometry("interpolation outside the domain"))?;
        values.push(u / map.lambda);
    }
    ScalarField::new(target.clone(), values, field.time * time_factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_burgers_two() {
        let f = FluxSpec::generalized_burgers(2).unwrap();
        let s = build_scaling(&f, 0.5).unwrap();
        assert_eq!(s.spatial_indexes(), &[1, 2]);
        assert_eq!(s.q, 3);
        assert!((s.det - 0.125).abs() < 1e-15);
        let d = s.diagonal().unwrap();
        assert!((d[0] - 1.0).abs() < 1e-15);
        assert!((d[1] - 0.5).abs() < 1e-15);
        assert!((d[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lambda_one_is_identity() {
        let s = build_scaling(&FluxSpec::burgers(), 1.0).unwrap();
        assert_eq!(s.det, 1.0);
        assert_eq!(s.diagonal().unwrap(), vec![1.0, 1.0]);
        assert_eq!(s.v0, None);
    }

    #[test]
    fn gamma_zero_closed_forms() {
        assert_eq!(gamma_zero(&FluxSpec::burgers()).unwrap(), 0.5);
        for d in 1..=3u32 {
            let f = FluxSpec::generalized_burgers(d).unwrap();
            let expect = 1.0 / (1.0 + (d * (d + 1) / 2) as f64);
            assert_eq!(gamma_zero(&f).unwrap(), expect);
        }
    }

    #[test]
    fn constant_field_scales_by_lambda() {
        let g = Geometry::from_box(&[0.0, -1.0], &[1.0, 1.0], &[8, 16]).unwrap();
        let u = ScalarField::constant(g, 0.3, 0.0).unwrap();
        let s = build_scaling(&FluxSpec::burgers(), 0.25).unwrap();
        let w = apply_scaling(&u, 0.5, &s).unwrap();
        assert!(w.values().iter().all(|&v| (v - 1.2).abs() < 1e-12));
    }

    #[test]
    fn non_spanning_flux_fails() {
        let f = FluxSpec::transport(&[0.5]).unwrap();
        assert!(matches!(build_scaling(&f, 0.5), Err(Error::Construction(_))));
    }
}
