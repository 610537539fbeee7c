//! Truncation ladders, the `L1 -> Linf` oscillation estimate as an empirical
//! fit, sup/inf convolutions and the exponent arithmetic of the iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ball_reduce, ScalarField};

pub const DEFAULT_LADDER_STEPS: usize = 25;
pub const MAX_LADDER_STEPS: usize = 40;

/// Ball `B_{r R}(center)` where `r` is the unit-scale radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    /// Physical length of the unit radius.
    pub scale: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("ball needs a finite center and a positive scale"));
        }
        Ok(Self { center, scale })
    }

    fn check_fits(&self, field: &ScalarField, r: f64) -> Result<()> {
        let g = field.geometry();
        if self.center.len() != g.ndim() {
            return Err(Error::input("ball center and field disagree in dimension"));
        }
        if !g.contains_ball(&self.center, r * self.scale) {
            return Err(Error::input(format!(
                "B_{r} around {:?} at scale {} leaves the domain",
                self.center, self.scale
            )));
        }
        Ok(())
    }

    fn cells(&self, field: &ScalarField, r: f64) -> Vec<usize> {
        field.geometry().cells_in_ball(&self.center, r * self.scale)
    }

    pub fn sup(&self, field: &ScalarField, r: f64) -> f64 {
        self.cells(field, r)
            .iter()
            .map(|&i| field.values()[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn l1(&self, field: &ScalarField, r: f64) -> f64 {
        self.cells(field, r)
            .iter()
            .map(|&i| field.values()[i].abs())
            .sum::<f64>()
            * field.geometry().cell_volume()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationLadder {
    #[serde(rename = "U")]
    pub u_top: f64,
    /// `l_k = (1 - 2^{-k}) U`.
    pub levels: Vec<f64>,
    /// `r_k = 1 + 2^{-k}` at unit scale.
    pub radii: Vec<f64>,
    /// `A_k = int_{B_{r_k}} (u - l_k)_+`.
    #[serde(rename = "A")]
    pub masses: Vec<f64>,
}

impl TruncationLadder {
    pub fn is_nonincreasing(&self) -> bool {
        self.masses.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn last_mass(&self) -> f64 {
        *self.masses.last().expect("ladder is nonempty")
    }
}

/// Ladder of `field` over `B_2(ball)` for `k = 0..=steps`.
pub fn truncation_ladder(
    field: &ScalarField,
    ball: &Ball,
    u_top: f64,
    steps: usize,
) -> Result<TruncationLadder> {
    if steps > MAX_LADDER_STEPS {
        return Err(Error::input(format!(
            "at most {MAX_LADDER_STEPS} ladder steps, got {steps}"
        )));
    }
    if !(u_top > 0.0 && u_top.is_finite()) {
        return Err(Error::input("U must be positive"));
    }
    ball.check_fits(field, 2.0)?;
    let tol = 1e-12 * field.sup_norm().max(1.0);
    let cells = ball.cells(field, 2.0);
    if cells.iter().any(|&i| field.values()[i] < -tol) {
        return Err(Error::input("ladder needs a nonnegative field on B_2"));
    }
    let g = field.geometry();
    let vol = g.cell_volume();
    let dist: Vec<(f64, f64)> = cells
        .iter()
        .map(|&i| {
            let c = g.center(i);
            let d = crate::flux::norm(
                &c.iter().zip(&ball.center).map(|(a, b)| a - b).collect::<Vec<_>>(),
            ) / ball.scale;
            (d, field.values()[i])
        })
        .collect();
    let mut levels = Vec::with_capacity(steps + 1);
    let mut radii = Vec::with_capacity(steps + 1);
    let mut masses = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let w = 0.5f64.powi(k as i32);
        let (l, r) = ((1.0 - w) * u_top, 1.0 + w);
        let reach = r * (1.0 + 1e-12);
        let a: f64 = dist
            .iter()
            .filter(|(d, _)| *d <= reach)
            .map(|(_, u)| (u - l).max(0.0))
            .sum::<f64>()
            * vol;
        levels.push(l);
        radii.push(r);
        masses.push(a);
    }
    Ok(TruncationLadder {
        u_top,
        levels,
        radii,
        masses,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub gamma: f64,
    /// Smallest `C` with `sup_{B_1} u <= C ||u||_{L1(B_2)}^gamma` on the library.
    pub c: f64,
    /// Log-log slope of the ratios against `||u||_{L1(B_2)}`; `C` stays bounded
    /// as the norm shrinks when the slope is not negative.
    pub slope: f64,
    pub finite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationBound {
    /// `(sup_{B_1} u, ||u||_{L1(B_2)})` per field.
    pub pairs: Vec<(f64, f64)>,
    pub fits: Vec<GammaFit>,
    /// Largest gamma with finite `C`, if any.
    pub best: Option<GammaFit>,
    /// `sup / L1^gamma` per field at the best gamma.
    pub ratios: Vec<f64>,
}

/// Fits `sup_{B_1} u <= C ||u||_{L1(B_2)}^gamma` on a library of fields.
///
/// A gamma counts as finite when no field has zero `L1` norm with a positive
/// sup and, across fields with positive norm spanning more than a factor 2,
/// the ratios do not grow as the norm shrinks (log-log slope at least `-0.02`).
pub fn oscillation_bound_check(
    fields: &[ScalarField],
    ball: &Ball,
    gamma_grid: &[f64],
) -> Result<OscillationBound> {
    if fields.is_empty() {
        return Err(Error::input("empty field library"));
    }
    if gamma_grid.is_empty() || gamma_grid.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
        return Err(Error::input("gamma grid must lie in (0, 1]"));
    }
    let mut pairs = Vec::with_capacity(fields.len());
    for f in fields {
        ball.check_fits(f, 2.0)?;
        pairs.push((ball.sup(f, 1.0).max(0.0), ball.l1(f, 2.0)));
    }
    let tiny = 1e-300;
    let positive: Vec<(f64, f64)> = pairs
        .iter()
        .copied()
        .filter(|&(s, l)| s > tiny && l > tiny)
        .collect();
    let zero_mass_sup = pairs.iter().any(|&(s, l)| l <= tiny && s > tiny);
    let spread = positive
        .iter()
        .map(|p| p.1)
        .fold((f64::INFINITY, 0.0f64), |(a, b), l| (a.min(l), b.max(l)));
    let fits: Vec<GammaFit> = gamma_grid
        .iter()
        .map(|&gamma| {
            let c = positive
                .iter()
                .map(|&(s, l)| s / l.powf(gamma))
                .fold(0.0, f64::max);
            let slope = if positive.len() >= 2 && spread.1 > 2.0 * spread.0 {
                let pts: Vec<(f64, f64)> = positive
                    .iter()
                    .map(|&(s, l)| (l.ln(), (s / l.powf(gamma)).ln()))
                    .collect();
                crate::flux::least_squares(&pts).0
            } else {
                0.0
            };
            GammaFit {
                gamma,
                c,
                slope,
                finite: !zero_mass_sup && c.is_finite() && slope >= -0.02,
            }
        })
        .collect();
    let best = fits
        .iter()
        .filter(|f| f.finite)
        .max_by(|a, b| a.gamma.total_cmp(&b.gamma))
        .cloned();
    let ratios = match &best {
        Some(b) => pairs
            .iter()
            .map(|&(s, l)| if l > tiny { s / l.powf(b.gamma) } else { 0.0 })
            .collect(),
        None => Vec::new(),
    };
    Ok(OscillationBound {
        pairs,
        fits,
        best,
        ratios,
    })
}

/// Dilation and erosion of `field` by the discrete `epsilon`-ball.
pub fn sup_inf_convolution(field: &ScalarField, epsilon: f64) -> Result<(ScalarField, ScalarField)> {
    let g = field.geometry();
    let h = g.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(epsilon >= h * (1.0 - 1e-9)) {
        return Err(Error::input(format!(
            "epsilon {epsilon} is below the grid resolution {h}"
        )));
    }
    let upper = ball_reduce(g, field.values(), epsilon, f64::NEG_INFINITY, f64::max);
    let lower = ball_reduce(g, field.values(), epsilon, f64::INFINITY, f64::min);
    Ok((field.with_values(upper)?, field.with_values(lower)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiExponents {
    /// `1/p' = (1 - theta)/2 + theta/d - theta/(4d)`.
    pub inv_p_prime: f64,
    pub p_prime: f64,
    /// `delta = (1 + theta)/2 + 1/p' - 1`, which equals `3 theta / (4d)`.
    pub delta: f64,
}

pub fn degiorgi_exponents(theta: f64, d: usize) -> Result<DeGiorgiExponents> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::input(format!("theta = {theta} must lie in (0, 1)")));
    }
    if d == 0 {
        return Err(Error::input("dimension must be at least 1"));
    }
    let d = d as f64;
    let inv_p_prime = (1.0 - theta) / 2.0 + theta / d - theta / (4.0 * d);
    let delta = (1.0 + theta) / 2.0 + inv_p_prime - 1.0;
    assert!(delta > 0.0, "delta = {delta} for theta = {theta}");
    Ok(DeGiorgiExponents {
        inv_p_prime,
        p_prime: 1.0 / inv_p_prime,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;

    fn disc(n: usize) -> Geometry {
        Geometry::from_box(&[-2.5, -2.5], &[2.5, 2.5], &[n, n]).unwrap()
    }

    #[test]
    fn constant_ladders() {
        let ball = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        let zero = ScalarField::constant(disc(50), 0.0, 0.0).unwrap();
        let lad = truncation_ladder(&zero, &ball, 1.0, 25).unwrap();
        assert!(lad.masses.iter().all(|&a| a == 0.0));
        let half = ScalarField::constant(disc(50), 0.5, 0.0).unwrap();
        let lad = truncation_ladder(&half, &ball, 1.0, 25).unwrap();
        let cells = half.geometry().cells_in_ball(&[0.0, 0.0], 2.0).len() as f64;
        assert!((lad.masses[0] - 0.5 * cells * 0.01).abs() < 1e-12);
        assert!(lad.masses[1..].iter().all(|&a| a == 0.0));
        assert!(truncation_ladder(&half, &ball, 1.0, 41).is_err());
        let neg = ScalarField::constant(disc(50), -0.1, 0.0).unwrap();
        assert!(truncation_ladder(&neg, &ball, 1.0, 5).is_err());
    }

    #[test]
    fn exponent_arithmetic() {
        let e = degiorgi_exponents(0.2, 2).unwrap();
        assert!((e.inv_p_prime - 0.475).abs() < 1e-15);
        assert!((e.delta - 0.075).abs() < 1e-15);
        let e = degiorgi_exponents(0.5, 1).unwrap();
        assert!((e.inv_p_prime - 0.625).abs() < 1e-15);
        assert!((e.delta - 0.375).abs() < 1e-15);
        let e = degiorgi_exponents(1e-9, 3).unwrap();
        assert!(e.delta > 0.0 && e.delta < 1e-9);
        assert!(degiorgi_exponents(0.0, 2).is_err());
        assert!(degiorgi_exponents(0.5, 0).is_err());
    }

    #[test]
    fn constants_give_gamma_one() {
        let g = Geometry::line(-3.0, 3.0, 600).unwrap();
        let lib: Vec<ScalarField> = (1..=10)
            .map(|i| ScalarField::constant(g.clone(), 0.1 * i as f64, 0.0).unwrap())
            .collect();
        let ball = Ball::new(vec![0.0], 1.0).unwrap();
        let grid: Vec<f64> = (1..=20).map(|i| 0.05 * i as f64).collect();
        let out = oscillation_bound_check(&lib, &ball, &grid).unwrap();
        let best = out.best.unwrap();
        assert_eq!(best.gamma, 1.0);
        let b2 = g.cells_in_ball(&[0.0], 2.0).len() as f64 * 0.01;
        assert!((best.c - 1.0 / b2).abs() < 1e-9);
        assert!(oscillation_bound_check(&[], &ball, &grid).is_err());
    }
}
