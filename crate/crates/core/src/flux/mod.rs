//! Flux functions `A(v)` with analytic velocity `a = A'` and its derivatives.
//!
//! Every velocity component has the form `a_k(v) = scale * g(rate * (v - shift))`
//! with `g` one of `x^p`, `cos x`, `sin x`. That family is closed under the
//! operations the rest of the crate needs: derivatives, primitives, diagonal
//! rescaling `S^{-1} a(lambda v)` and shifts `a(v - c)`, and its zero sets are
//! known in closed form.

mod classify;
mod sphere;

pub use classify::{
    estimate_alpha, hormander_order, nondegeneracy_constant, nonlinearity_measure,
    sign_decomposition, DirectionFit, NonlinearityReport, SampleGrid, SignPiece, SignTag,
};
pub use sphere::sphere_directions;
pub(crate) use classify::least_squares;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Monomial(u32),
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub shape: Shape,
    pub scale: f64,
    pub rate: f64,
    pub shift: f64,
}

impl Component {
    pub fn monomial(p: u32, scale: f64) -> Self {
        Self {
            shape: Shape::Monomial(p),
            scale,
            rate: 1.0,
            shift: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(0, c)
    }

    pub fn cos() -> Self {
        Self {
            shape: Shape::Cos,
            scale: 1.0,
            rate: 1.0,
            shift: 0.0,
        }
    }

    pub fn sin() -> Self {
        Self {
            shape: Shape::Sin,
            scale: 1.0,
            rate: 1.0,
            shift: 0.0,
        }
    }

    fn arg(&self, v: f64) -> f64 {
        self.rate * (v - self.shift)
    }

    /// `j`-th derivative of the velocity component.
    pub fn deriv(&self, v: f64, j: usize) -> f64 {
        let x = self.arg(v);
        let chain = self.scale * self.rate.powi(j as i32);
        chain * shape_deriv(self.shape, x, j)
    }

    /// Antiderivative of the velocity component, i.e. the flux component.
    pub fn primitive(&self, v: f64) -> f64 {
        let x = self.arg(v);
        let g = match self.shape {
            Shape::Monomial(p) => x.powi(p as i32 + 1) / (p as f64 + 1.0),
            Shape::Cos => x.sin(),
            Shape::Sin => -x.cos(),
        };
        self.scale / self.rate * g
    }

    /// True when the `j`-th derivative vanishes identically.
    pub fn deriv_vanishes(&self, j: usize) -> bool {
        self.scale == 0.0 || matches!(self.shape, Shape::Monomial(p) if j > p as usize)
    }

    /// Zeros of the `j`-th derivative in the open interval `(lo, hi)`, sorted.
    /// Identically vanishing derivatives report no zeros.
    pub fn zeros(&self, j: usize, lo: f64, hi: f64) -> Vec<f64> {
        if self.deriv_vanishes(j) || !(hi > lo) {
            return Vec::new();
        }
        let mut out = Vec::new();
        match self.shape {
            Shape::Monomial(p) => {
                if (p as usize) > j && self.shift > lo && self.shift < hi {
                    out.push(self.shift);
                }
            }
            Shape::Cos | Shape::Sin => {
                // derivative j of cos is cos(x + j*pi/2), of sin is cos(x + (j-1)*pi/2)
                let phase = match self.shape {
                    Shape::Cos => j as f64 * PI / 2.0,
                    _ => (j as f64 - 1.0) * PI / 2.0,
                };
                // cos(x + phase) = 0  <=>  x = pi/2 - phase + n*pi
                let base = PI / 2.0 - phase;
                let (xa, xb) = {
                    let a = self.arg(lo);
                    let b = self.arg(hi);
                    (a.min(b), a.max(b))
                };
                let n0 = ((xa - base) / PI).floor() as i64;
                let n1 = ((xb - base) / PI).ceil() as i64;
                for n in n0..=n1 {
                    let x = base + n as f64 * PI;
                    if x > xa && x < xb {
                        out.push(self.shift + x / self.rate);
                    }
                }
                out.sort_by(|a, b| a.total_cmp(b));
            }
        }
        out
    }

    /// Range of the `j`-th derivative over `[lo, hi]`.
    pub fn deriv_range(&self, j: usize, lo: f64, hi: f64) -> (f64, f64) {
        let mut pts = vec![lo, hi];
        pts.extend(self.zeros(j + 1, lo, hi));
        pts.iter()
            .map(|&v| self.deriv(v, j))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                (a.min(x), b.max(x))
            })
    }

    fn scaled(&self, s: f64, lambda: f64) -> Self {
        Self {
            shape: self.shape,
            scale: self.scale / s,
            rate: self.rate * lambda,
            shift: self.shift / lambda,
        }
    }
}

fn shape_deriv(shape: Shape, x: f64, j: usize) -> f64 {
    match shape {
        Shape::Monomial(p) => {
            if j > p as usize {
                return 0.0;
            }
            let coeff: f64 = ((p as usize - j + 1)..=p as usize).map(|k| k as f64).product();
            coeff * x.powi((p as usize - j) as i32)
        }
        Shape::Cos => match j % 4 {
            0 => x.cos(),
            1 => -x.sin(),
            2 => -x.cos(),
            _ => x.sin(),
        },
        Shape::Sin => match j % 4 {
            0 => x.sin(),
            1 => x.cos(),
            2 => -x.sin(),
            _ => -x.cos(),
        },
    }
}

/// Flux `A: I -> R^dim` for `u_t + div A(u) = 0`, or, when `time_augmented`,
/// for the stationary form `(1, a) . grad_{t,x} u = 0` where component 0 is
/// the constant 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxSpec {
    pub name: String,
    pub components: Vec<Component>,
    pub interval: (f64, f64),
    pub m_max: usize,
    pub time_augmented: bool,
}

impl FluxSpec {
    pub fn new(
        name: impl Into<String>,
        components: Vec<Component>,
        interval: (f64, f64),
        m_max: usize,
        time_augmented: bool,
    ) -> Result<Self> {
        let (lo, hi) = interval;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::input(format!("interval [{lo}, {hi}] is empty or unbounded")));
        }
        if components.is_empty() {
            return Err(Error::input("flux needs at least one component"));
        }
        if components
            .iter()
            .any(|c| !(c.rate.is_finite() && c.rate != 0.0 && c.scale.is_finite()))
        {
            return Err(Error::input("component rate must be finite and nonzero"));
        }
        if time_augmented {
            let c = components[0];
            if !(c.shape == Shape::Monomial(0) && c.scale == 1.0) {
                return Err(Error::input("time-augmented flux must start with the constant 1"));
            }
        }
        Ok(Self {
            name: name.into(),
            components,
            interval,
            m_max,
            time_augmented,
        })
    }

    pub fn burgers() -> Self {
        Self::power(1).expect("burgers").renamed("burgers")
    }

    /// `a(v) = (1, v^m)`.
    pub fn power(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::input("power flux needs m >= 1"));
        }
        Self::new(
            format!("power:{m}"),
            vec![Component::constant(1.0), Component::monomial(m, 1.0)],
            (-1.0, 1.0),
            m as usize + 1,
            true,
        )
    }

    /// `a(v) = (1, v, v^2, ..., v^d)` in space-time `R^{1+d}`.
    pub fn generalized_burgers(d: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::input("generalized Burgers needs d >= 1"));
        }
        let mut comps = vec![Component::constant(1.0)];
        comps.extend((1..=d).map(|p| Component::monomial(p, 1.0)));
        Self::new(
            format!("generalized_burgers:{d}"),
            comps,
            (-1.0, 1.0),
            d as usize + 1,
            true,
        )
    }

    /// `a(v) = (cos v, sin v)` on `[0, pi/2]`.
    pub fn trig() -> Self {
        Self::new(
            "trig",
            vec![Component::cos(), Component::sin()],
            (0.0, PI / 2.0),
            4,
            false,
        )
        .expect("trig")
    }

    /// Constant-velocity law `a(v) = (1, c_1, ..., c_k)`.
    pub fn transport(speeds: &[f64]) -> Result<Self> {
        let mut comps = vec![Component::constant(1.0)];
        comps.extend(speeds.iter().map(|&c| Component::constant(c)));
        Self::new("transport", comps, (-1.0, 1.0), 1, true)
    }

    /// Looks up a catalogue key: `burgers`, `power:m`, `generalized_burgers:d`, `trig`.
    pub fn from_key(key: &str) -> Result<Self> {
        let (head, arg) = match key.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (key.trim(), None),
        };
        let int_arg = |what: &str| -> Result<u32> {
            arg.ok_or_else(|| Error::input(format!("{what} needs an integer parameter")))?
                .parse::<u32>()
                .map_err(|_| Error::input(format!("bad parameter in flux key `{key}`")))
        };
        match head {
            "burgers" if arg.is_none() => Ok(Self::burgers()),
            "trig" if arg.is_none() => Ok(Self::trig()),
            "power" => Self::power(int_arg("power")?),
            "generalized_burgers" => {
                let d = int_arg("generalized_burgers")?;
                if d > 3 {
                    return Err(Error::input("generalized_burgers supports d <= 3"));
                }
                Self::generalized_burgers(d)
            }
            _ => Err(Error::input(format!("unknown flux key `{key}`"))),
        }
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_interval(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::input(format!("interval [{lo}, {hi}] is empty or unbounded")));
        }
        self.interval = (lo, hi);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Number of spatial directions transported by the evolution law.
    pub fn spatial_dim(&self) -> usize {
        if self.time_augmented {
            self.dim() - 1
        } else {
            self.dim()
        }
    }

    /// Index of the component carrying spatial axis `axis`.
    pub fn spatial_component(&self, axis: usize) -> usize {
        axis + usize::from(self.time_augmented)
    }

    pub fn interval_len(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    pub fn a(&self, v: f64) -> Vec<f64> {
        self.deriv(v, 0)
    }

    /// `a^(j)(v)`, all components.
    pub fn deriv(&self, v: f64, j: usize) -> Vec<f64> {
        self.components.iter().map(|c| c.deriv(v, j)).collect()
    }

    /// `A(v)`, all components.
    pub fn eval(&self, v: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.primitive(v)).collect()
    }

    /// Integral of `|a_k|` from `lo` to `hi`, oriented.
    pub fn abs_integral(&self, k: usize, lo: f64, hi: f64) -> f64 {
        let c = &self.components[k];
        if lo == hi {
            return 0.0;
        }
        let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
        let mut total = 0.0;
        let mut left = a;
        let zeros = c.zeros(0, a, b);
        for &z in zeros.iter().chain(std::iter::once(&b)) {
            total += (c.primitive(z) - c.primitive(left)).abs();
            left = z;
        }
        sign * total
    }

    /// `max |a_k|` over `[lo, hi]`.
    pub fn max_abs_speed(&self, k: usize, lo: f64, hi: f64) -> f64 {
        let (mn, mx) = self.components[k].deriv_range(0, lo.min(hi), lo.max(hi));
        mn.abs().max(mx.abs())
    }

    /// Euclidean `max |a(v)|` over `[lo, hi]`, sampled on a fine grid plus the
    /// per-component extrema.
    pub fn max_speed_norm(&self, lo: f64, hi: f64) -> f64 {
        let mut pts: Vec<f64> = (0..=256)
            .map(|i| lo + (hi - lo) * i as f64 / 256.0)
            .collect();
        for c in &self.components {
            pts.extend(c.zeros(1, lo, hi));
        }
        pts.iter()
            .map(|&v| norm(&self.a(v)))
            .fold(0.0, f64::max)
    }

    /// Whether `a_k` is monotone nondecreasing (convex flux component) or
    /// nonincreasing on `[lo, hi]`.
    pub fn component_convexity(&self, k: usize, lo: f64, hi: f64) -> Convexity {
        let (mn, mx) = self.components[k].deriv_range(1, lo.min(hi), lo.max(hi));
        let tol = 1e-14 * (mn.abs().max(mx.abs())).max(1.0);
        if mn >= -tol && mx <= tol {
            Convexity::Linear
        } else if mn >= -tol {
            Convexity::Convex
        } else if mx <= tol {
            Convexity::Concave
        } else {
            Convexity::Mixed
        }
    }

    /// `v -> S^{-1} a(lambda v)` for a diagonal `S = diag(s)`.
    pub fn transformed(&self, s: &[f64], lambda: f64) -> Result<Self> {
        if s.len() != self.dim() {
            return Err(Error::input("scaling diagonal has the wrong length"));
        }
        if !(lambda > 0.0) || s.iter().any(|x| !(x.abs() > 0.0)) {
            return Err(Error::input("scaling factors must be nonzero"));
        }
        let components = self
            .components
            .iter()
            .zip(s)
            .map(|(c, &si)| c.scaled(si, lambda))
            .collect();
        Ok(Self {
            name: format!("{}~scaled", self.name),
            components,
            interval: (self.interval.0 / lambda, self.interval.1 / lambda),
            m_max: self.m_max,
            time_augmented: self.time_augmented,
        })
    }

    /// `w -> a(w - c)`, the law satisfied by `u + c` when time-augmented data
    /// are Galilean-free (pure velocity relabelling).
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.name = format!("{}~shift", self.name);
        for comp in out.components.iter_mut() {
            comp.shift += c;
        }
        out.interval = (self.interval.0 + c, self.interval.1 + c);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    Linear,
    Convex,
    Concave,
    Mixed,
}

impl FromStr for FluxSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_key(s)
    }
}

impl fmt::Display for FluxSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} on [{}, {}]",
            self.name, self.interval.0, self.interval.1
        )
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(c: &Component, v: f64, j: usize) -> f64 {
        let h = 1e-5;
        (c.deriv(v + h, j) - c.deriv(v - h, j)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let comps = [
            Component::monomial(3, 2.0),
            Component {
                shape: Shape::Cos,
                scale: 0.5,
                rate: 3.0,
                shift: 0.2,
            },
            Component {
                shape: Shape::Sin,
                scale: -1.5,
                rate: -2.0,
                shift: 0.1,
            },
        ];
        for c in &comps {
            for j in 0..4 {
                for v in [-0.7, 0.0, 0.3, 0.9] {
                    assert!((fd(c, v, j) - c.deriv(v, j + 1)).abs() < 1e-6);
                }
            }
            let h = 1e-5;
            let v = 0.37;
            let da = (c.primitive(v + h) - c.primitive(v - h)) / (2.0 * h);
            assert!((da - c.deriv(v, 0)).abs() < 1e-7);
        }
    }

    #[test]
    fn zeros_are_zeros() {
        let c = Component {
            shape: Shape::Sin,
            scale: 1.0,
            rate: 4.0,
            shift: 0.3,
        };
        for j in 0..4 {
            let z = c.zeros(j, -2.0, 2.0);
            assert!(!z.is_empty());
            for v in z {
                assert!(c.deriv(v, j).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn abs_integral_of_burgers_velocity() {
        let f = FluxSpec::burgers();
        assert!((f.abs_integral(1, -1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((f.abs_integral(1, 1.0, -0.5) + 0.625).abs() < 1e-15);
    }

    #[test]
    fn catalogue_keys() {
        assert_eq!(FluxSpec::from_key("burgers").unwrap().dim(), 2);
        assert_eq!(FluxSpec::from_key("power:3").unwrap().m_max, 4);
        assert_eq!(FluxSpec::from_key("generalized_burgers:2").unwrap().dim(), 3);
        assert!(!FluxSpec::from_key("trig").unwrap().time_augmented);
        assert!(FluxSpec::from_key("burgerz").is_err());
        assert!(FluxSpec::from_key("power:x").is_err());
    }

    #[test]
    fn time_component_has_vanishing_derivatives() {
        let f = FluxSpec::generalized_burgers(3).unwrap();
        for j in 1..=f.m_max {
            for v in [-1.0, -0.2, 0.5, 1.0] {
                assert_eq!(f.deriv(v, j)[0], 0.0);
            }
        }
    }

    #[test]
    fn transformed_burgers_is_burgers() {
        let f = FluxSpec::burgers();
        let g = f.transformed(&[1.0, 0.5], 0.5).unwrap();
        for v in [-1.5, 0.0, 0.7, 2.0] {
            assert!((g.a(v)[1] - v).abs() < 1e-15);
            assert_eq!(g.a(v)[0], 1.0);
        }
    }
}
