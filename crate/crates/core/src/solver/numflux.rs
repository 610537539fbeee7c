//! Two-point monotone numerical fluxes for a single flux component.

use serde::{Deserialize, Serialize};

use crate::flux::{Component, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NumericalFlux {
    #[default]
    EngquistOsher,
    Godunov,
}

impl std::str::FromStr for NumericalFlux {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "engquist-osher" | "eo" => Ok(Self::EngquistOsher),
            "godunov" => Ok(Self::Godunov),
            _ => Err(crate::Error::input(format!("unknown numerical flux `{s}`"))),
        }
    }
}

impl std::fmt::Display for NumericalFlux {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::EngquistOsher => "engquist-osher",
            Self::Godunov => "godunov",
        })
    }
}

/// A flux component with its numerical flux, evaluated without allocation.
#[derive(Debug, Clone, Copy)]
pub struct AxisFlux {
    comp: Component,
    kind: NumericalFlux,
}

impl AxisFlux {
    pub fn new(comp: Component, kind: NumericalFlux) -> Self {
        Self { comp, kind }
    }

    #[inline]
    pub fn a(&self, v: f64) -> f64 {
        self.comp.deriv(v, 0)
    }

    #[inline]
    pub fn prim(&self, v: f64) -> f64 {
        self.comp.primitive(v)
    }

    /// Calls `f` on the zeros of `a` inside `(lo, hi)`, in increasing order.
    #[inline]
    fn for_each_zero(&self, lo: f64, hi: f64, mut f: impl FnMut(f64)) {
        match self.comp.shape {
            Shape::Monomial(0) => {}
            Shape::Monomial(_) => {
                let z = self.comp.shift;
                if z > lo && z < hi {
                    f(z);
                }
            }
            _ => {
                for z in self.comp.zeros(0, lo, hi) {
                    f(z);
                }
            }
        }
    }

    /// Oriented integral of `|a|` from `ul` to `ur`; `pl`, `pr` are `A(ul)`, `A(ur)`.
    #[inline]
    fn abs_integral(&self, ul: f64, ur: f64, pl: f64, pr: f64) -> f64 {
        if ul == ur {
            return 0.0;
        }
        let (lo, hi, plo, phi, sign) = if ul < ur {
            (ul, ur, pl, pr, 1.0)
        } else {
            (ur, ul, pr, pl, -1.0)
        };
        let mut total = 0.0;
        let mut left = plo;
        self.for_each_zero(lo, hi, |z| {
            let pz = self.prim(z);
            total += (pz - left).abs();
            left = pz;
        });
        total += (phi - left).abs();
        sign * total
    }

    /// Numerical flux given the states and their primitives.
    #[inline]
    pub fn flux_with(&self, ul: f64, ur: f64, pl: f64, pr: f64) -> f64 {
        match self.kind {
            NumericalFlux::EngquistOsher => 0.5 * (pl + pr) - 0.5 * self.abs_integral(ul, ur, pl, pr),
            NumericalFlux::Godunov => {
                // min of A over [ul, ur] if ul <= ur, max over [ur, ul] otherwise
                let (lo, hi) = (ul.min(ur), ul.max(ur));
                let mut best = if ul <= ur { pl.min(pr) } else { pl.max(pr) };
                self.for_each_zero(lo, hi, |z| {
                    let pz = self.prim(z);
                    best = if ul <= ur { best.min(pz) } else { best.max(pz) };
                });
                best
            }
        }
    }

    #[inline]
    pub fn flux(&self, ul: f64, ur: f64) -> f64 {
        self.flux_with(ul, ur, self.prim(ul), self.prim(ur))
    }

    /// Kruzhkov numerical entropy flux for `|u - l|`.
    #[inline]
    pub fn kruzhkov(&self, ul: f64, ur: f64, l: f64) -> f64 {
        self.flux(ul.max(l), ur.max(l)) - self.flux(ul.min(l), ur.min(l))
    }

    /// Numerical entropy flux for `(u - l)_+`.
    #[inline]
    pub fn kruzhkov_plus(&self, ul: f64, ur: f64, l: f64) -> f64 {
        self.flux(ul.max(l), ur.max(l)) - self.prim(l)
    }
}
