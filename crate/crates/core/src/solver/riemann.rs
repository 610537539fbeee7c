//! Closed-form reference solutions.

use crate::error::{Error, Result};
use crate::flux::{Convexity, FluxSpec};

/// Self-similar entropy solution of the 1D Riemann problem at `x / t = xi`.
/// The flux must be convex, concave or linear between the two states.
pub fn riemann_exact(flux: &FluxSpec, ul: f64, ur: f64, xi: f64) -> Result<f64> {
    if flux.spatial_dim() != 1 {
        return Err(Error::Unsupported("riemann_exact needs a 1D flux".into()));
    }
    if ul == ur {
        return Ok(ul);
    }
    let k = flux.spatial_component(0);
    let c = flux.components[k];
    let (lo, hi) = (ul.min(ur), ul.max(ur));
    let convexity = flux.component_convexity(k, lo, hi);
    let a = |v: f64| c.deriv(v, 0);
    let shock = |s: f64| if xi < s { ul } else { ur };
    let rh = (c.primitive(ul) - c.primitive(ur)) / (ul - ur);
    match convexity {
        Convexity::Mixed => Err(Error::Unsupported(format!(
            "flux {} is neither convex nor concave on [{lo}, {hi}]",
            flux.name
        ))),
        Convexity::Linear => Ok(shock(a(ul))),
        Convexity::Convex | Convexity::Concave => {
            let (al, ar) = (a(ul), a(ur));
            if al >= ar {
                return Ok(shock(rh));
            }
            if xi <= al {
                return Ok(ul);
            }
            if xi >= ar {
                return Ok(ur);
            }
            // a is monotone from ul to ur here: invert by bisection
            let (mut p, mut q) = (ul, ur);
            for _ in 0..200 {
                let mid = 0.5 * (p + q);
                if a(mid) < xi {
                    p = mid;
                } else {
                    q = mid;
                }
                if (q - p).abs() <= 1e-15 * (1.0 + p.abs()) {
                    break;
                }
            }
            Ok(0.5 * (p + q))
        }
    }
}

/// Explicit solution for `a(v) = v^m` with `u0 = x^{1/m}` on `[0, 1]`:
/// `(x / (t + 1))^{1/m}` on `[0, (t + 1)^{1/(m+1)}]`, zero elsewhere.
pub fn exact_decay_solution(m: u32, t: f64, x: f64) -> f64 {
    let m = m.max(1) as f64;
    let edge = (t + 1.0).powf(1.0 / (m + 1.0));
    if x < 0.0 || x > edge {
        return 0.0;
    }
    (x / (t + 1.0)).powf(1.0 / m)
}

/// Support edge `(t + 1)^{1/(m+1)}` of [`exact_decay_solution`].
pub fn decay_support_edge(m: u32, t: f64) -> f64 {
    (t + 1.0).powf(1.0 / (m.max(1) as f64 + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burgers_examples() {
        let b = FluxSpec::burgers();
        assert_eq!(riemann_exact(&b, 1.0, 0.0, 0.3).unwrap(), 1.0);
        assert_eq!(riemann_exact(&b, 1.0, 0.0, 0.6).unwrap(), 0.0);
        assert!((riemann_exact(&b, 0.0, 1.0, 0.5).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(riemann_exact(&b, 0.4, 0.4, -3.0).unwrap(), 0.4);
    }

    #[test]
    fn nonconvex_rejected() {
        let f = FluxSpec::power(2).unwrap();
        assert!(riemann_exact(&f, -1.0, 1.0, 0.0).is_err());
        assert!(riemann_exact(&f, 0.2, 1.0, 0.5).is_ok());
    }

    #[test]
    fn decay_examples() {
        assert!((exact_decay_solution(1, 3.0, 0.25) - 0.0625).abs() < 1e-15);
        let max = (0..=10_000)
            .map(|i| exact_decay_solution(1, 3.0, 2.5 * i as f64 / 10_000.0))
            .fold(0.0, f64::max);
        assert!((max - 0.5).abs() < 1e-12);
        assert_eq!(exact_decay_solution(1, 0.0, 1.0 + 1e-9), 0.0);
    }
}
