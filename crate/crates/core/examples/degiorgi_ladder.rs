//! Truncation ladder and the sup / L1 bound on a library of fields.

use conslaw::degiorgi::{degiorgi_exponents, oscillation_bound_check, truncation_ladder, Ball};
use conslaw::{Geometry, ScalarField};

fn main() -> conslaw::Result<()> {
    let g = Geometry::line(-3.0, 3.0, 1024)?;
    let ball = Ball::new(vec![0.0], 1.0)?;
    let bump = ScalarField::from_fn(g.clone(), 0.0, |p| (1.0 - p[0] * p[0]).max(0.0))?;
    let ladder = truncation_ladder(&bump, &ball, 1.0, 25)?;
    println!("A_k: {:?}", ladder.masses.iter().take(6).map(|a| format!("{a:.3e}")).collect::<Vec<_>>());

    let library: Vec<ScalarField> = (1..=6)
        .map(|k| {
            let eps = 0.5f64.powi(k);
            ScalarField::from_fn(g.clone(), 0.0, |p| (eps - p[0].abs()).max(0.0))
        })
        .collect::<conslaw::Result<_>>()?;
    let grid: Vec<f64> = (1..=20).map(|k| 0.05 * k as f64).collect();
    let bound = oscillation_bound_check(&library, &ball, &grid)?;
    if let Some(b) = bound.best {
        println!("tents: sup <= {:.3} |u|_L1^{:.2}", b.c, b.gamma);
    }
    let e = degiorgi_exponents(0.5, 2)?;
    println!("theta = 1/2, d = 2: p' = {:.3}, delta = {:.3}", e.p_prime, e.delta);
    Ok(())
}
