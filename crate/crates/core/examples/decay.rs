//! Large-time decay of the explicit solutions for a(v) = v^m, with the
//! exponent fit and the predicted constant.

use conslaw::decay::{decay_constant_prediction, decay_experiment, fit_decay_exponent};
use conslaw::solver::exact_decay_solution;
use conslaw::{FluxSpec, Geometry, ScalarField};

fn main() -> conslaw::Result<()> {
    for m in 1..=3u32 {
        let flux = FluxSpec::power(m)?;
        let g = Geometry::line(-0.25, 18.0, 4096)?;
        let u0 = ScalarField::from_fn(g, 0.0, |p| exact_decay_solution(m, 0.0, p[0]))?;
        let series = decay_experiment(&flux, &u0, 15.0, 24)?;
        let fit = fit_decay_exponent(&series, 1.0)?;
        println!(
            "m = {m}: gamma {:.4} (exact {:.4}), unshifted slope {:.4}",
            fit.gamma_hat,
            1.0 / (m as f64 + 1.0),
            fit.plain_gamma
        );
    }
    let p = decay_constant_prediction(&FluxSpec::burgers(), 0.5, 1.0, 0.4, 1.0)?;
    println!("burgers bound at t = 1 with gamma = 0.4: {p:.4}");
    Ok(())
}
