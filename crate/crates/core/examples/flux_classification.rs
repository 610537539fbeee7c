//! Nonlinearity exponent, Hormander order and nondegeneracy constant of
//! catalogue fluxes.

use conslaw::flux::{estimate_alpha, hormander_order, nondegeneracy_constant};
use conslaw::FluxSpec;

fn main() -> conslaw::Result<()> {
    let deltas = [0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125];
    for key in ["burgers", "power:2", "power:3", "generalized_burgers:2", "trig"] {
        let flux = FluxSpec::from_key(key)?;
        let r = estimate_alpha(&flux, 64, &deltas)?;
        let m = hormander_order(&flux, 2001)?;
        println!(
            "{key:<24} alpha {:.3}  C {:.3}  m {m}  c0 {:.4}",
            r.alpha_hat, r.c_hat, r.c0_hat
        );
    }
    let c0 = nondegeneracy_constant(&FluxSpec::burgers(), 2001, 256)?;
    println!("burgers c0 (refined) {c0:.5}, 1/sqrt5 = {:.5}", 1.0 / 5f64.sqrt());
    Ok(())
}
