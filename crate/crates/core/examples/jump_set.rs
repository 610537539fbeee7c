//! Jump set of a shock, oscillation away from it, and a blowup fit on it.

use conslaw::kinetic::{default_levels, entropy_dissipation};
use conslaw::solver::{solve, Snapshots, SolverConfig};
use conslaw::structure::{auto_threshold, blowup_trace, jump_set, oscillation_modulus};
use conslaw::{FluxSpec, Geometry, ScalarField};

fn main() -> conslaw::Result<()> {
    let flux = FluxSpec::burgers();
    let g = Geometry::line(-1.0, 2.0, 1024)?;
    let h = g.max_spacing();
    let u0 = ScalarField::from_fn(g, 0.0, |p| if p[0] < 0.0 { 1.0 } else { 0.0 })?;
    let traj = solve(&u0, &flux, 1.0, &Snapshots::EveryStep, &SolverConfig::default())?;
    let mu = entropy_dissipation(&traj, &flux, &default_levels(0.0, 1.0, 64))?;
    let mask = jump_set(&mu, &[0.5 * h], auto_threshold(1.0))?;
    let far = mask
        .flagged_centers()
        .iter()
        .map(|c| (c[1] - 0.5 * c[0]).abs() / h)
        .fold(0.0, f64::max);
    println!("{} space-time cells flagged, all within {far:.2} cells of x = t/2", mask.count());

    let last = traj.last();
    let radii: Vec<f64> = [16.0, 8.0, 4.0, 2.0, 1.0].iter().map(|c| c * h).collect();
    for x in [0.2, 0.5, 0.8] {
        let osc = oscillation_modulus(last, &[x], &radii)?;
        println!("osc at x = {x}: {:?}", osc.osc.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>());
    }
    let fit = blowup_trace(last, &[0.5], &[64.0 * h, 32.0 * h, 16.0 * h, 8.0 * h])?;
    println!(
        "shock at x = 0.5: u+ {:.3}, u- {:.3}, normal {:?}, single shock {}",
        fit.u_plus, fit.u_minus, fit.normal, fit.single_shock
    );
    Ok(())
}
