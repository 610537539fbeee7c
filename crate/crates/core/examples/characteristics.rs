//! Backward characteristics and the cone maximum principle in a rarefaction.

use conslaw::characteristics::{backward_characteristic, cone_max_principle_check, velocity_hull};
use conslaw::solver::{riemann_exact, solve, Snapshots, SolverConfig};
use conslaw::{FluxSpec, Geometry, ScalarField};

fn main() -> conslaw::Result<()> {
    let flux = FluxSpec::burgers();
    let hull = velocity_hull(&flux, 0.0, 1.0)?;
    println!("velocity hull vertices {:?}", hull.vertices);

    let g = Geometry::line(-1.0, 3.0, 2048)?;
    let vals = (0..g.len())
        .map(|i| riemann_exact(&flux, 0.0, 1.0, g.center(i)[0]))
        .collect::<conslaw::Result<Vec<_>>>()?;
    let u0 = ScalarField::new(g, vals, 1.0)?;
    let k = 64;
    let times: Vec<f64> = (0..=k).map(|j| 1.0 + j as f64 / k as f64).collect();
    let traj = solve(&u0, &flux, 2.0, &Snapshots::Times(times), &SolverConfig::default())?;
    for x0 in [0.4, 1.0, 1.6] {
        let poly = backward_characteristic(&traj, &[x0], x0 / 2.0, k)?;
        println!(
            "from x = {x0} at t = 2: foot {:.4} at t = 1, chord deviation {:.1e}",
            poly.points[0][0],
            poly.chord_deviation()
        );
    }
    let c = cone_max_principle_check(&traj, &[1.0], 2.0, 0.5)?;
    println!("cone check at (2, 1): upper excess {:.2e}, tol {:.2e}, passed {}", c.upper_excess, c.tol, c.passed);
    Ok(())
}
