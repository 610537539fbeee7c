//! Solve a Burgers Riemann problem and compare with the exact solution.

use conslaw::solver::{riemann_exact, solve, NumericalFlux, Snapshots, SolverConfig};
use conslaw::{FluxSpec, Geometry, ScalarField};

fn main() -> conslaw::Result<()> {
    let flux = FluxSpec::burgers();
    let g = Geometry::line(-1.0, 2.0, 1024)?;
    for (ul, ur) in [(1.0, 0.0), (0.0, 1.0), (1.0, -1.0)] {
        let u0 = ScalarField::from_fn(g.clone(), 0.0, |p| if p[0] < 0.0 { ul } else { ur })?;
        for nf in [NumericalFlux::EngquistOsher, NumericalFlux::Godunov] {
            let cfg = SolverConfig { numerical_flux: nf, ..SolverConfig::default() };
            let traj = solve(&u0, &flux, 0.5, &Snapshots::Times(vec![0.5]), &cfg)?;
            let u = traj.last();
            let mut l1 = 0.0;
            for i in 0..g.len() {
                let x = g.center(i)[0];
                l1 += (u.values()[i] - riemann_exact(&flux, ul, ur, x / 0.5)?).abs() * g.cell_volume();
            }
            println!("({ul:+}, {ur:+}) {nf:<15} L1 error at t = 0.5: {l1:.2e}");
        }
    }
    Ok(())
}
