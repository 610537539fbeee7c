//! Anisotropic scaling maps and the decay exponent they predict.

use conslaw::scaling::{apply_scaling, build_scaling, gamma_zero};
use conslaw::{FluxSpec, Geometry, ScalarField};

fn main() -> conslaw::Result<()> {
    for d in 1..=3u32 {
        let f = FluxSpec::generalized_burgers(d)?;
        let s = build_scaling(&f, 0.5)?;
        println!(
            "d = {d}: indexes {:?}, det S_1/2 = {}, gamma_0 = {:.4}",
            s.spatial_indexes(),
            s.det,
            gamma_zero(&f)?
        );
    }

    // u(t, x) = x / t rescaled by lambda is again x / t
    let g = Geometry::from_box(&[0.5, 0.0], &[1.0, 0.5], &[32, 32])?;
    let u = ScalarField::from_fn(g, 0.0, |p| p[1] / p[0])?;
    let map = build_scaling(&FluxSpec::burgers(), 0.25)?;
    let w = apply_scaling(&u, 1.0, &map)?;
    let err = w
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let p = w.geometry().center(i);
            (v - p[1] / p[0]).abs()
        })
        .fold(0.0, f64::max);
    println!("fan invariant under S_lambda: max deviation {err:.2e}");
    Ok(())
}
