use conslaw::characteristics::{
    backward_characteristic, cone_max_principle_check, forward_foot, line_constancy_check,
    spatial_hull, velocity_hull, VelocityHull,
};
use conslaw::solver::{riemann_exact, solve, SolverConfig, Snapshots, Trajectory};
use conslaw::{Error, FluxSpec, Geometry, ScalarField};
use proptest::prelude::*;

// Burgers rarefaction 0 | 1 from t = 1 to t = 2 with frames at k + 1 equal times.
fn rarefaction(n: usize, k: usize) -> Trajectory {
    let flux = FluxSpec::burgers();
    let g = Geometry::line(-1.0, 3.0, n).unwrap();
    let u1 = ScalarField::from_fn(g, 1.0, |p| riemann_exact(&flux, 0.0, 1.0, p[0]).unwrap()).unwrap();
    let times: Vec<f64> = (0..=k).map(|j| 1.0 + j as f64 / k as f64).collect();
    solve(&u1, &flux, 2.0, &Snapshots::Times(times), &SolverConfig::default()).unwrap()
}

#[test]
fn burgers_spatial_hull_is_the_value_interval() {
    let hull = spatial_hull(&FluxSpec::burgers(), 0.0, 1.0).unwrap();
    let b = hull.bounds();
    assert!((b[0].0 - 0.0).abs() < 1e-12 && (b[0].1 - 1.0).abs() < 1e-12);
}

#[test]
fn backward_characteristic_in_a_fan_is_a_ray() {
    let traj = rarefaction(1024, 32);
    let h = traj.geometry().max_spacing();
    let poly = backward_characteristic(&traj, &[1.0], 0.5, 32).unwrap();
    // exact ray x = t / 2
    for (t, p) in poly.times.iter().zip(&poly.points) {
        assert!((p[0] - 0.5 * t).abs() < 4.0 * h, "t={t} x={}", p[0]);
    }
    assert!(poly.chord_deviation() < 4.0 * h);
}

#[test]
fn levels_outside_the_local_range_are_refused() {
    let traj = rarefaction(256, 8);
    let err = backward_characteristic(&traj, &[1.0], 0.9, 8).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err}");
}

#[test]
fn cone_principle_holds_across_the_fan() {
    let traj = rarefaction(1024, 8);
    for x in [0.25, 0.75, 1.0, 1.5, 2.2] {
        let c = cone_max_principle_check(&traj, &[x], 2.0, 0.5).unwrap();
        assert!(c.passed, "x={x}: {c:?}");
    }
}

#[test]
fn a_lifted_bump_breaks_the_cone_principle() {
    let mut traj = rarefaction(512, 4);
    let last = traj.frames.len() - 1;
    let bumped = traj.frames[last].map(|v| v).unwrap();
    let vals: Vec<f64> = bumped
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = bumped.geometry().center(i)[0];
            v + if (x - 1.0).abs() < 0.05 { 0.5 } else { 0.0 }
        })
        .collect();
    traj.frames[last] = bumped.with_values(vals).unwrap();
    let c = cone_max_principle_check(&traj, &[1.0], 2.0, 0.5).unwrap();
    assert!(!c.passed);
}

#[test]
fn stationary_fan_is_constant_along_speed_lines() {
    // u(t, x) = clamp(x / t) on [1, 2] x [-1, 3] is constant along (1, u)
    let flux = FluxSpec::burgers();
    let g = Geometry::from_box(&[1.0, -1.0], &[2.0, 3.0], &[200, 400]).unwrap();
    let u = ScalarField::from_fn(g, 0.0, |p| (p[1] / p[0]).clamp(0.0, 1.0)).unwrap();
    let lc = line_constancy_check(&u, &[1.5, 0.6], &flux).unwrap();
    assert!(lc.samples > 10);
    assert!(lc.max_deviation < 5e-3, "{}", lc.max_deviation);
}

#[test]
fn forward_foot_of_a_ramp() {
    // u = x under Burgers: the foot y of x0 at time t solves y - t y = x0
    let flux = FluxSpec::burgers();
    let u = ScalarField::from_fn(Geometry::line(-2.0, 2.0, 4000).unwrap(), 0.0, |p| p[0]).unwrap();
    let y = forward_foot(&u, &flux, &[0.3], 0.2).unwrap();
    assert!((y[0] - 0.3 / 0.8).abs() < 1e-3, "{}", y[0]);
}

proptest! {
    #[test]
    fn hull_contains_every_sampled_speed(lo in -1.0f64..0.0, hi in 0.0f64..1.0, v in 0.0f64..1.0) {
        let flux = FluxSpec::trig().with_interval(-1.0, 1.0).unwrap();
        let hull = velocity_hull(&flux, lo, hi).unwrap();
        let s = lo + v * (hi - lo);
        prop_assert!(hull.contains(&flux.a(s), 1e-3));
    }

    #[test]
    fn hull_of_points_contains_their_mean(pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..20)) {
        let pts: Vec<Vec<f64>> = pts.into_iter().map(|(a, b)| vec![a, b]).collect();
        let hull = VelocityHull::from_points(&pts).unwrap();
        let n = pts.len() as f64;
        let mean = vec![pts.iter().map(|p| p[0]).sum::<f64>() / n, pts.iter().map(|p| p[1]).sum::<f64>() / n];
        prop_assert!(hull.contains(&mean, 1e-9));
        for p in &pts {
            prop_assert!(hull.contains(p, 1e-9));
        }
    }
}
