use conslaw::kinetic::{default_levels, entropy_dissipation};
use conslaw::solver::{solve, SolverConfig, Snapshots};
use conslaw::structure::{
    auto_threshold, blowup_trace, grid_floor, jump_set, oscillation_modulus,
    semicontinuous_envelopes,
};
use conslaw::{FluxSpec, Geometry, ScalarField};
use proptest::prelude::*;

fn riemann_measure(ul: f64, ur: f64, n: usize) -> (conslaw::kinetic::DissipationMeasure, f64) {
    let flux = FluxSpec::burgers();
    let g = Geometry::line(-1.0, 2.0, n).unwrap();
    let h = g.spacing[0];
    let u0 = ScalarField::from_fn(g, 0.0, |p| if p[0] < 0.0 { ul } else { ur }).unwrap();
    let traj = solve(&u0, &flux, 1.0, &Snapshots::EveryStep, &SolverConfig::default()).unwrap();
    let levels = default_levels(ul.min(ur), ul.max(ur), 32);
    (entropy_dissipation(&traj, &flux, &levels).unwrap(), h)
}

#[test]
fn shock_flags_follow_the_shock_line() {
    let (m, h) = riemann_measure(1.0, 0.0, 256);
    let mask = jump_set(&m, &[0.5 * h], auto_threshold(1.0)).unwrap();
    assert!(mask.count() > 0);
    // every flagged space-time cell sits within two cells of x = t / 2
    for c in mask.flagged_centers() {
        let (t, x) = (c[0], c[1]);
        assert!((x - 0.5 * t).abs() <= 2.0 * h + 1e-12, "flag at t={t} x={x}");
    }
    // and the line is covered once the shock has formed
    for t in [0.25, 0.5, 0.75] {
        assert!(mask.any_flagged_near(&[t, 0.5 * t], 2.0 * h), "gap at t={t}");
    }
}

#[test]
fn rarefaction_has_no_flags_after_the_start() {
    let (m, h) = riemann_measure(0.0, 1.0, 256);
    let mask = jump_set(&m, &[0.5 * h], auto_threshold(1.0)).unwrap();
    // the initial discontinuity dissipates for a few steps only
    assert!(mask.flagged_centers().iter().all(|c| c[0] < 8.0 * h), "{}", mask.count());
}

#[test]
fn oscillation_of_a_ramp_matches_the_cell_centers() {
    let g = Geometry::line(-1.0, 1.0, 200).unwrap();
    let u = ScalarField::from_fn(g.clone(), 0.0, |p| 3.0 * p[0]).unwrap();
    let radii = [0.4, 0.2, 0.1, 0.05];
    let osc = oscillation_modulus(&u, &[0.003], &radii).unwrap();
    for (r, o) in radii.iter().zip(&osc.osc) {
        let centers: Vec<f64> = (0..g.len())
            .map(|i| g.center(i)[0])
            .filter(|c| (c - 0.003).abs() <= *r + 1e-12)
            .collect();
        let oracle = 3.0 * (centers.last().unwrap() - centers[0]);
        assert!((o - oracle).abs() < 1e-9, "r={r}: {o} vs {oracle}");
    }
    assert!(osc.decreasing(0.0));
}

#[test]
fn oscillation_rejects_balls_leaving_the_domain() {
    let u = ScalarField::constant(Geometry::line(0.0, 1.0, 64).unwrap(), 1.0, 0.0).unwrap();
    assert!(oscillation_modulus(&u, &[0.05], &[0.2]).is_err());
}

#[test]
fn blowup_recovers_a_tilted_step() {
    let g = Geometry::from_box(&[-1.0, -1.0], &[1.0, 1.0], &[128, 128]).unwrap();
    let ang: f64 = 0.6;
    let n = [ang.cos(), ang.sin()];
    let u = ScalarField::from_fn(g.clone(), 0.0, |p| if p[0] * n[0] + p[1] * n[1] > 0.0 { 2.0 } else { -1.0 }).unwrap();
    let h = g.spacing[0];
    let fit = blowup_trace(&u, &[0.0, 0.0], &[32.0 * h, 16.0 * h, 8.0 * h]).unwrap();
    assert!(fit.single_shock);
    assert!((fit.u_plus - 2.0).abs() < 1e-9 && (fit.u_minus + 1.0).abs() < 1e-9);
    let cosang = fit.normal[0] * n[0] + fit.normal[1] * n[1];
    assert!(cosang > (3.0f64).to_radians().cos(), "normal {:?}", fit.normal);
}

#[test]
fn grid_floor_scales_with_the_mesh() {
    let flux = FluxSpec::burgers();
    let f = |n| {
        let u = ScalarField::from_fn(Geometry::line(0.0, 1.0, n).unwrap(), 0.0, |p| p[0]).unwrap();
        grid_floor(&u, &flux)
    };
    let (a, b) = (f(128), f(256));
    assert!(a > 0.0 && (a / b - 2.0).abs() < 0.05, "{a} {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn envelopes_bracket_and_nest(vals in prop::collection::vec(-5.0f64..5.0, 16..80)) {
        let n = vals.len();
        let g = Geometry::line(0.0, 1.0, n).unwrap();
        let h = g.spacing[0];
        let u = ScalarField::new(g, vals.clone(), 0.0).unwrap();
        let env = semicontinuous_envelopes(&u, &[4.0 * h, 2.0 * h, h]).unwrap();
        prop_assert!(env.is_monotone());
        for ((lo, hi), v) in env.lower.values().iter().zip(env.upper.values()).zip(&vals) {
            prop_assert!(lo <= v && v <= hi);
        }
    }
}
