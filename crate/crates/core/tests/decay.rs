use conslaw::decay::{
    bootstrap_gamma, decay_constant_prediction, decay_experiment, decay_experiment_at,
    fit_decay_exponent, linf_exponent, DecaySeries,
};
use conslaw::solver::{exact_decay_solution, SolverConfig};
use conslaw::{Error, FluxSpec, Geometry, ScalarField};
use proptest::prelude::*;

fn series(times: Vec<f64>, f: impl Fn(f64) -> f64) -> DecaySeries {
    DecaySeries {
        sup_norms: times.iter().map(|&t| f(t)).collect(),
        times,
        l1_norm: 1.0,
        linf_norm: 1.0,
        flux_name: "burgers".into(),
        dim: 1,
    }
}

#[test]
fn bootstrap_reaches_the_target_quickly() {
    let g = bootstrap_gamma(0.5, 0.25, 6).unwrap();
    // error e -> e^2 / gamma0: 0.25, 0.125, 0.03125, ...
    let mut e = 0.25;
    for v in &g {
        assert!((0.5 - v - e).abs() < 1e-15);
        e = e * e / 0.5;
    }
    assert!(0.5 - g[5] < 1e-8);
}

#[test]
fn exact_power_laws_are_recovered() {
    let times: Vec<f64> = (0..30).map(|i| 1.0 + i as f64 * 0.5).collect();
    let plain = fit_decay_exponent(&series(times.clone(), |t| 2.0 * t.powf(-0.5)), 1.0).unwrap();
    assert!((plain.gamma_hat - 0.5).abs() < 1e-6 && plain.t_shift < 1e-3);
    assert!((plain.plain_gamma - 0.5).abs() < 1e-9);
    let shifted = fit_decay_exponent(&series(times, |t| (t + 1.0).powf(-0.5)), 1.0).unwrap();
    assert!((shifted.gamma_hat - 0.5).abs() < 1e-3, "{shifted:?}");
    assert!((shifted.t_shift - 1.0).abs() < 1e-2);
    assert!(shifted.plain_gamma < 0.5);
}

#[test]
fn too_few_samples_are_refused() {
    let s = series(vec![1.0, 2.0, 3.0], |t| 1.0 / t);
    assert!(fit_decay_exponent(&s, 0.0).is_err());
}

#[test]
fn burgers_decay_example_tracks_the_exact_sup() {
    let flux = FluxSpec::burgers();
    let g = Geometry::line(-0.5, 4.0, 2048).unwrap();
    let u0 = ScalarField::from_fn(g, 0.0, |p| exact_decay_solution(1, 0.0, p[0])).unwrap();
    let s = decay_experiment_at(&flux, &u0, &[1.0, 2.0, 4.0], &SolverConfig::default()).unwrap();
    assert!(s.is_nonincreasing());
    for (t, v) in s.times.iter().zip(&s.sup_norms) {
        // exact sup for the m = 1 example is (t + 1)^(-1/2)
        let oracle = (t + 1.0f64).powf(-0.5);
        assert!((v / oracle - 1.0).abs() < 0.03, "t={t}: {v} vs {oracle}");
    }
}

#[test]
fn support_reaching_the_boundary_is_reported() {
    let flux = FluxSpec::burgers();
    let g = Geometry::line(-0.5, 1.5, 256).unwrap();
    let u0 = ScalarField::from_fn(g, 0.0, |p| exact_decay_solution(1, 0.0, p[0])).unwrap();
    let err = decay_experiment(&flux, &u0, 10.0, 8).unwrap_err();
    assert!(matches!(err, Error::SupportEscaped { .. }), "{err}");
}

#[test]
fn linf_exponent_values() {
    assert!((linf_exponent(1, 0.25) - 0.5).abs() < 1e-15);
    assert!((linf_exponent(2, 0.1) - 0.6).abs() < 1e-15);
}

#[test]
fn prediction_needs_a_calibrated_burgers_family() {
    let p2 = FluxSpec::from_key("power:2").unwrap();
    assert!(matches!(decay_constant_prediction(&p2, 1.0, 1.0, 0.2, 1.0), Err(Error::Unsupported(_))));
    let g3 = FluxSpec::generalized_burgers(3).unwrap();
    assert!(matches!(decay_constant_prediction(&g3, 1.0, 1.0, 0.05, 1.0), Err(Error::Unsupported(_))));
    let b = FluxSpec::burgers();
    assert!(decay_constant_prediction(&b, 1.0, 1.0, 0.6, 1.0).is_err());
}

proptest! {
    #[test]
    fn bootstrap_increases_to_gamma0(g0 in 0.05f64..1.0, frac in 0.01f64..1.0) {
        let g = bootstrap_gamma(g0, frac * g0, 40).unwrap();
        for w in g.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-15 && w[1] <= g0 + 1e-15);
        }
        prop_assert!((g0 - g[40]).abs() < 1e-6 * g0);
    }

    #[test]
    fn fit_is_scale_invariant(c in 0.1f64..10.0, gamma in 0.1f64..1.0) {
        let times: Vec<f64> = (0..20).map(|i| 1.0 + i as f64).collect();
        let fit = fit_decay_exponent(&series(times, |t| c * t.powf(-gamma)), 1.0).unwrap();
        prop_assert!((fit.plain_gamma - gamma).abs() < 1e-9);
        prop_assert!((fit.plain_c / c - 1.0).abs() < 1e-9);
    }
}
