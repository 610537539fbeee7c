use conslaw::flux::{
    estimate_alpha, hormander_order, nondegeneracy_constant, nonlinearity_measure,
    sign_decomposition, Component, SignTag,
};
use conslaw::FluxSpec;
use proptest::prelude::*;

const DELTAS: [f64; 6] = [0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125];

// Brute force over a dense (v, angle) grid of the planar objective
// max(|xi . a(v)|, |xi . a'(v)|), independent of the library's search.
fn c0_oracle_planar(a: impl Fn(f64) -> [f64; 2], da: impl Fn(f64) -> [f64; 2], lo: f64, hi: f64) -> f64 {
    let nv = 4000;
    let nt = 4000;
    let mut best = f64::INFINITY;
    for i in 0..=nv {
        let v = lo + (hi - lo) * i as f64 / nv as f64;
        let (p, q) = (a(v), da(v));
        for k in 0..nt {
            let th = std::f64::consts::PI * k as f64 / nt as f64;
            let (c, s) = (th.cos(), th.sin());
            let val = (c * p[0] + s * p[1]).abs().max((c * q[0] + s * q[1]).abs());
            best = best.min(val);
        }
    }
    best
}

#[test]
fn c0_of_burgers_matches_brute_force() {
    let oracle = c0_oracle_planar(|v| [1.0, v], |_| [0.0, 1.0], -1.0, 1.0);
    // frozen from the oracle above: the minimiser sits at v = +-1, xi ~ (-2, 1)/sqrt 5
    assert!((oracle - 0.447_213_6).abs() < 1e-3, "oracle {oracle}");
    let c0 = nondegeneracy_constant(&FluxSpec::burgers(), 2001, 256).unwrap();
    assert!((c0 - oracle).abs() < 0.01, "c0 {c0} oracle {oracle}");
}

#[test]
fn c0_of_trig_flux_is_bracketed() {
    let oracle = c0_oracle_planar(
        |v| [v.cos(), v.sin()],
        |v| [-v.sin(), v.cos()],
        0.0,
        std::f64::consts::FRAC_PI_2,
    );
    let c0 = nondegeneracy_constant(&FluxSpec::trig(), 2001, 256).unwrap();
    assert!((c0 - oracle).abs() < 0.01);
    assert!(c0 >= std::f64::consts::FRAC_1_SQRT_2 - 0.01 && c0 <= 1.0 + 1e-9);
}

#[test]
fn c0_vanishes_for_degenerate_flux() {
    let flat = FluxSpec::new(
        "flat",
        vec![Component::constant(1.0), Component::constant(0.0)],
        (0.0, 1.0),
        1,
        true,
    )
    .unwrap();
    assert!(nondegeneracy_constant(&flat, 201, 64).unwrap() < 1e-12);
}

// exact sublevel measure for (1, v^m), worst direction (0, 1): 2 delta^(1/m)
fn power_measure_oracle(m: u32, delta: f64) -> f64 {
    (2.0 * delta.powf(1.0 / m as f64)).min(2.0)
}

#[test]
fn alpha_recovered_for_power_fluxes() {
    for m in 1..=3u32 {
        let f = FluxSpec::power(m).unwrap();
        let r = estimate_alpha(&f, 64, &DELTAS).unwrap();
        assert!((r.alpha_hat - 1.0 / m as f64).abs() < 0.05, "m={m}: {}", r.alpha_hat);
        assert_eq!(r.m_hat, m as usize);
        for &d in &DELTAS {
            let got = nonlinearity_measure(&f, &[0.0, 1.0], d, 100_000).unwrap();
            assert!((got - power_measure_oracle(m, d)).abs() < 1e-3);
        }
    }
}

#[test]
fn alpha_for_generalized_burgers() {
    let r = estimate_alpha(&FluxSpec::generalized_burgers(2).unwrap(), 200, &DELTAS).unwrap();
    assert!((r.alpha_hat - 0.5).abs() < 0.05, "{}", r.alpha_hat);
    assert_eq!(r.m_hat, 2);
    assert!(r.c0_hat > 0.0);
}

#[test]
fn constant_flux_is_flagged() {
    let flat = FluxSpec::new(
        "flat",
        vec![Component::constant(1.0), Component::constant(0.0)],
        (0.0, 1.0),
        1,
        true,
    )
    .unwrap();
    let r = estimate_alpha(&flat, 16, &DELTAS).unwrap();
    assert!(r.degenerate);
    assert!(!r.sample_grid.notes.is_empty());
    assert_eq!(r.m_hat, 2);
    assert_eq!(r.c0_hat, 0.0);
    assert!(r.alpha_hat > 0.0 && r.alpha_hat <= 1.0);
}

#[test]
fn bad_delta_grids_rejected() {
    let b = FluxSpec::burgers();
    assert!(estimate_alpha(&b, 8, &[0.1, 0.2]).is_err());
    assert!(estimate_alpha(&b, 8, &[1.5, 0.2]).is_err());
    assert!(estimate_alpha(&b, 1, &[0.2, 0.1]).is_err());
}

#[test]
fn hormander_order_of_catalogue() {
    for d in 1..=3u32 {
        let f = FluxSpec::generalized_burgers(d).unwrap();
        assert_eq!(hormander_order(&f, 501).unwrap(), d as usize);
    }
}

#[test]
fn sign_decomposition_of_half_square() {
    let f = |v: f64, j: usize| match j {
        0 => v * v / 2.0,
        1 => v,
        2 => 1.0,
        _ => 0.0,
    };
    let p = sign_decomposition(&f, (-1.0, 1.0), 0.5, 2).unwrap();
    let tags: Vec<SignTag> = p.iter().map(|s| s.tag).collect();
    assert_eq!(tags, vec![SignTag::Neg, SignTag::Small, SignTag::Pos]);
    assert!((p[1].lo + 0.5).abs() < 1e-12 && (p[1].hi - 0.5).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measure_monotone_in_delta(th in 0.0..std::f64::consts::PI, d1 in 1e-4..0.5f64, d2 in 1e-4..0.5f64, m in 1u32..4) {
        let f = FluxSpec::power(m).unwrap();
        let xi = [th.cos(), th.sin()];
        let (lo, hi) = (d1.min(d2), d1.max(d2));
        let a = nonlinearity_measure(&f, &xi, lo, 2000).unwrap();
        let b = nonlinearity_measure(&f, &xi, hi, 2000).unwrap();
        prop_assert!(a <= b + 1e-12);
    }

    #[test]
    fn middle_piece_at_most_two_delta(c in -2.0..2.0f64, slope in 1.0..5.0f64, delta in 1e-3..1.0f64) {
        let f = move |v: f64, j: usize| match j {
            0 => slope * v + c + 0.1 * v.sin(),
            1 => slope + 0.1 * v.cos(),
            _ => 0.0,
        };
        let pieces = sign_decomposition(&f, (-1.0, 1.0), delta, 1).unwrap();
        let total: f64 = pieces.iter().map(|p| p.len()).sum();
        prop_assert!((total - 2.0).abs() < 1e-12);
        for p in pieces.iter().filter(|p| p.tag == SignTag::Small) {
            prop_assert!(p.len() <= 2.0 * delta + 1e-12);
        }
    }

    #[test]
    fn time_augmented_derivatives_vanish_in_time(v in -1.0..1.0f64, d in 1u32..4, j in 1usize..5) {
        let f = FluxSpec::generalized_burgers(d).unwrap();
        prop_assert_eq!(f.deriv(v, j)[0], 0.0);
        prop_assert_eq!(f.a(v)[0], 1.0);
    }
}

#[test]
fn alpha_at_least_inverse_order() {
    for f in [
        FluxSpec::burgers(),
        FluxSpec::power(2).unwrap(),
        FluxSpec::generalized_burgers(2).unwrap(),
        FluxSpec::trig(),
    ] {
        let r = estimate_alpha(&f, 64, &DELTAS).unwrap();
        assert!(r.c0_hat > 0.0);
        assert!(r.alpha_hat >= 1.0 / r.m_hat as f64 - 0.1, "{}: {}", f.name, r.alpha_hat);
    }
}
