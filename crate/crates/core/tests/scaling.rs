use conslaw::scaling::{apply_scaling_onto, build_scaling, gamma_zero, scaling_indexes};
use conslaw::{Error, FluxSpec, Geometry, ScalarField};
use proptest::prelude::*;

#[test]
fn gamma_zero_catalogue() {
    let cases = [("burgers", 0.5), ("power:2", 1.0 / 3.0), ("power:3", 0.25), ("generalized_burgers:2", 0.25)];
    for (key, want) in cases {
        let g = gamma_zero(&FluxSpec::from_key(key).unwrap()).unwrap();
        assert!((g - want).abs() < 1e-12, "{key}: {g}");
    }
}

#[test]
fn power_laws_pick_the_first_nonzero_derivative() {
    assert_eq!(scaling_indexes(&FluxSpec::from_key("power:3").unwrap()).unwrap(), vec![0, 3]);
    assert_eq!(scaling_indexes(&FluxSpec::generalized_burgers(2).unwrap()).unwrap(), vec![0, 1, 2]);
}

#[test]
fn lambda_must_be_positive() {
    let b = FluxSpec::burgers();
    assert!(matches!(build_scaling(&b, 0.0), Err(Error::Input(_))));
    assert!(build_scaling(&b, f64::NAN).is_err());
}

#[test]
fn fan_is_a_fixed_point_of_the_rescaling() {
    // u(t, x) = x / t solves Burgers and u(r t, r lambda x) / lambda = u(t, x)
    let flux = FluxSpec::burgers();
    let map = build_scaling(&flux, 0.5).unwrap();
    let g = Geometry::from_box(&[1.0, -1.0], &[4.0, 1.0], &[128, 128]).unwrap();
    let u = ScalarField::from_fn(g, 0.0, |p| p[1] / p[0]).unwrap();
    let target = Geometry::from_box(&[1.0, -0.5], &[2.0, 0.5], &[32, 32]).unwrap();
    let v = apply_scaling_onto(&u, 2.0, &map, &target).unwrap();
    for i in 0..target.len() {
        let p = target.center(i);
        assert!((v.values()[i] - p[1] / p[0]).abs() < 1e-3, "{p:?}");
    }
}

proptest! {
    #[test]
    fn power_fluxes_are_scale_invariant(m in 1u32..5, lambda in 0.01f64..0.99, v in -1.0f64..1.0) {
        let flux = FluxSpec::power(m).unwrap();
        let map = build_scaling(&flux, lambda).unwrap();
        prop_assert!((map.det - lambda.powi(m as i32)).abs() < 1e-12);
        let t = map.transformed_flux(&flux).unwrap();
        let (a, b) = (t.a(v), flux.a(v));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn scaling_matrix_maps_basis_vectors(lambda in 0.01f64..0.99) {
        let flux = FluxSpec::generalized_burgers(2).unwrap();
        let map = build_scaling(&flux, lambda).unwrap();
        // S a^(j)(0) = lambda^j a^(j)(0)
        for &j in &map.indexes {
            let col = flux.deriv(0.0, j);
            let img: Vec<f64> = map.matrix.iter().map(|row| row.iter().zip(&col).map(|(a, b)| a * b).sum()).collect();
            for (x, y) in img.iter().zip(&col) {
                prop_assert!((x - lambda.powi(j as i32) * y).abs() < 1e-9);
            }
        }
    }
}
