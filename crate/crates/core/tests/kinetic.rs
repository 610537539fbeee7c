use conslaw::kinetic::{default_levels, entropy_dissipation, kinetic_function, level_widths};
use conslaw::solver::{solve, SolverConfig, Snapshots};
use conslaw::{FluxSpec, Geometry, ScalarField};
use proptest::prelude::*;

// Shock dissipation rate by quadrature over levels: at a shock of speed s the
// Kruzhkov entropy |u - v| is produced at rate s [eta] - [q], halved by the
// measure's normalization.
fn shock_rate_oracle(f: impl Fn(f64) -> f64, ul: f64, ur: f64) -> f64 {
    let s = (f(ul) - f(ur)) / (ul - ur);
    let q = |u: f64, v: f64| (u - v).signum() * (f(u) - f(v));
    let n = 20_000;
    let (lo, hi) = (ur.min(ul), ur.max(ul));
    let dv = (hi - lo) / n as f64;
    (0..n)
        .map(|i| {
            let v = lo + (i as f64 + 0.5) * dv;
            let d = -s * ((ur - v).abs() - (ul - v).abs()) + q(ur, v) - q(ul, v);
            0.5 * (-d).max(0.0) * dv
        })
        .sum()
}

fn shock_run(flux: &FluxSpec, ul: f64, ur: f64, n: usize, t_end: f64, shift_cells: usize) -> conslaw::kinetic::DissipationMeasure {
    let g = Geometry::line(-1.0, 1.5, n).unwrap();
    let x0 = -0.5 + shift_cells as f64 * g.spacing[0];
    let u0 = ScalarField::from_fn(g, 0.0, |p| if p[0] < x0 { ul } else { ur }).unwrap();
    let traj = solve(&u0, flux, t_end, &Snapshots::EveryStep, &SolverConfig::default()).unwrap();
    let levels = default_levels(ur.min(ul), ur.max(ul), 48);
    entropy_dissipation(&traj, flux, &levels).unwrap()
}

#[test]
fn shock_oracle_is_one_twelfth_for_burgers() {
    let r = shock_rate_oracle(|u| 0.5 * u * u, 1.0, 0.0);
    assert!((r - 1.0 / 12.0).abs() < 1e-6, "{r}");
}

#[test]
fn burgers_shock_rate_matches_the_oracle() {
    let flux = FluxSpec::burgers();
    let m = shock_run(&flux, 1.0, 0.0, 512, 0.5, 0);
    let oracle = shock_rate_oracle(|u| 0.5 * u * u, 1.0, 0.0);
    assert!((m.rate() / oracle - 1.0).abs() < 0.1, "rate {} oracle {oracle}", m.rate());
}

#[test]
fn cubic_shock_rate_matches_the_oracle() {
    // power:2 has a(u) = (1, u^2), so A(u) = u^3 / 3
    let flux = FluxSpec::from_key("power:2").unwrap();
    let m = shock_run(&flux, 1.0, 0.0, 512, 0.5, 0);
    let oracle = shock_rate_oracle(|u| u * u * u / 3.0, 1.0, 0.0);
    assert!((m.rate() / oracle - 1.0).abs() < 0.1, "rate {} oracle {oracle}", m.rate());
}

#[test]
fn shock_mass_sits_on_levels_between_the_states() {
    let m = shock_run(&FluxSpec::burgers(), 0.8, 0.2, 256, 0.4, 0);
    let w = level_widths(&m.v_levels);
    for ((&l, &w), &mass) in m.v_levels.iter().zip(&w).zip(&m.level_totals) {
        if l < 0.2 - w || l > 0.8 + w {
            assert!(mass < 1e-9 * m.total, "level {l} carries {mass}");
        }
    }
    assert!(m.total > 0.0);
}

#[test]
fn translating_the_data_translates_the_measure() {
    let flux = FluxSpec::burgers();
    let a = shock_run(&flux, 1.0, 0.0, 256, 0.3, 0);
    let b = shock_run(&flux, 1.0, 0.0, 256, 0.3, 7);
    assert!((a.total - b.total).abs() < 1e-10 * a.total);
    for (x, y) in a.level_totals.iter().zip(&b.level_totals) {
        assert!((x - y).abs() < 1e-10 * a.total);
    }
}

#[test]
fn ball_mass_never_exceeds_the_total() {
    let m = shock_run(&FluxSpec::burgers(), 1.0, 0.0, 256, 0.3, 0);
    for r in [0.01, 0.1, 0.5, 5.0] {
        let b = m.ball_mass(&[0.15, -0.35], r);
        assert!(b >= 0.0 && b <= m.total * (1.0 + 1e-12));
    }
    assert!((m.ball_mass(&[0.15, 0.0], 100.0) - m.total).abs() < 1e-12 * m.total);
}

#[test]
fn every_step_trajectory_is_required() {
    let flux = FluxSpec::burgers();
    let u0 = ScalarField::from_fn(Geometry::line(-1.0, 1.0, 64).unwrap(), 0.0, |p| p[0]).unwrap();
    let traj = solve(&u0, &flux, 0.2, &Snapshots::Times(vec![0.1, 0.2]), &SolverConfig::default()).unwrap();
    assert!(entropy_dissipation(&traj, &flux, &[0.0, 0.5]).is_err());
}

#[test]
fn levels_must_increase() {
    let u = ScalarField::constant(Geometry::line(0.0, 1.0, 8).unwrap(), 0.5, 0.0).unwrap();
    assert!(kinetic_function(&u, &[0.5, 0.1]).is_err());
    assert!(kinetic_function(&u, &[]).is_err());
}

proptest! {
    #[test]
    fn kinetic_reconstruction_recovers_abs(vals in prop::collection::vec(-2.0f64..2.0, 1..40)) {
        let g = Geometry::line(0.0, 1.0, vals.len()).unwrap();
        let u = ScalarField::new(g, vals.clone(), 0.0).unwrap();
        let levels = default_levels(-2.0, 2.0, 64);
        let k = kinetic_function(&u, &levels).unwrap();
        let wmax = level_widths(&levels).into_iter().fold(0.0, f64::max);
        for (rec, v) in k.reconstruct_abs().iter().zip(&vals) {
            prop_assert!((rec - v.abs()).abs() <= wmax * 1.01);
        }
    }

    #[test]
    fn kinetic_values_have_the_sign_of_u(vals in prop::collection::vec(-2.0f64..2.0, 1..20)) {
        let g = Geometry::line(0.0, 1.0, vals.len()).unwrap();
        let u = ScalarField::new(g, vals.clone(), 0.0).unwrap();
        let levels = default_levels(-2.0, 2.0, 33);
        let k = kinetic_function(&u, &levels).unwrap();
        for (c, &v) in vals.iter().enumerate() {
            for (l, &lev) in levels.iter().enumerate() {
                let x = k.at(c, l);
                prop_assert!(x == 0 || (x as f64) * v > 0.0);
                prop_assert!(x == 0 || lev.abs() < v.abs());
            }
        }
    }

    #[test]
    fn level_widths_tile_the_range(lo in -3.0f64..0.0, span in 0.1f64..4.0, count in 2usize..80) {
        let levels = default_levels(lo, lo + span, count);
        let w = level_widths(&levels);
        let sum: f64 = w.iter().sum();
        let covered = levels[count - 1] - levels[0] + (levels[1] - levels[0]);
        prop_assert!((sum - covered).abs() < 1e-9 * covered.max(1.0));
        prop_assert!(levels[0] - 0.5 * w[0] < lo && levels[count - 1] + 0.5 * w[count - 1] > lo + span);
    }
}
