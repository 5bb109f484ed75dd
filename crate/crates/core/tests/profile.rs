mod common;

use approx::assert_relative_eq;
use common::simpson_to_infinity;
use poreflow_core::grid::{first_moment, from_selfsim, to_selfsim};
use poreflow_core::params::{derive_profile, fs_residual, Branch};
use poreflow_core::{DensityField, ModelParams, Profile, RadialGrid, Variables};
use proptest::prelude::*;

#[test]
fn reference_constants() {
    let p = ModelParams::new(3.0, 1.0, 0.25).unwrap().profile();
    assert_eq!(p.theta(), Some(3.0));
    assert_relative_eq!(p.n_s(), 2.0, max_relative = 1e-15);
    assert_relative_eq!(p.c_s(), 0.25, max_relative = 1e-15);
}

#[test]
fn first_moment_oracle() {
    let p = ModelParams::new(3.0, 1.0, 0.25).unwrap().profile();
    // x (1 + x/4)^{-3} decays like x^{-2}; the substitution makes it smooth.
    let m = simpson_to_infinity(|y| y * p.value(y), 0.0, 4.0, 2.0, 200_000);
    assert!((m - 2.0).abs() < 1e-6, "{m}");
    assert_relative_eq!(p.tail_moment(0.0), m, max_relative = 1e-6);
}

#[test]
fn gridded_first_moment() {
    let p = ModelParams::new(3.0, 1.0, 0.25).unwrap().profile();
    let grid = RadialGrid::geometric_cells(4096, 0.01, 1e4).unwrap();
    let f = DensityField::sample(grid, |y| p.value(y), Variables::SelfSimilar, 1.0)
        .with_tail(poreflow_core::grid::PowerTail::self_similar(&p, Variables::SelfSimilar, 1.0));
    assert!((first_moment(&f) - 2.0).abs() < 1e-6);
}

#[test]
fn residual_at_log_points() {
    let p = ModelParams::new(3.0, 1.0, 0.25).unwrap().profile();
    for k in 0..100 {
        let y = 1e-3 * 10f64.powf(6.0 * k as f64 / 99.0);
        assert!(fs_residual(&p, y).abs() < 1e-10);
    }
}

#[test]
fn exponential_and_compact_branches() {
    let p = derive_profile(&ModelParams::new(3.0, 1.0, 0.0).unwrap());
    assert_eq!(p.branch(), Branch::Exponential);
    assert_relative_eq!(p.c_s(), 3f64.sqrt() / 4.0, max_relative = 1e-15);
    assert_relative_eq!(p.tail_moment(0.0), p.n_s(), max_relative = 1e-14);
    let q = derive_profile(&ModelParams::new(3.0, 1.0, -0.25).unwrap());
    assert_eq!(q.branch(), Branch::Compact);
    assert_relative_eq!(q.support_end(), 4.0);
    assert_eq!(q.value(4.5), 0.0);
    assert!(ModelParams::new(3.0, 1.0, -0.5).is_err());
}

#[test]
fn selfsim_round_trip_scaling() {
    let grid = RadialGrid::geometric(0.01, 1.05, 100.0).unwrap();
    let f = DensityField::sample(grid, |x| (-x).exp(), Variables::Physical, 9.0);
    let s = to_selfsim(&f, 9.0).unwrap();
    assert_relative_eq!(s.values()[0], 27.0 * f.values()[0], max_relative = 1e-14);
    let back = from_selfsim(&s).unwrap();
    for (a, b) in back.values().iter().zip(f.values()) {
        assert_relative_eq!(a, b, max_relative = 1e-13);
    }
}

proptest! {
    #[test]
    fn power_branch_identities(beta in 0.1f64..20.0, gamma in 0.02f64..0.48) {
        let p = ModelParams::new(beta, 1.0, gamma).unwrap().profile();
        let theta = p.theta().unwrap();
        prop_assert!((theta - 1.0 - 1.0 / (2.0 * gamma)).abs() < 1e-12 * theta);
        // Moment equals N_s and the mass identity ∫F_s = 2c_s.
        prop_assert!((p.tail_moment(0.0) / p.n_s() - 1.0).abs() < 1e-12);
        prop_assert!((p.tail_mass(0.0) / (2.0 * p.c_s()) - 1.0).abs() < 1e-12);
        prop_assert!((p.c_s_from_key_relation().unwrap() / p.c_s() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_mass_is_antiderivative(gamma in 0.05f64..0.45, y in 0.0f64..50.0) {
        let p = ModelParams::new(3.0, 1.0, gamma).unwrap().profile();
        let h = 1e-4 * (1.0 + y);
        let fd = (p.tail_mass(y + h) - p.tail_mass(y - h).max(0.0)) / (2.0 * h);
        let lo = if y > h { fd } else { (p.tail_mass(y + h) - p.tail_mass(y)) / h };
        prop_assert!((lo + p.value(y)).abs() < 1e-4 * p.value(0.0));
    }

    #[test]
    fn residual_vanishes(gamma in 0.02f64..0.48, y in 0.0f64..1e4) {
        let p = ModelParams::new(3.0, 1.0, gamma).unwrap().profile();
        prop_assert!(fs_residual(&p, y).abs() < 1e-12 * p.c_s().max(1.0));
    }

    #[test]
    fn nu_matches_definition(gamma in 0.1f64..0.4, r in 0.0f64..30.0) {
        let p = ModelParams::new(3.0, 1.0, gamma).unwrap().profile();
        let nu = simpson_to_infinity(|y| (y - r) * p.value(y), r, 1.0 / gamma + r, p.theta().unwrap() - 1.0, 100_000);
        prop_assert!((p.nu(r) - nu).abs() < 1e-6 * nu.abs().max(1e-3));
    }
}
