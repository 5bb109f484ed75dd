use poreflow_core::grid::mass;
use poreflow_core::parabolic::{
    solve_frozen_s, solve_mean_field, Closure, FluxScheme, ParabolicRunConfig, TimeScheme,
};
use poreflow_core::profile::{Exponential, Numeric, Zero};
use poreflow_core::{ModelParams, RadialGrid};
use proptest::prelude::*;

fn params() -> ModelParams {
    ModelParams::new(3.0, 1.0, 0.25).unwrap()
}

/// `f = e^{-x/2} e^{-(k² + 1/4) t} sin(k x)` solves `∂t f = ∂x(∂x f + f)` with zero ends at 0 and `L`.
fn exact(x: f64, t: f64, k: f64) -> f64 {
    (-0.5 * x).exp() * (-(k * k + 0.25) * t).exp() * (k * x).sin()
}

fn l1_error(flux: FluxScheme, time: TimeScheme, cells: usize) -> f64 {
    let len = 10.0;
    let k = std::f64::consts::PI / len;
    let grid = RadialGrid::uniform(cells, len).unwrap();
    let mut cfg = ParabolicRunConfig::new(grid.clone(), 1.0, 2.0);
    cfg.flux = flux;
    cfg.time = time;
    cfg.step_fraction = 1.0;
    cfg.dt_max = len / cells as f64;
    cfg.snapshots = vec![2.0];
    let phi0 = Numeric::new(move |x| exact(x, 1.0, k), 2.0);
    let out = solve_frozen_s(&phi0, |t| (1.0 - 0.25) / t, &params(), &cfg).unwrap();
    out[0]
        .grid()
        .centers()
        .iter()
        .zip(grid.widths())
        .zip(out[0].values())
        .map(|((&x, &h), &v)| h * (v - exact(x, 2.0, k)).abs())
        .sum()
}

#[test]
fn second_order_accuracy_mode() {
    let coarse = l1_error(FluxScheme::Hybrid, TimeScheme::Bdf2, 200);
    let fine = l1_error(FluxScheme::Hybrid, TimeScheme::Bdf2, 400);
    let order = (coarse / fine).log2();
    assert!(order > 1.8, "order {order}");
    let coarse = l1_error(FluxScheme::Fitted, TimeScheme::BackwardEuler, 200);
    let fine = l1_error(FluxScheme::Fitted, TimeScheme::BackwardEuler, 400);
    let order = (coarse / fine).log2();
    assert!(order > 0.9, "order {order}");
}

#[test]
fn zero_data_stays_zero() {
    let grid = RadialGrid::geometric(0.05, 1.05, 500.0).unwrap();
    let mut cfg = ParabolicRunConfig::new(grid, 1.0, 5.0);
    cfg.snapshots = vec![5.0];
    let out = solve_frozen_s(&Zero, |_| 0.01, &params(), &cfg).unwrap();
    assert!(out[0].values().iter().all(|&v| v == 0.0));
}

#[test]
fn mass_leaves_through_absorbing_origin() {
    // a = 0, f(0) = 0: no source, so mass only decreases.
    let grid = RadialGrid::geometric(0.02, 1.03, 200.0).unwrap();
    let mut cfg = ParabolicRunConfig::new(grid, 1.0, 20.0);
    cfg.snapshots = (1..=20).map(|k| k as f64).collect();
    let f0 = Numeric::new(|x: f64| x * (-x / 3.0).exp(), 3.0);
    let out = solve_frozen_s(&f0, |t| 0.75 / t, &params(), &cfg).unwrap();
    let masses: Vec<f64> = out.iter().map(mass).collect();
    assert!(masses.windows(2).all(|w| w[1] < w[0]), "{masses:?}");
}

#[test]
fn steady_layer_is_preserved() {
    // μ e^{-x} is stationary when a ≡ 0.
    let grid = RadialGrid::geometric(0.01, 1.02, 60.0).unwrap();
    let mut cfg = ParabolicRunConfig::new(grid, 1.0, 10.0);
    cfg.closure = Closure::Lagged;
    let f0 = Exponential { amplitude: 2.0, rate: 1.0 };
    let run = solve_mean_field(&f0, 2.0, |_| 0.0, None, &cfg).unwrap();
    for (x, v) in run.last.grid().centers().iter().zip(run.last.values()) {
        if *x < 30.0 {
            assert!((v / (2.0 * (-x).exp()) - 1.0).abs() < 2e-3, "x {x}: {v}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fitted_backward_euler_keeps_sign(
        amps in proptest::collection::vec(0.0f64..2.0, 3),
        dt_scale in 0.5f64..50.0,
        j in -0.02f64..0.02,
    ) {
        let grid = RadialGrid::geometric(0.05, 1.05, 400.0).unwrap();
        let mut cfg = ParabolicRunConfig::new(grid, 1.0, 1.0 + 3.0 * dt_scale);
        cfg.step_fraction = dt_scale;
        cfg.snapshots = vec![1.0 + 3.0 * dt_scale];
        let a = amps.clone();
        let f0 = Numeric::new(move |x: f64| a[0] * (-(x - 3.0).powi(2)).exp() + a[1] * x * (-x / 5.0).exp() + a[2] * (0.3 * x).sin().powi(2) * (-x / 20.0).exp(), 5.0);
        let out = solve_frozen_s(&f0, move |_| j, &params(), &cfg).unwrap();
        prop_assert!(out[0].values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn frozen_operator_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let grid = RadialGrid::geometric(0.05, 1.05, 300.0).unwrap();
        let mut cfg = ParabolicRunConfig::new(grid, 1.0, 4.0);
        cfg.time = TimeScheme::Bdf2;
        cfg.flux = FluxScheme::Hybrid;
        cfg.snapshots = vec![4.0];
        let j = |t: f64| 0.01 / t;
        let p1 = Numeric::new(|x: f64| x * (-x).exp(), 1.0);
        let p2 = Numeric::new(|x: f64| (x / 4.0).sin() * (-x / 8.0).exp(), 8.0);
        let both = Numeric::new(move |x: f64| a * x * (-x).exp() + b * (x / 4.0).sin() * (-x / 8.0).exp(), 8.0);
        let s1 = solve_frozen_s(&p1, j, &params(), &cfg).unwrap();
        let s2 = solve_frozen_s(&p2, j, &params(), &cfg).unwrap();
        let s = solve_frozen_s(&both, j, &params(), &cfg).unwrap();
        for ((u, v), w) in s1[0].values().iter().zip(s2[0].values()).zip(s[0].values()) {
            prop_assert!((a * u + b * v - w).abs() < 1e-12 * (1.0 + w.abs()));
        }
    }
}
