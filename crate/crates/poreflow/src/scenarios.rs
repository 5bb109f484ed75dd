//! Scenario runner: initial data, solver runs, checks and output files.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;

use poreflow_core::fit::{fit_decay_rate, ls_slope, FitError, FitWindow};
use poreflow_core::full_model::{full_model_grid, reduction_report, solve_full_model, FullModelError, FullRunConfig};
use poreflow_core::grid::{first_moment, to_selfsim, GridError, PowerTail};
use poreflow_core::moments::{
    delta1_bound, integrate_xy_system, solve_ng_volterra, xy_eigenpairs, xy_matrix, MomentError, VolterraConfig, VolterraVariant,
    XyConfig, XyForcing,
};
use poreflow_core::params::fs_residual;
use poreflow_core::parabolic::{barrier_ratio, default_x_max, solve_parabolic, weighted_profile_ratio, BoundaryLayer, ParabolicError, ParabolicRunConfig};
use poreflow_core::perturbation::{build_perturbation, check_envelope, HatKind, Modulation, Perturbation, PerturbationError, PerturbationSpec};
use poreflow_core::profile::{AtTime, Exponential, Sum};
use poreflow_core::quad;
use poreflow_core::transport::{
    build_map, moment_of_t_dxfs, solve_transport, upwind_fv_transport, Pushforward, TransportConfig, TransportError, TransportRun,
};
use poreflow_core::{DensityField, ModelParams, Profile, RadialGrid, SelfSimilarProfile, Variables};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig, Scenario};
use crate::io::{self, IoError};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Parabolic(#[from] ParabolicError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Perturbation(#[from] PerturbationError),
    #[error(transparent)]
    FullModel(#[from] FullModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Relation {
    fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Relation::Below => value < bound,
            Relation::AtMost => value <= bound,
            Relation::AtLeast => value >= bound,
        }
    }
}

/// One thresholded quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: Scenario,
    pub seed: u64,
    /// `complete`, or `failed` when a solver aborted (outputs are partial).
    pub status: String,
    pub error: Option<String>,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
}

impl Report {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self { scenario: cfg.scenario, seed: cfg.seed, status: "complete".into(), error: None, pass: true, checks: Vec::new(), metrics: BTreeMap::new() }
    }

    fn check(&mut self, criterion: u8, name: &str, value: f64, relation: Relation, bound: f64) {
        let pass = relation.holds(value, bound);
        self.pass &= pass;
        self.checks.push(Check { criterion, name: name.into(), value, relation, bound, pass });
    }

    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    pub fn metric_value(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Rates {
    gamma: f64,
    epsilon: f64,
    fitted_rate: f64,
    target_rate: f64,
    ratio: f64,
    window: [f64; 2],
}

/// Runs one scenario into `out`, writing `report.json` last. On a solver
/// error the report is written with status `failed` and the error returned.
pub fn run_scenario(cfg: &ExperimentConfig, out: &Path) -> Result<Report, ScenarioError> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|source| IoError::Write { path: out.display().to_string(), source })?;
    io::write_toml(&out.join("config.toml"), &cfg.to_toml())?;
    let mut report = Report::new(cfg);
    let result = match cfg.scenario {
        Scenario::SelfsimilarAudit => selfsimilar_audit(cfg, out, &mut report),
        Scenario::HyperbolicStability => hyperbolic_stability(cfg, out, &mut report),
        Scenario::ParabolicStability => parabolic_stability(cfg, out, &mut report),
        Scenario::VolterraVsSim => volterra_vs_sim(cfg, out, &mut report),
        Scenario::BarrierAudit => barrier_audit(cfg, out, &mut report),
        Scenario::XyLemma => xy_lemma(cfg, out, &mut report),
        Scenario::FullReduction => full_reduction(cfg, out, &mut report),
    };
    if let Err(e) = &result {
        report.status = "failed".into();
        report.error = Some(e.to_string());
        report.pass = false;
    }
    io::write_json(&out.join("report.json"), &report)?;
    result.map(|()| report)
}

/// Phases of the two modulations, drawn from the seed.
pub fn seeded_phases(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (rng.gen::<f64>() * TAU, rng.gen::<f64>() * TAU)
}

fn perturbation(cfg: &ExperimentConfig, params: &ModelParams, hat: HatKind) -> Result<Perturbation, ScenarioError> {
    let (w_phase, hat_phase) = seeded_phases(cfg.seed);
    let p = &cfg.perturbation;
    let modulation = p.constant_w.map_or(Modulation::rippled(w_phase), Modulation::constant);
    let spec = PerturbationSpec { c0: p.c0, epsilon: p.epsilon, tau0: p.tau0, modulation, hat_amplitude: p.hat_amplitude, hat_phase, hat };
    Ok(build_perturbation(params, &spec)?)
}

fn snapshot_times(t0: f64, span: f64, every: f64) -> Vec<f64> {
    let n = (span / every + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|k| t0 * (k as f64 * every).exp()).collect();
    if (n as f64) * every < span - 1e-9 {
        out.push(t0 * span.exp());
    }
    out
}

fn selfsim_grid(y_max: f64) -> Result<RadialGrid, GridError> {
    RadialGrid::geometric(1e-3, 1.02, y_max)
}

fn write_profile(out: &Path, field: &DensityField) -> Result<(), IoError> {
    io::write_field(&out.join("profiles").join(io::profile_name(field.time().ln())), field)
}

fn write_rates(out: &Path, params: &ModelParams, epsilon: f64, rate: f64, window: [f64; 2]) -> Result<(), IoError> {
    let target = epsilon * params.gamma();
    let rates = Rates { gamma: params.gamma(), epsilon, fitted_rate: rate, target_rate: target, ratio: rate / target, window };
    io::write_json(&out.join("rates.json"), &rates)
}

fn selfsimilar_audit(cfg: &ExperimentConfig, out: &Path, report: &mut Report) -> Result<(), ScenarioError> {
    let params = cfg.model_params()?;
    let p = params.profile();
    report.metric("theta", p.theta().unwrap_or(f64::NAN));
    report.metric("n_s", p.n_s());
    report.metric("c_s", p.c_s());
    let is_reference = cfg.model.beta == 3.0 && cfg.model.gamma == 0.25;
    if is_reference {
        let gap = (p.theta().unwrap_or(f64::NAN) - 3.0).abs().max((p.n_s() - 2.0).abs()).max((p.c_s() - 0.25).abs());
        report.check(1, "reference_constants_gap", gap, Relation::AtMost, 1e-12);
    }

    // Gridded midpoint moment with the analytic tail beyond y_max.
    let grid = RadialGrid::geometric_cells(4096, 0.01, 1e4)?;
    let field = DensityField::sample(grid, |y| p.value(y), Variables::SelfSimilar, 1.0)
        .with_tail(PowerTail::self_similar(&p, Variables::SelfSimilar, 1.0));
    let moment = first_moment(&field);
    report.metric("first_moment", moment);
    report.check(1, "first_moment_error", (moment - p.n_s()).abs(), Relation::Below, 1e-6);

    let residual = (0..100)
        .map(|k| 1e-3 * 10f64.powf(6.0 * k as f64 / 99.0))
        .filter(|&y| y < p.support_end())
        .map(|y| fs_residual(&p, y).abs())
        .fold(0.0, f64::max);
    report.check(1, "residual_max", residual, Relation::Below, 1e-10);

    // The three amplitude formulas, and the quadrature moment across the power branch.
    let mut c_gap: f64 = 0.0;
    let mut m_gap: f64 = 0.0;
    let mut rows = Vec::new();
    for k in 1..=9 {
        let gamma = 0.05 * k as f64;
        let q = ModelParams::new(params.beta(), params.mu(), gamma).map_err(ConfigError::from)?.profile();
        let theta = q.theta().unwrap_or(f64::NAN);
        let key = q.n_s() * gamma * gamma * (theta - 1.0) * (theta - 2.0);
        let direct = (1.0 - 2.0 * gamma) * q.n_s() / 4.0;
        c_gap = c_gap.max((q.c_s() - key).abs() / q.c_s()).max((q.c_s() - direct).abs() / q.c_s());
        let y_cut = 1e3 / gamma;
        let body = quad::integrate(|y| y * q.value(y), 0.0, y_cut, 1e-13).value;
        let m = body + q.tail_moment(y_cut);
        m_gap = m_gap.max((m / q.n_s() - 1.0).abs());
        rows.push(vec![gamma, theta, q.n_s(), q.c_s(), m]);
    }
    report.metric("c_s_relative_gap", c_gap);
    report.metric("moment_relative_gap", m_gap);
    io::write_table(&out.join("branches.csv"), "power branch constants", &["gamma", "theta", "N_s", "c_s", "moment"], &rows)?;
    let ygrid = selfsim_grid(1e3)?;
    write_profile(out, &DensityField::sample(ygrid, |y| p.value(y), Variables::SelfSimilar, 1.0))?;
    Ok(())
}

/// Initial data `F_s + G0 + Ĝ0` in self-similar variables.
fn hyperbolic_initial(profile: SelfSimilarProfile, pert: &Perturbation) -> Sum {
    Sum::new().with(profile).with(pert.g0).with(pert.ghat0)
}

struct TransportExperiment {
    t0: f64,
    f0: AtTime<Sum>,
    run: TransportRun,
}

fn transport_experiment(cfg: &ExperimentConfig, params: &ModelParams, pert: &Perturbation) -> Result<TransportExperiment, ScenarioError> {
    let t0 = cfg.perturbation.tau0.exp();
    let n = &cfg.numerics;
    let f0 = AtTime { inner: hyperbolic_initial(params.profile(), pert), t: t0 };
    let mut tc = TransportConfig::new(t0, t0 * n.span.exp());
    tc.step_fraction = n.step_fraction;
    tc.snapshots = snapshot_times(t0, n.span, n.snapshot_every);
    let run = solve_transport(&f0, params, &tc)?;
    Ok(TransportExperiment { t0, f0, run })
}

fn transport_moments(run: &TransportRun, n_s: f64) -> Vec<Vec<f64>> {
    run.trace.samples.iter().map(|s| vec![s.t, s.tau(), s.n_f, s.big_n(), s.big_n() - n_s]).collect()
}

const MOMENT_HEADER: [&str; 5] = ["t", "tau", "n_f", "N_F", "N_G"];

/// `F(y, τ) = t^{3/2} f(t y, t)` from a transport snapshot.
fn selfsim_value<P: Profile>(f0: &P, t: f64, map: poreflow_core::transport::Affine, y: f64) -> f64 {
    t.powf(1.5) * Pushforward { inner: f0, map }.value(t * y)
}

/// First-order upwind against the exact push-forward of `e^{-x}` on `[0, 40]`, `t ∈ [1, 4]`.
fn upwind_gaps(params: &ModelParams) -> Result<[f64; 2], ScenarioError> {
    let gamma = params.gamma();
    let slope = |t: f64| -(1.0 - gamma) / t;
    let map = build_map(|_| 0.0, params, 1.0, &[4.0])?.at(4.0)?;
    let exact = Pushforward { inner: Exponential { amplitude: 1.0, rate: 1.0 }, map };
    let mut gaps = [0.0; 2];
    for (gap, cells) in gaps.iter_mut().zip([4096, 8192]) {
        let grid = RadialGrid::uniform(cells, 40.0)?;
        let f0 = DensityField::sample(grid.clone(), |x| (-x).exp(), Variables::Physical, 1.0);
        let fv = upwind_fv_transport(&f0, slope, 1.0, 4.0, 0.9, &[4.0])?;
        *gap = grid.centers().iter().zip(grid.widths()).zip(fv[0].values()).map(|((&x, &h), &v)| h * (v - exact.value(x)).abs()).sum();
    }
    Ok(gaps)
}

/// `(2β/N_s³) ∫ x T∂x(x f_s)` at `t = 16`, `r = 1`, `j ≡ 0`: closed form and direct quadrature.
fn scaled_moment(params: &ModelParams) -> Result<(f64, f64), ScenarioError> {
    let p = params.profile();
    let map = build_map(|_| 0.0, params, 1.0, &[16.0])?.at(16.0)?;
    let closed = moment_of_t_dxfs(&p, 16.0, 1.0, map)?.value;
    let phi = |z: f64| p.value(z) + z * p.derivative(z);
    let direct = quad::to_infinity(|x| x * map.slope * phi(map.slope * x + map.shift), 0.0, 8.0, 1e-13).value;
    Ok((closed, 2.0 * p.beta() / p.n_s().powi(3) * direct))
}

fn hyperbolic_stability(cfg: &ExperimentConfig, out: &Path, report: &mut Report) -> Result<(), ScenarioError> {
    let params = cfg.model_params()?;
    let profile = params.profile();
    let n = &cfg.numerics;

    let gaps = upwind_gaps(&params)?;
    report.metric("upwind_gap_4096", gaps[0]);
    report.metric("upwind_gap_8192", gaps[1]);
    report.check(2, "upwind_gap", gaps[0], Relation::Below, 5e-3);
    report.check(2, "upwind_halving_deviation", (gaps[0] / gaps[1] / 2.0 - 1.0).abs(), Relation::AtMost, 0.2);

    if params.gamma() == 0.25 {
        let (closed, direct) = scaled_moment(&params)?;
        report.metric("scaled_moment_closed_form", closed);
        report.metric("scaled_moment_quadrature", direct);
        report.check(3, "scaled_moment_error", (direct + 9.0).abs().max((closed + 9.0).abs()), Relation::Below, 1e-4);
    }

    let pert = perturbation(cfg, &params, HatKind::Free)?;
    let exp = transport_experiment(cfg, &params, &pert)?;
    let tau0 = cfg.perturbation.tau0;
    let rows = transport_moments(&exp.run, profile.n_s());
    io::write_table(&out.join("moments.csv"), "transport run", &MOMENT_HEADER, &rows)?;

    let ygrid = selfsim_grid(1e3)?;
    for &(t, map) in &exp.run.snapshots {
        let field = DensityField::sample(ygrid.clone(), |y| selfsim_value(&exp.f0, t, map, y), Variables::SelfSimilar, t).into_signed();
        write_profile(out, &field)?;
    }
    let &(t_last, map_last) = exp.run.snapshots.last().expect("final snapshot");
    let sup = (0..=4000)
        .map(|k| n.y_max * k as f64 / 4000.0)
        .map(|y| (selfsim_value(&exp.f0, t_last, map_last, y) - profile.value(y)).abs())
        .fold(0.0, f64::max);
    report.metric("sup_error_final", sup);
    report.check(5, "sup_error_over_fs0", sup / profile.value(0.0), Relation::Below, 0.01);

    let taus: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let ng: Vec<f64> = rows.iter().map(|r| r[4]).collect();
    let window = [tau0 + n.fit_start, tau0 + n.span];
    let fit = fit_decay_rate(&taus, &ng, FitWindow::new(window[0], window[1]).with_guard(0.25))?;
    report.metric("n_g_initial", ng[0]);
    report.metric("fit_r_squared", fit.r_squared);
    report.metric("sign_changes", fit.sign_changes.len() as f64);
    let target = cfg.perturbation.epsilon * params.gamma();
    report.check(5, "n_g_decay_rate", fit.rate, Relation::AtLeast, 0.8 * target);
    write_rates(out, &params, cfg.perturbation.epsilon, fit.rate, window)?;
    let _ = exp.t0;
    Ok(())
}

fn volterra_vs_sim(cfg: &ExperimentConfig, out: &Path, report: &mut Report) -> Result<(), ScenarioError> {
    let params = cfg.model_params()?;
    let profile = params.profile();
    let n = &cfg.numerics;
    let tau0 = cfg.perturbation.tau0;
    let pert = perturbation(cfg, &params, HatKind::Free)?;
    let exp = transport_experiment(cfg, &params, &pert)?;
    let rows = transport_moments(&exp.run, profile.n_s());
    io::write_table(&out.join("moments.csv"), "transport run", &MOMENT_HEADER, &rows)?;

    let initial = Sum::new().with(pert.g0).with(pert.ghat0);
    let mut vc = VolterraConfig::new(tau0, tau0 + n.span);
    vc.step = n.volterra_step;
    let vol = solve_ng_volterra(VolterraVariant::Hyperbolic, &params, &initial, &vc)?;
    let vol_tau: Vec<f64> = vol.samples.iter().map(|s| s.tau).collect();
    let vol_n: Vec<f64> = vol.samples.iter().map(|s| s.big_n).collect();
    let n0 = rows[0][4];
    let mut worst: f64 = 0.0;
    let mut table = Vec::with_capacity(rows.len());
    for r in &rows {
        let v = interp_linear(&vol_tau, &vol_n, r[1]);
        worst = worst.max((r[4] - v).abs());
        table.push(vec![r[1], r[4], v]);
    }
    io::write_table(&out.join("volterra.csv"), "N_G from the simulation and from the integral equation", &["tau", "N_G_sim", "N_G_volterra"], &table)?;
    let d1: Vec<Vec<f64>> = vol.delta1.iter().map(|&(r, d)| vec![r, d]).collect();
    io::write_table(&out.join("delta1.csv"), "kernel deviation at the final time", &["rho", "delta1"], &d1)?;
    report.metric("n_g_initial", n0);
    report.metric("max_gap", worst);
    report.metric("delta1_max", vol.delta1.iter().map(|d| d.1.abs()).fold(0.0, f64::max));
    report.check(6, "relative_gap", worst / n0.abs(), Relation::AtMost, 0.02);
    Ok(())
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v < x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let s = if x1 > x0 { ((x - x0) / (x1 - x0)).clamp(0.0, 1.0) } else { 0.0 };
    ys[i - 1] + s * (ys[i] - ys[i - 1])
}

fn parabolic_stability(cfg: &ExperimentConfig, out: &Path, report: &mut Report) -> Result<(), ScenarioError> {
    let params = cfg.model_params()?;
    let profile = params.profile();
    let theta = profile.theta().unwrap_or(f64::NAN);
    let n = &cfg.numerics;
    let tau0 = cfg.perturbation.tau0;
    let t0 = tau0.exp();
    let t_end = t0 * n.span.exp();

    let pert = perturbation(cfg, &params, HatKind::Pinned)?;
    let envelope = check_envelope(&pert.g0, theta)?;
    report.metric("g0_second_derivative_envelope", envelope);
    let layer = BoundaryLayer::new(&params);
    let f0 = Sum::new()
        .with(AtTime { inner: profile, t: t0 })
        .with(Exponential { amplitude: layer.amplitude(t0), rate: 1.0 })
        .with(AtTime { inner: pert.g0, t: t0 })
        .with(AtTime { inner: pert.ghat0, t: t0 });
    let x_max = n.x_max.unwrap_or_else(|| default_x_max(t_end, params.gamma()));
    let grid = RadialGrid::geometric(n.h0, n.ratio, x_max)?;
    report.metric("cells", grid.cells() as f64);
    let mut pc = ParabolicRunConfig::new(grid, t0, t_end).second_order();
    pc.step_fraction = n.step_fraction;
    pc.tail_correction = true;
    pc.snapshots = snapshot_times(t0, n.span, n.snapshot_every);
    let run = solve_parabolic(&f0, &params, &pc)?;

    let n_s = profile.n_s();
    let rows: Vec<Vec<f64>> = run
        .samples
        .iter()
        .map(|s| {
            let n_g = s.n_f - layer.n_bl(s.t) - n_s * s.t.sqrt();
            vec![s.t, s.t.ln(), s.n_f, s.n_f / s.t.sqrt(), n_g, n_g / s.t.sqrt()]
        })
        .collect();
    let header = ["t", "tau", "n_f", "N_F", "n_g", "N_G"];
    io::write_table(&out.join("moments.csv"), "parabolic run; n_g and N_G have the boundary layer removed", &header, &rows)?;
    let boundary = run.samples.iter().map(|s| (s.boundary_value - params.mu()).abs()).fold(0.0, f64::max);
    report.check(7, "boundary_value_error", boundary, Relation::AtMost, 0.0);

    let taus: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let ng: Vec<f64> = rows.iter().map(|r| r[5]).collect();
    let window = [tau0 + n.fit_start, tau0 + n.span];
    let fit = fit_decay_rate(&taus, &ng, FitWindow::new(window[0], window[1]).with_guard(0.25))?;
    report.metric("n_g_initial", ng[0]);
    report.metric("fit_r_squared", fit.r_squared);
    report.metric("sign_changes", fit.sign_changes.len() as f64);
    let target = cfg.perturbation.epsilon * params.gamma();
    report.check(7, "n_g_decay_rate", fit.rate, Relation::AtLeast, 0.8 * target);
    write_rates(out, &params, cfg.perturbation.epsilon, fit.rate, window)?;

    let mut ratio_rows = Vec::new();
    for snap in &run.snapshots {
        let ratio = weighted_profile_ratio(snap, &profile, params.mu(), n.y_max);
        ratio_rows.push(vec![snap.time(), snap.time().ln(), ratio]);
        write_profile(out, &to_selfsim(snap, snap.time())?)?;
    }
    io::write_table(&out.join("profile_ratio.csv"), "weighted profile ratio", &["t", "tau", "ratio"], &ratio_rows)?;
    let tail_start = tau0 + n.span - 5.0;
    let (lx, ly): (Vec<f64>, Vec<f64>) = ratio_rows.iter().filter(|r| r[1] >= tail_start - 1e-9).map(|r| (r[1], r[2].ln())).unzip();
    let slope = ls_slope(&lx, &ly);
    report.metric("profile_ratio_final", ratio_rows.last().map_or(f64::NAN, |r| r[2]));
    report.check(7, "profile_ratio_log_slope", slope, Relation::Below, 0.0);
    Ok(())
}

fn barrier_audit(cfg: &ExperimentConfig, out: &Path, report: &mut Report) -> Result<(), ScenarioError> {
    let params = cfg.model_params()?;
    let b = &cfg.barrier;
    let n = &cfg.numerics;
    let t0 = cfg.perturbation.tau0.exp();
    let t_end = t0 * b.t_ratio;
    let times: Vec<f64> = (0..b.samples).map(|k| t0 * b.t_ratio.powf(k as f64 / (b.samples - 1) as f64)).collect();
    let x_max = n.x_max.unwrap_or_else(|| default_x_max(t_end, params.gamma()));
    let grid = RadialGrid::geometric(n.h0, n.ratio, x_max)?;
    let mut pc = ParabolicRunConfig::new(grid, t0, t_end).second_order();
    pc.step_fraction = n.step_fraction;
    pc.snapshots = times;
    let phi0 = AtTime { inner: params.profile(), t: t0 };
    let rep = barrier_ratio(&phi0, |_| 0.0, &params, b.lambda, n.y_max, &pc)?;
    let rows: Vec<Vec<f64>> = rep.rows.iter().map(|r| vec![r.t, r.ratio]).collect();
    io::write_table(&out.join("barrier.csv"), &format!("barrier ratio, lambda = {}", b.lambda), &["t", "ratio"], &rows)?;
    report.metric("ratio_at_t0", rep.rows.first().map_or(f64::NAN, |r| r.ratio));
    report.metric("ratio_max", rep.rows.iter().map(|r| r.ratio).fold(0.0, f64::max));
    report.check(8, "barrier_log_slope", rep.slope, Relation::AtMost, 0.05);
    Ok(())
}

fn xy_lemma(cfg: &ExperimentConfig, out: &Path, report: &mut Report) -> Result<(), ScenarioError> {
    let mut eig_err: f64 = 0.0;
    for gamma in [0.1, 0.25, 0.4, cfg.model.gamma] {
        let a = xy_matrix(gamma);
        let pairs = xy_eigenpairs(gamma);
        let mut values = [pairs[0].0, pairs[1].0];
        values.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eig_err = eig_err.max((values[0] + 1.0).abs()).max((values[1] + (1.0 - gamma)).abs());
        for (l, v) in pairs {
            for (row, vi) in a.iter().zip(v) {
                eig_err = eig_err.max((row[0] * v[0] + row[1] * v[1] - l * vi).abs());
            }
        }
    }
    report.check(4, "eigen_error", eig_err, Relation::AtMost, 1e-12);

    let x = &cfg.xy;
    let gamma = cfg.model.gamma;
    let tau0 = cfg.perturbation.tau0;
    let bound = delta1_bound(gamma, x.eta);
    let d1 = move |tau: f64| x.delta1_fraction * bound * (3.0 * tau).sin();
    let d2 = move |tau: f64| x.delta2_amplitude * (-x.delta2_rate * (tau - tau0)).exp();
    let h = |_: f64| 0.0;
    let forcing = XyForcing { delta1: &d1, delta2: &d2, h: &h };
    let xc = XyConfig { gamma, eta: x.eta, tau0, tau_end: tau0 + x.span, step: x.step };
    let tr = integrate_xy_system(&forcing, &xc)?;
    let rows: Vec<Vec<f64>> = (0..tr.tau.len()).step_by(10).map(|i| vec![tr.tau[i], tr.x[i], tr.y[i], tr.n[i]]).collect();
    io::write_table(&out.join("xy.csv"), "forced X-Y system", &["tau", "X", "Y", "N"], &rows)?;
    let window = [tau0 + x.fit_start, tau0 + x.span];
    let fit = fit_decay_rate(&tr.tau, &tr.n, FitWindow::new(window[0], window[1]))?;
    let xfit = fit_decay_rate(&tr.tau, &tr.x, FitWindow::new(window[0], window[1]))?;
    report.metric("n_rate", fit.rate);
    report.metric("x_rate", xfit.rate);
    report.check(4, "n_rate_relative_error", (fit.rate / x.delta2_rate - 1.0).abs(), Relation::AtMost, 0.05);
    report.check(4, "x_rate_over_eta", xfit.rate / x.eta, Relation::AtLeast, 0.95);
    let rates = Rates {
        gamma,
        epsilon: x.delta2_rate / gamma,
        fitted_rate: fit.rate,
        target_rate: x.delta2_rate,
        ratio: fit.rate / x.delta2_rate,
        window,
    };
    io::write_json(&out.join("rates.json"), &rates)?;
    Ok(())
}

fn full_reduction(cfg: &ExperimentConfig, out: &Path, report: &mut Report) -> Result<(), ScenarioError> {
    let f = &cfg.full;
    for &v in &f.v_ext {
        let params = f.params(v);
        let dir = out.join(format!("v_ext={v}"));
        let tag = |name: &str| format!("v{v}.{name}");
        if v == 0.0 {
            let grid = full_model_grid(&params, f.interior_cells, f.span)?;
            let eq: Vec<f64> = grid.centers().iter().map(|&r| params.equilibrium(r)).collect();
            let one = FullRunConfig { grid, dt: f.dt, t_end: f.dt, snapshots: Vec::new() };
            let run = solve_full_model(&params, &eq, 0.0, &one)?;
            let flux = run.max_flux.first().copied().unwrap_or(f64::NAN);
            report.check(9, "detailed_balance_flux", flux, Relation::Below, 1e-10);
        }
        let rep = reduction_report(&params, &f.reduction())?;
        report.metric("beta_eff_per_volt2", rep.beta_eff);
        report.metric("mu_eff", rep.mu_eff);
        report.metric("a1", rep.a1);
        report.metric(&tag("interior_error_initial"), rep.interior_error_initial);
        report.metric(&tag("interior_error"), rep.interior_error);
        report.metric(&tag("exterior_profile_error"), rep.exterior_profile_error);
        if v == 1.0 {
            report.check(9, "interior_error_v1", rep.interior_error, Relation::AtMost, 0.05);
        }
        let vm: Vec<Vec<f64>> = rep.vm.iter().step_by(10).map(|&(t, x)| vec![t, x]).collect();
        io::write_table(&dir.join("vm.csv"), "membrane potential", &["t", "V_m"], &vm)?;
        io::write_field(&dir.join("profiles").join("full.csv"), &rep.full_profile)?;
        io::write_field(&dir.join("profiles").join("reduced.csv"), &rep.reduced_profile)?;
    }
    Ok(())
}
