//! The drift–diffusion problem `∂t f = ∂x(∂x f + (1 + a(t) x) f)` on a
//! truncated half-line, with the boundary layer at `x = 0`.
//!
//! Face fluxes `Φ = ∂x f + w f`, `w = 1 + a x`, are Scharfetter–Gummel:
//! `Φ = (B(−w d) f_R − B(w d) f_L)/d` with `B(z) = z/(e^z − 1)`. Together
//! with backward Euler this gives an M-matrix, hence nonnegativity for any
//! step size. The scheme is only first order where the cell Péclet number
//! `|w d|` is large, which is most of a power-law tail; [`FluxScheme::Hybrid`]
//! and [`TimeScheme::Bdf2`] trade the positivity guarantee for second order.

use alloc::boxed::Box;
use alloc::vec::Vec;
// Unused when std is linked (its inherent float methods take precedence).
#[allow(unused_imports)]
use num_traits::Float;

use crate::fit::ls_slope;
use crate::grid::{DensityField, RadialGrid, Variables};
use crate::linalg::{self, LinalgError};
use crate::params::{ModelParams, SelfSimilarProfile};
use crate::profile::Profile;
use crate::transport::{build_map, Pushforward, TransportError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParabolicError {
    #[error("start time must be positive (>= 1 for the self-similar problem), got {0}")]
    StartTime(f64),
    #[error("initial value at x = 0 is {found}, expected {expected}")]
    BoundaryMismatch { found: f64, expected: f64 },
    #[error("linear solve failed at t = {t}: {source}")]
    Solve { t: f64, source: LinalgError, last: Box<DensityField> },
    #[error("solution blew up at t = {t}")]
    Blowup { t: f64, last: Box<DensityField> },
    #[error("step control must satisfy 0 < dt <= dt_max, got fraction {0}")]
    BadStep(f64),
    #[error("Picard cap must be >= 1")]
    PicardCap,
    #[error("lambda = {lambda} outside [3/2, 3/2 + 2 gamma) = [1.5, {upper})")]
    Lambda { lambda: f64, upper: f64 },
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Face flux discretisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxScheme {
    /// Scharfetter–Gummel on every face.
    Fitted,
    /// Scharfetter–Gummel where `|w d| <= 2`, centred differences elsewhere
    /// (boundary faces always fitted).
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScheme {
    BackwardEuler,
    /// Variable-step BDF2 (first step backward Euler).
    Bdf2,
}

/// How the nonlocal coefficient is closed over a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure {
    /// Coefficient from the previous step (linearly extrapolated under BDF2).
    Lagged,
    /// Re-solve with the updated first moment until it changes by less than `tol`.
    Picard { tol: f64, max_iter: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicRunConfig {
    pub grid: RadialGrid,
    pub t0: f64,
    pub t_end: f64,
    /// `dt = min(step_fraction·t, dt_max)`.
    pub step_fraction: f64,
    pub dt_max: f64,
    pub closure: Closure,
    pub flux: FluxScheme,
    pub time: TimeScheme,
    /// Add the analytic `F_s` tail beyond `x_max` to the first moment.
    pub tail_correction: bool,
    pub snapshots: Vec<f64>,
}

impl ParabolicRunConfig {
    /// Monotone defaults: fitted fluxes, backward Euler, lagged mean field, `dt = 0.02 t`.
    pub fn new(grid: RadialGrid, t0: f64, t_end: f64) -> Self {
        Self {
            grid,
            t0,
            t_end,
            step_fraction: 0.02,
            dt_max: f64::INFINITY,
            closure: Closure::Lagged,
            flux: FluxScheme::Fitted,
            time: TimeScheme::BackwardEuler,
            tail_correction: false,
            snapshots: Vec::new(),
        }
    }

    /// Second-order settings used for the long-time asymptotics runs.
    pub fn second_order(mut self) -> Self {
        self.flux = FluxScheme::Hybrid;
        self.time = TimeScheme::Bdf2;
        self.closure = Closure::Picard { tol: 1e-12, max_iter: 3 };
        self.step_fraction = 0.01;
        self
    }

    fn validate(&self) -> Result<(), ParabolicError> {
        if !(self.t0 > 0.0) {
            return Err(ParabolicError::StartTime(self.t0));
        }
        if !(self.step_fraction > 0.0 && self.dt_max > 0.0) {
            return Err(ParabolicError::BadStep(self.step_fraction));
        }
        if let Closure::Picard { max_iter, .. } = self.closure {
            if max_iter < 1 {
                return Err(ParabolicError::PicardCap);
            }
        }
        Ok(())
    }
}

/// Default truncation `200·t_end·max(1, 1/γ)`.
pub fn default_x_max(t_end: f64, gamma: f64) -> f64 {
    let g = if gamma > 0.0 { (1.0 / gamma).max(1.0) } else { 1.0 };
    200.0 * t_end * g
}

/// `B(z) = z/(e^z − 1)`.
pub fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-6 {
        1.0 - 0.5 * z + z * z / 12.0
    } else if z > 700.0 {
        0.0
    } else {
        z / z.exp_m1()
    }
}

/// Geometry of the two-point fluxes, including the half cells at both boundaries.
#[derive(Debug, Clone)]
struct Faces {
    /// Face positions `x_{i-1/2}`, `n + 1` entries.
    x: Vec<f64>,
    /// Node distance across each face.
    d: Vec<f64>,
    /// Relative position of the face between its nodes.
    lambda: Vec<f64>,
}

impl Faces {
    fn new(grid: &RadialGrid) -> Self {
        let c = grid.centers();
        let e = grid.edges();
        let n = grid.cells();
        let mut d = Vec::with_capacity(n + 1);
        let mut lambda = Vec::with_capacity(n + 1);
        d.push(c[0]);
        lambda.push(0.0);
        for i in 1..n {
            d.push(c[i] - c[i - 1]);
            lambda.push((e[i] - c[i - 1]) / (c[i] - c[i - 1]));
        }
        d.push(e[n] - c[n - 1]);
        lambda.push(1.0);
        Self { x: e.to_vec(), d, lambda }
    }

    /// `(c_L, c_R)` per face with `Φ = c_R f_R − c_L f_L`.
    fn coefficients(&self, a: f64, scheme: FluxScheme) -> (Vec<f64>, Vec<f64>) {
        let m = self.x.len();
        let mut cl = Vec::with_capacity(m);
        let mut cr = Vec::with_capacity(m);
        for k in 0..m {
            let w = 1.0 + a * self.x[k];
            let d = self.d[k];
            let pe = w * d;
            let boundary = k == 0 || k == m - 1;
            if scheme == FluxScheme::Hybrid && !boundary && pe.abs() > 2.0 {
                let l = self.lambda[k];
                cr.push(1.0 / d + w * l);
                cl.push(1.0 / d - w * (1.0 - l));
            } else {
                cr.push(bernoulli(-pe) / d);
                cl.push(bernoulli(pe) / d);
            }
        }
        (cl, cr)
    }
}

/// Shared implicit stepper for `solve_parabolic` and `solve_frozen_s`.
struct Stepper {
    grid: RadialGrid,
    faces: Faces,
    flux: FluxScheme,
}

impl Stepper {
    fn new(grid: &RadialGrid, flux: FluxScheme) -> Self {
        Self { grid: grid.clone(), faces: Faces::new(grid), flux }
    }

    /// Solves `h c0 u − (Φ_{i+1} − Φ_i) = rhs` with Dirichlet `boundary` at 0 and 0 at `x_max`.
    fn solve(&self, a: f64, c0: f64, rhs: &[f64], boundary: f64) -> Result<Vec<f64>, LinalgError> {
        let n = self.grid.cells();
        let h = self.grid.widths();
        let (cl, cr) = self.faces.coefficients(a, self.flux);
        let mut lower = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        let mut b = rhs.to_vec();
        for i in 0..n {
            diag.push(h[i] * c0 + cl[i + 1] + cr[i]);
            lower.push(-cl[i]);
            upper.push(-cr[i + 1]);
        }
        b[0] += cl[0] * boundary;
        linalg::solve_tridiagonal(&lower, &diag, &upper, &b)
    }

    /// Boundary flux `Φ` through `x = 0` for values `u`.
    fn origin_flux(&self, a: f64, u: &[f64], boundary: f64) -> f64 {
        let (cl, cr) = self.faces.coefficients(a, self.flux);
        cr[0] * u[0] - cl[0] * boundary
    }
}

/// Time-step bookkeeping shared by both solvers.
struct Clock {
    t: f64,
    t_end: f64,
    fraction: f64,
    dt_max: f64,
    snaps: Vec<f64>,
}

impl Clock {
    fn next(&self) -> f64 {
        let mut next = (self.t + (self.fraction * self.t).min(self.dt_max)).min(self.t_end);
        if let Some(&s) = self.snaps.iter().find(|&&s| s > self.t * (1.0 + 1e-14)) {
            next = next.min(s);
        }
        next
    }

    fn running(&self) -> bool {
        self.t < self.t_end * (1.0 - 1e-14)
    }

    fn is_snapshot(&self, t: f64) -> bool {
        self.snaps.iter().any(|&s| (s - t).abs() <= 1e-12 * t)
    }
}

/// Coefficients of the implicit step: `c0 u − L u = hist`.
fn time_weights(scheme: TimeScheme, dt: f64, dt_old: Option<f64>, h: &[f64], cur: &[f64], old: Option<&[f64]>) -> (f64, Vec<f64>) {
    match (scheme, dt_old, old) {
        (TimeScheme::Bdf2, Some(dto), Some(prev)) => {
            let r = dt / dto;
            let c0 = (1.0 + 2.0 * r) / ((1.0 + r) * dt);
            let rhs = (0..h.len())
                .map(|i| h[i] * ((1.0 + r) * cur[i] - r * r / (1.0 + r) * prev[i]) / dt)
                .collect();
            (c0, rhs)
        }
        _ => (1.0 / dt, (0..h.len()).map(|i| h[i] * cur[i] / dt).collect()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolicSample {
    pub t: f64,
    pub n_f: f64,
    /// Value imposed at `x = 0`.
    pub boundary_value: f64,
    /// `Φ(0, t)`; negative means mass leaves through the origin.
    pub origin_flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicRun {
    pub samples: Vec<ParabolicSample>,
    pub snapshots: Vec<DensityField>,
    pub last: DensityField,
}

fn moment_with_tail(grid: &RadialGrid, u: &[f64], tail: Option<&SelfSimilarProfile>, t: f64) -> f64 {
    let body: f64 = grid.centers().iter().zip(grid.widths()).zip(u).map(|((x, h), v)| x * h * v).sum();
    body + tail.map_or(0.0, |p| t.sqrt() * p.tail_moment(grid.x_max() / t))
}

/// Nonlocal problem with `a(t) = −β/(1 + n_f²)` and `f(0, t) = μ`.
pub fn solve_parabolic<P: Profile>(f0: &P, params: &ModelParams, cfg: &ParabolicRunConfig) -> Result<ParabolicRun, ParabolicError> {
    if !(cfg.t0 >= 1.0) {
        return Err(ParabolicError::StartTime(cfg.t0));
    }
    let profile = params.profile();
    let tail = cfg.tail_correction.then_some(&profile);
    let beta = params.beta();
    solve_mean_field(f0, params.mu(), |n| -beta / (1.0 + n * n), tail, cfg)
}

/// `∂t f = ∂x(∂x f + (1 + a(n_f) x) f)`, `f(0, t) = mu`, for any closure `a`.
/// `tail` adds the analytic self-similar tail beyond `x_max` to `n_f`
/// when `cfg.tail_correction` is set.
pub fn solve_mean_field<P: Profile, A: Fn(f64) -> f64>(
    f0: &P,
    mu: f64,
    coeff: A,
    tail: Option<&SelfSimilarProfile>,
    cfg: &ParabolicRunConfig,
) -> Result<ParabolicRun, ParabolicError> {
    cfg.validate()?;
    let found = f0.value(0.0);
    if (found - mu).abs() > 1e-8 * mu.abs().max(1e-300) {
        return Err(ParabolicError::BoundaryMismatch { found, expected: mu });
    }
    let tail = tail.filter(|_| cfg.tail_correction);
    let grid = &cfg.grid;
    let stepper = Stepper::new(grid, cfg.flux);

    let mut u: Vec<f64> = grid.centers().iter().map(|&x| f0.value(x)).collect();
    let mut clock = Clock { t: cfg.t0, t_end: cfg.t_end, fraction: cfg.step_fraction, dt_max: cfg.dt_max, snaps: sorted(&cfg.snapshots) };
    let mut n = moment_with_tail(grid, &u, tail, clock.t);
    let mut run = ParabolicRun {
        samples: alloc::vec![ParabolicSample { t: clock.t, n_f: n, boundary_value: mu, origin_flux: stepper.origin_flux(coeff(n), &u, mu) }],
        snapshots: Vec::new(),
        last: field(grid, &u, clock.t),
    };
    if clock.is_snapshot(clock.t) {
        run.snapshots.push(field(grid, &u, clock.t));
    }
    let mut prev: Option<(Vec<f64>, f64, f64)> = None; // (u, n, dt) of the previous step
    while clock.running() {
        let next = clock.next();
        let dt = next - clock.t;
        let (c0, hist) = time_weights(cfg.time, dt, prev.as_ref().map(|p| p.2), grid.widths(), &u, prev.as_ref().map(|p| p.0.as_slice()));
        let n_guess = match (&prev, cfg.time) {
            (Some((_, n_old, dt_old)), TimeScheme::Bdf2) => n + (n - n_old) * dt / dt_old,
            _ => n,
        };
        let fail = |t: f64, e: LinalgError, u: &[f64]| ParabolicError::Solve { t, source: e, last: Box::new(field(grid, u, t)) };
        let mut a = coeff(n_guess);
        let mut new = stepper.solve(a, c0, &hist, mu).map_err(|e| fail(clock.t, e, &u))?;
        let mut n_new = moment_with_tail(grid, &new, tail, next);
        if let Closure::Picard { tol, max_iter } = cfg.closure {
            for _ in 0..max_iter {
                a = coeff(n_new);
                new = stepper.solve(a, c0, &hist, mu).map_err(|e| fail(clock.t, e, &u))?;
                let n_next = moment_with_tail(grid, &new, tail, next);
                let change = (n_next - n_new).abs();
                n_new = n_next;
                if change < tol * n_new.abs().max(1.0) {
                    break;
                }
            }
        }
        if !n_new.is_finite() || new.iter().any(|v| !v.is_finite()) {
            return Err(ParabolicError::Blowup { t: next, last: Box::new(field(grid, &u, clock.t)) });
        }
        prev = Some((core::mem::replace(&mut u, new), n, dt));
        n = n_new;
        clock.t = next;
        run.samples.push(ParabolicSample { t: next, n_f: n, boundary_value: mu, origin_flux: stepper.origin_flux(a, &u, mu) });
        if clock.is_snapshot(next) {
            run.snapshots.push(field(grid, &u, next));
        }
    }
    run.last = field(grid, &u, clock.t);
    Ok(run)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s
}

fn field(grid: &RadialGrid, u: &[f64], t: f64) -> DensityField {
    DensityField::new(grid.clone(), u.to_vec(), Variables::Physical, t).expect("values match grid")
}

/// `S(t, t0) φ0`: coefficient `−β/n_s² + j(t)`, zero value at `x = 0`.
/// The mean-field closure in `cfg` is ignored (the problem is linear).
pub fn solve_frozen_s<P: Profile, J: Fn(f64) -> f64>(
    phi0: &P,
    j: J,
    params: &ModelParams,
    cfg: &ParabolicRunConfig,
) -> Result<Vec<DensityField>, ParabolicError> {
    cfg.validate()?;
    let grid = &cfg.grid;
    let stepper = Stepper::new(grid, cfg.flux);
    let decay = 1.0 - params.gamma();
    // β/n_s² = (1 − γ)/t
    let coeff = |t: f64| -decay / t + j(t);
    let mut u: Vec<f64> = grid.centers().iter().map(|&x| phi0.value(x)).collect();
    let mut clock = Clock { t: cfg.t0, t_end: cfg.t_end, fraction: cfg.step_fraction, dt_max: cfg.dt_max, snaps: sorted(&cfg.snapshots) };
    let mut out = Vec::new();
    if clock.is_snapshot(clock.t) {
        out.push(field(grid, &u, clock.t).into_signed());
    }
    let mut prev: Option<(Vec<f64>, f64)> = None;
    while clock.running() {
        let next = clock.next();
        let dt = next - clock.t;
        let (c0, hist) = time_weights(cfg.time, dt, prev.as_ref().map(|p| p.1), grid.widths(), &u, prev.as_ref().map(|p| p.0.as_slice()));
        let a = coeff(next);
        if !a.is_finite() {
            return Err(TransportError::NonFiniteCoefficient(next).into());
        }
        let new = stepper
            .solve(a, c0, &hist, 0.0)
            .map_err(|e| ParabolicError::Solve { t: clock.t, source: e, last: Box::new(field(grid, &u, clock.t)) })?;
        if new.iter().any(|v| !v.is_finite()) {
            return Err(ParabolicError::Blowup { t: next, last: Box::new(field(grid, &u, clock.t)) });
        }
        prev = Some((core::mem::replace(&mut u, new), dt));
        clock.t = next;
        if clock.is_snapshot(next) {
            out.push(field(grid, &u, next).into_signed());
        }
    }
    Ok(out)
}

/// Sign of the `c_s t^{-3/2}` amplitude in the boundary layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSign {
    /// `(μ − c_s t^{-3/2}) e^{-x}`: moment `n_bl`, and `g(0) = 0`.
    Minus,
    /// `(μ + c_s t^{-3/2}) e^{-x}`.
    Plus,
}

/// Boundary layer `f_bl = (μ ± c_s t^{-3/2}) e^{-x}` forced by `f(0,t) = μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryLayer {
    pub mu: f64,
    pub c_s: f64,
    pub beta: f64,
    pub n_s: f64,
    pub sign: LayerSign,
}

impl BoundaryLayer {
    pub fn new(params: &ModelParams) -> Self {
        let p = params.profile();
        Self { mu: params.mu(), c_s: p.c_s(), beta: params.beta(), n_s: p.n_s(), sign: LayerSign::Minus }
    }

    pub fn with_sign(mut self, sign: LayerSign) -> Self {
        self.sign = sign;
        self
    }

    fn signed_cs(&self) -> f64 {
        match self.sign {
            LayerSign::Minus => -self.c_s,
            LayerSign::Plus => self.c_s,
        }
    }

    /// Layer amplitude `c(t)`.
    pub fn amplitude(&self, t: f64) -> f64 {
        self.mu + self.signed_cs() * t.powf(-1.5)
    }

    /// `c′(t)`.
    pub fn amplitude_rate(&self, t: f64) -> f64 {
        -1.5 * self.signed_cs() * t.powf(-2.5)
    }

    pub fn f_bl(&self, x: f64, t: f64) -> f64 {
        self.amplitude(t) * (-x).exp()
    }

    /// `n_bl = μ − c_s t^{-3/2}`.
    pub fn n_bl(&self, t: f64) -> f64 {
        self.mu - self.c_s * t.powf(-1.5)
    }

    /// `n_bl > 0` for `t` above this.
    pub fn positivity_threshold(&self) -> f64 {
        (self.c_s / self.mu).powf(2.0 / 3.0)
    }

    /// `(βμ/2N_s²)(x²/t) e^{-x}`.
    pub fn refined(&self, x: f64, t: f64) -> f64 {
        self.beta * self.mu / (2.0 * self.n_s * self.n_s) * x * x / t * (-x).exp()
    }
}

/// `g = f − f_s − f_bl` for a physical field at time `t`.
pub fn subtract_layers(f: &DensityField, layer: &BoundaryLayer, profile: &SelfSimilarProfile, t: f64) -> DensityField {
    let scale = t.powf(-1.5);
    let values = f
        .grid()
        .centers()
        .iter()
        .zip(f.values())
        .map(|(&x, &v)| v - scale * profile.value(x / t) - layer.f_bl(x, t))
        .collect();
    DensityField::new(f.grid().clone(), values, Variables::Physical, t).expect("same grid").into_signed()
}

/// `R_bl = (β/n_s² − j) c(t) ∂x(x e^{-x}) + c′(t) e^{-x}`, the residual
/// `(∂t − L) f_bl` of the layer under the frozen operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerResidual {
    pub drift: f64,
    pub amplitude: f64,
    pub amplitude_rate: f64,
}

impl LayerResidual {
    pub fn at(&self, x: f64) -> f64 {
        let e = (-x).exp();
        self.drift * self.amplitude * (1.0 - x) * e + self.amplitude_rate * e
    }
}

pub fn compute_rbl(params: &ModelParams, layer: &BoundaryLayer, j: f64, t: f64) -> LayerResidual {
    let drift = (1.0 - params.gamma()) / t - j;
    LayerResidual { drift, amplitude: layer.amplitude(t), amplitude_rate: layer.amplitude_rate(t) }
}

/// `sup_{y ≤ y_max} |F − F_s − μ e^{3τ/2 − y e^τ}| / (e^{3τ/2 − y e^τ} + (1+γy)^{-θ})`.
pub fn weighted_profile_ratio(f: &DensityField, profile: &SelfSimilarProfile, mu: f64, y_max: f64) -> f64 {
    let t = f.time();
    let theta = profile.theta().unwrap_or(0.0);
    let lift = t.powf(1.5);
    let mut sup: f64 = 0.0;
    for (&x, &v) in f.grid().centers().iter().zip(f.values()) {
        let y = x / t;
        if y > y_max {
            break;
        }
        let layer = lift * (-x).exp();
        let num = (lift * v - profile.value(y) - mu * layer).abs();
        let den = layer + (1.0 + profile.gamma() * y).powf(-theta);
        sup = sup.max(num / den);
    }
    sup
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierRow {
    pub t: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierReport {
    pub rows: Vec<BarrierRow>,
    /// Least-squares slope of `ln ratio` against `ln t` over rows with `t > t0`.
    pub slope: f64,
}

/// Compares `S(t, t0) φ0` with `T(t, t0) φ0` against the barrier
/// `t^{-3/2} e^{-x/2} + t^{-λ}(1 + γx/t)^{-θ-2}` on `x ≤ y_max t`.
pub fn barrier_ratio<P: Profile, J: Fn(f64) -> f64 + Copy>(
    phi0: &P,
    j: J,
    params: &ModelParams,
    lambda: f64,
    y_max: f64,
    cfg: &ParabolicRunConfig,
) -> Result<BarrierReport, ParabolicError> {
    let gamma = params.gamma();
    let upper = 1.5 + 2.0 * gamma;
    if !(lambda >= 1.5 && lambda < upper) {
        return Err(ParabolicError::Lambda { lambda, upper });
    }
    let theta = params.profile().theta().unwrap_or(0.0);
    let times = sorted(&cfg.snapshots);
    let s = solve_frozen_s(phi0, j, params, cfg)?;
    let map = build_map(j, params, cfg.t0, &times)?;
    let mut rows = Vec::with_capacity(s.len());
    for snap in &s {
        let t = snap.time();
        let tphi = Pushforward { inner: phi0, map: map.at(t)? };
        let mut sup: f64 = 0.0;
        for (&x, &v) in snap.grid().centers().iter().zip(snap.values()) {
            if x > y_max * t {
                break;
            }
            let barrier = t.powf(-1.5) * (-0.5 * x).exp() + t.powf(-lambda) * (1.0 + gamma * x / t).powf(-theta - 2.0);
            sup = sup.max((v - tphi.value(x)).abs() / barrier);
        }
        rows.push(BarrierRow { t, ratio: sup });
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.t > cfg.t0 && r.ratio > 0.0).map(|r| (r.t.ln(), r.ratio.ln())).unzip();
    let slope = if lx.len() >= 2 { ls_slope(&lx, &ly) } else { 0.0 };
    Ok(BarrierReport { rows, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{AtTime, Exponential, Sum};
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams::new(3.0, 1.0, 0.25).unwrap()
    }

    #[test]
    fn bernoulli_limits() {
        assert_relative_eq!(bernoulli(0.0), 1.0);
        assert_relative_eq!(bernoulli(1.0), 1.0 / (1.0f64.exp() - 1.0), max_relative = 1e-14);
        assert_relative_eq!(bernoulli(-3.0) - bernoulli(3.0), 3.0, max_relative = 1e-13);
        assert_eq!(bernoulli(800.0), 0.0);
    }

    #[test]
    fn layer_values() {
        let l = BoundaryLayer::new(&params());
        assert_relative_eq!(l.n_bl(1.0), 0.75);
        assert_relative_eq!(l.positivity_threshold(), 0.25f64.powf(2.0 / 3.0));
        let plus = compute_rbl(&params(), &l.with_sign(LayerSign::Plus), 0.0, 1.0);
        assert_relative_eq!(plus.at(0.0), 0.5625, max_relative = 1e-14);
        let minus = compute_rbl(&params(), &l, 0.0, 1.0);
        assert_relative_eq!(minus.at(0.0), 0.9375, max_relative = 1e-14);
        assert!(minus.at(60.0).abs() < 1e-24);
    }

    #[test]
    fn subtract_layers_definitions() {
        let p = params();
        let prof = p.profile();
        let l = BoundaryLayer::new(&p);
        let t = 50.0;
        let grid = RadialGrid::geometric(0.05, 1.05, 1e4).unwrap();
        let f = DensityField::sample(grid.clone(), |x| t.powf(-1.5) * prof.value(x / t) + l.f_bl(x, t), Variables::Physical, t);
        let g = subtract_layers(&f, &l, &prof, t);
        assert!(g.max_abs() < 1e-15);
        let f = DensityField::sample(grid, |x| l.f_bl(x, t), Variables::Physical, t);
        let g = subtract_layers(&f, &l, &prof, t);
        for (x, v) in g.grid().centers().iter().zip(g.values()) {
            assert_relative_eq!(*v, -t.powf(-1.5) * prof.value(x / t), max_relative = 1e-12);
        }
        // The minus layer makes g vanish at the origin.
        let g0 = t.powf(-1.5) * prof.value(0.0) + l.f_bl(0.0, t) - t.powf(-1.5) * prof.value(0.0) - l.f_bl(0.0, t);
        assert_eq!(g0, 0.0);
        assert_relative_eq!(p.mu() - l.f_bl(0.0, t) - t.powf(-1.5) * prof.value(0.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_solution() {
        let p = params();
        let grid = RadialGrid::geometric(0.05, 1.05, 1e3).unwrap();
        let cfg = ParabolicRunConfig::new(grid.clone(), 1.0, 3.0);
        let s = solve_frozen_s(&crate::profile::Zero, |_| 0.0, &p, &ParabolicRunConfig { snapshots: alloc::vec![3.0], ..cfg }).unwrap();
        assert!(s[0].values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_boundary_mismatch_and_lambda() {
        let p = params();
        let grid = RadialGrid::geometric(0.05, 1.05, 1e3).unwrap();
        let cfg = ParabolicRunConfig::new(grid, 1.0, 2.0);
        let r = solve_parabolic(&Exponential { amplitude: 0.5, rate: 1.0 }, &p, &cfg);
        assert!(matches!(r, Err(ParabolicError::BoundaryMismatch { .. })));
        let r = barrier_ratio(&crate::profile::Zero, |_| 0.0, &p, 2.0, 10.0, &cfg);
        assert!(matches!(r, Err(ParabolicError::Lambda { .. })));
    }

    #[test]
    fn boundary_value_is_pinned() {
        let p = params();
        let prof = p.profile();
        let t0 = 100.0;
        let grid = RadialGrid::geometric(0.05, 1.03, default_x_max(2.0 * t0, 0.25)).unwrap();
        let f0 = Sum::new()
            .with(Exponential { amplitude: 1.0 - prof.c_s() * t0.powf(-1.5), rate: 1.0 })
            .with(AtTime { inner: prof, t: t0 });
        let mut cfg = ParabolicRunConfig::new(grid, t0, 2.0 * t0);
        cfg.tail_correction = true;
        let run = solve_parabolic(&f0, &p, &cfg).unwrap();
        assert!(run.samples.iter().all(|s| s.boundary_value == 1.0));
    }
}
