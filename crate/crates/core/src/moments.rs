//! Scalar mean-field quantities: `h`, `j`, `H`, `J`, the integral equation
//! for the moment perturbation `N_G`, and the linear `X–Y` system behind its decay.

use alloc::vec::Vec;
// Unused when std is linked (its inherent float methods take precedence).
#[allow(unused_imports)]
use num_traits::Float;

use crate::parabolic::BoundaryLayer;
use crate::params::{ModelParams, SelfSimilarProfile};
use crate::profile::Profile;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MomentError {
    #[error("nonpositive denominator at t = {t} (perturbation too negative)")]
    Denominator { t: f64 },
    #[error("non-finite value at tau = {0}")]
    NonFinite(f64),
    #[error("Picard iteration did not converge at tau = {tau} after {sweeps} sweeps")]
    Picard { tau: f64, sweeps: usize },
    #[error("step must lie in (0, 0.05], got {0}")]
    BadStep(f64),
    #[error("eta = {eta} outside (0, 1 - gamma)")]
    Eta { eta: f64 },
    #[error("|delta1| = {value} exceeds {bound} at tau = {tau}")]
    Hypothesis { tau: f64, value: f64, bound: f64 },
    #[error("t = {t} is below the layer positivity threshold {threshold}")]
    LayerThreshold { t: f64, threshold: f64 },
}

/// `h`: remainder of `1/(1 + n_f²)` after its linearisation about `n_s`,
/// with `n_f = n_s + n_g`.
pub fn eval_h_hyperbolic(n_g: f64, params: &ModelParams, t: f64) -> Result<f64, MomentError> {
    let n_s = params.profile().n_s() * t.sqrt();
    let q = 1.0 + 2.0 * n_g * n_s + n_g * n_g;
    let den = n_s.powi(4) * (1.0 + q / (n_s * n_s));
    if !(den > 0.0) {
        return Err(MomentError::Denominator { t });
    }
    Ok((1.0 + n_g * n_g - 2.0 * n_g / n_s * q) / den)
}

/// `H(N_G, τ) = t h(N_G t^{1/2}, t)`, evaluated in self-similar variables.
pub fn eval_big_h(big_n: f64, params: &ModelParams, tau: f64) -> Result<f64, MomentError> {
    let n_s = params.profile().n_s();
    let e = (-tau).exp();
    let q = e + 2.0 * big_n * n_s + big_n * big_n;
    let den = n_s.powi(4) * (1.0 + q / (n_s * n_s));
    if !(den > 0.0) {
        return Err(MomentError::Denominator { t: tau.exp() });
    }
    Ok((e + big_n * big_n - 2.0 * big_n / n_s * q) / den)
}

/// `j = 2β n_g/n_s³ + β h`.
pub fn eval_j(n_g: f64, params: &ModelParams, t: f64) -> Result<f64, MomentError> {
    let n_s = params.profile().n_s() * t.sqrt();
    Ok(2.0 * params.beta() * n_g / n_s.powi(3) + params.beta() * eval_h_hyperbolic(n_g, params, t)?)
}

/// `J = 2β N_G/N_s³ + β H`.
pub fn eval_big_j(big_n: f64, params: &ModelParams, tau: f64) -> Result<f64, MomentError> {
    let n_s = params.profile().n_s();
    Ok(2.0 * params.beta() * big_n / n_s.powi(3) + params.beta() * eval_big_h(big_n, params, tau)?)
}

/// Which cross term enters the parabolic `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParabolicH {
    /// `2 n_bl (n_g + n_s)`, which makes the expansion an identity.
    #[default]
    AsPrinted,
    /// `2 n_bl (n_g + 2 n_s)`.
    Alternative,
}

/// Parabolic `h` with `n_f = n_s + n_g + n_bl`.
pub fn eval_h_parabolic(n_g: f64, params: &ModelParams, t: f64, layer: &BoundaryLayer, variant: ParabolicH) -> Result<f64, MomentError> {
    let threshold = layer.positivity_threshold();
    if !(t > threshold) {
        return Err(MomentError::LayerThreshold { t, threshold });
    }
    let n_s = params.profile().n_s() * t.sqrt();
    let n_bl = layer.n_bl(t);
    let n_f = n_s + n_g + n_bl;
    let q = 1.0 + n_f * n_f - n_s * n_s;
    let cross = match variant {
        ParabolicH::AsPrinted => 2.0 * n_bl * (n_g + n_s),
        ParabolicH::Alternative => 2.0 * n_bl * (n_g + 2.0 * n_s),
    };
    let den = n_s.powi(4) * (1.0 + q / (n_s * n_s));
    if !(den > 0.0) {
        return Err(MomentError::Denominator { t });
    }
    Ok((1.0 + n_g * n_g + n_bl * n_bl + cross - 2.0 * n_g / n_s * q) / den)
}

/// Parabolic `j = 2β n_g/n_s³ + β h`.
pub fn eval_j_parabolic(n_g: f64, params: &ModelParams, t: f64, layer: &BoundaryLayer, variant: ParabolicH) -> Result<f64, MomentError> {
    let n_s = params.profile().n_s() * t.sqrt();
    Ok(2.0 * params.beta() * n_g / n_s.powi(3) + params.beta() * eval_h_parabolic(n_g, params, t, layer, variant)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceVariant {
    Hyperbolic,
    Parabolic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationRow {
    pub t: f64,
    pub n_g: f64,
    pub n_s: f64,
    /// Zero in the hyperbolic variant.
    pub n_bl: f64,
    pub h: f64,
    pub j: f64,
    pub big_n: f64,
    pub big_h: f64,
    pub big_j: f64,
}

/// `(n_g, h, j)` and their self-similar counterparts along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationTrace {
    pub variant: TraceVariant,
    pub rows: Vec<PerturbationRow>,
}

impl PerturbationTrace {
    /// From `(t, n_f)` samples of a transport run.
    pub fn hyperbolic(params: &ModelParams, samples: &[(f64, f64)]) -> Result<Self, MomentError> {
        let big_ns = params.profile().n_s();
        let mut rows = Vec::with_capacity(samples.len());
        for &(t, n_f) in samples {
            let n_s = big_ns * t.sqrt();
            let n_g = n_f - n_s;
            let big_n = n_g / t.sqrt();
            rows.push(PerturbationRow {
                t,
                n_g,
                n_s,
                n_bl: 0.0,
                h: eval_h_hyperbolic(n_g, params, t)?,
                j: eval_j(n_g, params, t)?,
                big_n,
                big_h: eval_big_h(big_n, params, t.ln())?,
                big_j: eval_big_j(big_n, params, t.ln())?,
            });
        }
        Ok(Self { variant: TraceVariant::Hyperbolic, rows })
    }

    /// From `(t, n_f)` samples of a parabolic run; `n_g = n_f − n_s − n_bl`.
    pub fn parabolic(params: &ModelParams, layer: &BoundaryLayer, variant: ParabolicH, samples: &[(f64, f64)]) -> Result<Self, MomentError> {
        let big_ns = params.profile().n_s();
        let mut rows = Vec::with_capacity(samples.len());
        for &(t, n_f) in samples {
            let n_s = big_ns * t.sqrt();
            let n_bl = layer.n_bl(t);
            let n_g = n_f - n_s - n_bl;
            let h = eval_h_parabolic(n_g, params, t, layer, variant)?;
            let j = eval_j_parabolic(n_g, params, t, layer, variant)?;
            rows.push(PerturbationRow { t, n_g, n_s, n_bl, h, j, big_n: n_g / t.sqrt(), big_h: t * h, big_j: t * j });
        }
        Ok(Self { variant: TraceVariant::Parabolic, rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolterraVariant {
    Hyperbolic,
    /// Parabolic `J`, the `∂x² f_s` forcing and the quasi-static layer
    /// correction, all propagated with the transport kernel.
    Parabolic { layer: BoundaryLayer, h: ParabolicH },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolterraConfig {
    pub tau0: f64,
    pub tau_end: f64,
    pub step: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    /// Drop every source that does not vanish with `N_G` (the `N_G`-free
    /// part of `βH` and the parabolic extras).
    pub unforced: bool,
}

impl VolterraConfig {
    pub fn new(tau0: f64, tau_end: f64) -> Self {
        Self { tau0, tau_end, step: 0.01, picard_tol: 1e-13, picard_max: 50, unforced: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolterraSample {
    pub tau: f64,
    pub big_n: f64,
    pub big_j: f64,
    /// Free propagation of the initial data.
    pub direct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolterraTrace {
    pub samples: Vec<VolterraSample>,
    /// `(ρ, Δ₁(τ_end, ρ))`: departure of the computed kernel from its `J ≡ 0` form.
    pub delta1: Vec<(f64, f64)>,
}

/// Self-similar maps `M′(τ, ρ)`, `M(τ, ρ)` on a uniform `τ` grid, built from
/// `𝒥 = ∫ J` and `E = ∫ e^{γ(σ−τ0) + 𝒥}` by the trapezoid rule.
struct MapTable {
    gamma: f64,
    tau0: f64,
    step: f64,
    cj: Vec<f64>,
    e: Vec<f64>,
}

impl MapTable {
    fn push(&mut self, j_prev: f64, j_new: f64) {
        let k = self.cj.len();
        let cj_prev = self.cj[k - 1];
        let cj = cj_prev + 0.5 * self.step * (j_prev + j_new);
        let g = |i: usize, c: f64| (self.gamma * self.step * i as f64 + c).exp();
        let e = self.e[k - 1] + 0.5 * self.step * (g(k - 1, cj_prev) + g(k, cj));
        self.cj.push(cj);
        self.e.push(e);
    }

    fn pop(&mut self) {
        self.cj.pop();
        self.e.pop();
    }

    fn slope(&self, k: usize, i: usize) -> f64 {
        (self.gamma * self.step * (k - i) as f64 + self.cj[k] - self.cj[i]).exp()
    }

    fn shift(&self, k: usize, i: usize) -> f64 {
        (-self.gamma * self.step * i as f64 - self.cj[i]).exp() * (self.e[k] - self.e[i])
    }

    fn tau(&self, k: usize) -> f64 {
        self.tau0 + self.step * k as f64
    }
}

/// `−e^{(τ−ρ)/2} I₁(M)/M′`: moment of the self-similar push-forward of `∂y(y F_s)`.
fn kernel(profile: &SelfSimilarProfile, table: &MapTable, k: usize, i: usize) -> f64 {
    let s = table.step * (k - i) as f64;
    -(0.5 * s).exp() * profile.tail_moment(table.shift(k, i)) / table.slope(k, i)
}

/// Solves `N_G(τ) = D(τ) + ∫_{τ0}^τ J(ρ) κ(τ, ρ) dρ (+ parabolic forcing)` where
/// `D` is the first moment of the freely transported initial data `initial`
/// (self-similar variables) and `κ` is the kernel of the map generated by `J` itself.
pub fn solve_ng_volterra<P: Profile>(
    variant: VolterraVariant,
    params: &ModelParams,
    initial: &P,
    cfg: &VolterraConfig,
) -> Result<VolterraTrace, MomentError> {
    if !(cfg.step > 0.0 && cfg.step <= 0.05) {
        return Err(MomentError::BadStep(cfg.step));
    }
    let profile = params.profile();
    let gamma = params.gamma();
    let n3 = profile.n_s().powi(3);
    let beta = params.beta();
    let steps = ((cfg.tau_end - cfg.tau0) / cfg.step).round().max(0.0) as usize;
    let big_j = |n: f64, tau: f64| -> Result<f64, MomentError> {
        if cfg.unforced {
            let zero = eval_big_j(0.0, params, tau)?;
            return Ok(eval_big_j(n, params, tau)? - zero);
        }
        match variant {
            VolterraVariant::Hyperbolic => eval_big_j(n, params, tau),
            VolterraVariant::Parabolic { layer, h } => {
                let t = tau.exp();
                Ok(t * eval_j_parabolic(n * t.sqrt(), params, t, &layer, h)?)
            }
        }
    };
    // Local-in-time parabolic extras: the ∂x² f_s forcing is accumulated
    // below; the layer's refined term contributes 3βμ/(N_s² t) to n_g.
    let layer_term = |tau: f64| match variant {
        _ if cfg.unforced => 0.0,
        VolterraVariant::Hyperbolic => 0.0,
        VolterraVariant::Parabolic { layer, .. } => 3.0 * beta * layer.mu / (profile.n_s().powi(2)) * (-1.5 * tau).exp(),
    };
    let mut table = MapTable { gamma, tau0: cfg.tau0, step: cfg.step, cj: alloc::vec![0.0], e: alloc::vec![0.0] };
    let direct = |table: &MapTable, k: usize| {
        let s = table.step * k as f64;
        (0.5 * s).exp() * initial.nu(table.shift(k, 0)) / table.slope(k, 0)
    };
    let diffusion = |table: &MapTable, k: usize| -> f64 {
        if k == 0 {
            return 0.0;
        }
        let tau = table.tau(k);
        let mut acc = 0.0;
        for i in 0..=k {
            let w = if i == 0 || i == k { 0.5 } else { 1.0 };
            acc += w * (-1.5 * table.tau(i)).exp() * profile.value(table.shift(k, i)) / table.slope(k, i);
        }
        (0.5 * tau).exp() * acc * table.step
    };
    let parabolic = matches!(variant, VolterraVariant::Parabolic { .. }) && !cfg.unforced;

    let d0 = direct(&table, 0);
    let n0 = d0 + layer_term(cfg.tau0);
    let mut ns = alloc::vec![n0];
    let mut js = alloc::vec![big_j(n0, cfg.tau0)?];
    let mut samples = alloc::vec![VolterraSample { tau: cfg.tau0, big_n: n0, big_j: js[0], direct: d0 }];
    for k in 1..=steps {
        let tau = table.tau(k);
        let mut n = ns[k - 1];
        if k >= 2 {
            n = 2.0 * ns[k - 1] - ns[k - 2];
        }
        let mut converged = false;
        let mut d = 0.0;
        for _ in 0..cfg.picard_max {
            let j = big_j(n, tau)?;
            table.push(js[k - 1], j);
            d = direct(&table, k);
            let mut conv = 0.5 * js[0] * kernel(&profile, &table, k, 0) + 0.5 * j * kernel(&profile, &table, k, k);
            for (i, &ji) in js.iter().enumerate().take(k).skip(1) {
                conv += ji * kernel(&profile, &table, k, i);
            }
            let mut next = d + cfg.step * conv;
            if parabolic {
                next += diffusion(&table, k) + layer_term(tau);
            }
            table.pop();
            if !next.is_finite() {
                return Err(MomentError::NonFinite(tau));
            }
            let change = (next - n).abs();
            n = next;
            if change <= cfg.picard_tol * n.abs().max(1e-3) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(MomentError::Picard { tau, sweeps: cfg.picard_max });
        }
        let j = big_j(n, tau)?;
        table.push(js[k - 1], j);
        ns.push(n);
        js.push(j);
        samples.push(VolterraSample { tau, big_n: n, big_j: j, direct: d });
    }
    let k = steps;
    let lead = -(1.0 - gamma) / gamma;
    let delta1 = (0..=k)
        .map(|i| {
            let kap = 2.0 * beta / n3 * kernel(&profile, &table, k, i);
            let s = cfg.step * (k - i) as f64;
            (table.tau(i), kap / lead - 1.0 + (1.0 - 2.0 * gamma) * (-gamma * s).exp())
        })
        .collect();
    Ok(VolterraTrace { samples, delta1 })
}

/// `[[−a, b], [−a, b − γ]]` with `a = (1−γ)/γ`, `b = (1−γ)(1−2γ)/γ`.
pub fn xy_matrix(gamma: f64) -> [[f64; 2]; 2] {
    let a = (1.0 - gamma) / gamma;
    let b = a * (1.0 - 2.0 * gamma);
    [[-a, b], [-a, b - gamma]]
}

/// Eigenpairs of [`xy_matrix`]: `−(1−γ)` with `(1−2γ, 1−γ)` and `−1` with `(1−γ, 1)`.
pub fn xy_eigenpairs(gamma: f64) -> [(f64, [f64; 2]); 2] {
    [(-(1.0 - gamma), [1.0 - 2.0 * gamma, 1.0 - gamma]), (-1.0, [1.0 - gamma, 1.0])]
}

/// Largest `|Δ₁|` for which the X–Y decay estimate holds.
pub fn delta1_bound(gamma: f64, eta: f64) -> f64 {
    gamma.powi(3) * (1.0 - gamma - eta) / 16.0
}

/// Forcing functions of `τ` for [`integrate_xy_system`].
pub struct XyForcing<'a> {
    pub delta1: &'a dyn Fn(f64) -> f64,
    pub delta2: &'a dyn Fn(f64) -> f64,
    pub h: &'a dyn Fn(f64) -> f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyConfig {
    pub gamma: f64,
    pub eta: f64,
    pub tau0: f64,
    pub tau_end: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct XyTrace {
    pub tau: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub n: Vec<f64>,
}

/// Classical RK4 from `X = Y = 0`; `N = −aX + bY + Δ₂`.
pub fn integrate_xy_system(forcing: &XyForcing<'_>, cfg: &XyConfig) -> Result<XyTrace, MomentError> {
    let gamma = cfg.gamma;
    if !(cfg.eta > 0.0 && cfg.eta < 1.0 - gamma) {
        return Err(MomentError::Eta { eta: cfg.eta });
    }
    if !(cfg.step > 0.0) {
        return Err(MomentError::BadStep(cfg.step));
    }
    let bound = delta1_bound(gamma, cfg.eta);
    let m = xy_matrix(gamma);
    let a = (1.0 - gamma) / gamma;
    let b = a * (1.0 - 2.0 * gamma);
    let rhs = |tau: f64, x: f64, y: f64| -> Result<(f64, f64), MomentError> {
        let d1 = (forcing.delta1)(tau);
        if !(d1.abs() <= bound) {
            return Err(MomentError::Hypothesis { tau, value: d1.abs(), bound });
        }
        let src = (forcing.delta2)(tau) + (forcing.h)(tau);
        let fx = src * (1.0 + d1) - a * d1 * (x - (1.0 - 2.0 * gamma) * y);
        Ok((m[0][0] * x + m[0][1] * y + fx, m[1][0] * x + m[1][1] * y + src))
    };
    let steps = ((cfg.tau_end - cfg.tau0) / cfg.step).ceil().max(0.0) as usize;
    let h = (cfg.tau_end - cfg.tau0) / steps.max(1) as f64;
    let mut out = XyTrace::default();
    let (mut x, mut y) = (0.0, 0.0);
    for k in 0..=steps {
        let tau = cfg.tau0 + h * k as f64;
        out.tau.push(tau);
        out.x.push(x);
        out.y.push(y);
        out.n.push(-a * x + b * y + (forcing.delta2)(tau));
        if k == steps {
            break;
        }
        let (k1x, k1y) = rhs(tau, x, y)?;
        let (k2x, k2y) = rhs(tau + 0.5 * h, x + 0.5 * h * k1x, y + 0.5 * h * k1y)?;
        let (k3x, k3y) = rhs(tau + 0.5 * h, x + 0.5 * h * k2x, y + 0.5 * h * k2y)?;
        let (k4x, k4y) = rhs(tau + h, x + h * k3x, y + h * k3y)?;
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        if !(x.is_finite() && y.is_finite()) {
            return Err(MomentError::NonFinite(tau + h));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Zero;
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams::new(3.0, 1.0, 0.25).unwrap()
    }

    #[test]
    fn trivial_values() {
        let p = params();
        assert_relative_eq!(eval_big_h(0.0, &p, 0.0).unwrap(), 0.05, max_relative = 1e-14);
        assert_relative_eq!(eval_h_hyperbolic(0.0, &p, 1.0).unwrap(), 0.05, max_relative = 1e-14);
        assert_relative_eq!(eval_j(0.0, &p, 1.0).unwrap(), 0.15, max_relative = 1e-14);
        assert!(eval_big_h(0.0, &p, 60.0).unwrap().abs() < 1e-27);
        let expected = 2.0 * 3.0 * 0.1 / 8.0 + 3.0 * eval_big_h(0.1, &p, 5.0).unwrap();
        assert_relative_eq!(eval_big_j(0.1, &p, 5.0).unwrap(), expected, max_relative = 1e-15);
    }

    #[test]
    fn parabolic_reduces_without_layer() {
        let p = params();
        let layer = BoundaryLayer { mu: 1e-300, c_s: 0.0, beta: 3.0, n_s: 2.0, sign: crate::parabolic::LayerSign::Minus };
        for t in [2.0, 30.0, 400.0] {
            for n in [-0.3, 0.0, 0.7] {
                assert_relative_eq!(
                    eval_h_parabolic(n, &p, t, &layer, ParabolicH::AsPrinted).unwrap(),
                    eval_h_hyperbolic(n, &p, t).unwrap(),
                    max_relative = 1e-13
                );
            }
        }
    }

    #[test]
    fn layer_threshold_enforced() {
        let p = params();
        let layer = BoundaryLayer::new(&p);
        let r = eval_h_parabolic(0.0, &p, 0.1, &layer, ParabolicH::AsPrinted);
        assert!(matches!(r, Err(MomentError::LayerThreshold { .. })));
    }

    #[test]
    fn matrix_eigenpairs() {
        for gamma in [0.1, 0.25, 0.4] {
            let m = xy_matrix(gamma);
            for (lam, v) in xy_eigenpairs(gamma) {
                for r in 0..2 {
                    let mv = m[r][0] * v[0] + m[r][1] * v[1];
                    assert!((mv - lam * v[r]).abs() < 1e-12);
                }
            }
        }
        let m = xy_matrix(0.25);
        assert_eq!(m, [[-3.0, 1.5], [-3.0, 1.25]]);
    }

    #[test]
    fn zero_forcing_zero_solution() {
        let z = |_: f64| 0.0;
        let f = XyForcing { delta1: &z, delta2: &z, h: &z };
        let cfg = XyConfig { gamma: 0.25, eta: 0.2, tau0: 1.0, tau_end: 10.0, step: 0.01 };
        let tr = integrate_xy_system(&f, &cfg).unwrap();
        assert!(tr.n.iter().chain(&tr.x).chain(&tr.y).all(|&v| v == 0.0));
    }

    #[test]
    fn hypothesis_gate_rejects() {
        let z = |_: f64| 0.0;
        let big = |_: f64| 0.01;
        let f = XyForcing { delta1: &big, delta2: &z, h: &z };
        let cfg = XyConfig { gamma: 0.25, eta: 0.2, tau0: 1.0, tau_end: 2.0, step: 0.01 };
        assert!(matches!(integrate_xy_system(&f, &cfg), Err(MomentError::Hypothesis { .. })));
        let cfg = XyConfig { eta: 0.8, ..cfg };
        assert!(matches!(integrate_xy_system(&f, &cfg), Err(MomentError::Eta { .. })));
    }

    #[test]
    fn volterra_zero_data() {
        let p = params();
        let mut cfg = VolterraConfig::new(100f64.ln(), 100f64.ln() + 0.5);
        cfg.step = 0.05;
        cfg.unforced = true;
        let tr = solve_ng_volterra(VolterraVariant::Hyperbolic, &p, &Zero, &cfg).unwrap();
        assert!(tr.samples.iter().all(|s| s.big_n == 0.0 && s.direct == 0.0));
        // The N_G-free part βe^{-τ}/(N_s⁴ + N_s² e^{-τ}) of J drives N_G
        // negative at rate about −N_s·J.
        cfg.unforced = false;
        let tr = solve_ng_volterra(VolterraVariant::Hyperbolic, &p, &Zero, &cfg).unwrap();
        let j0 = eval_big_j(0.0, &p, cfg.tau0).unwrap();
        let last = tr.samples.last().unwrap();
        assert!(last.big_n < 0.0 && last.big_n > -0.5 * 2.0 * j0 * 1.01, "{}", last.big_n);
    }
}
