//! The unreduced pore model: a Smoluchowski equation in the pore radius `r`
//! with a formation/closure source on small radii, coupled to the
//! transmembrane potential through the total pore radius `∫ r n dr`.
//!
//! Units have `k_B T = 1`.

use alloc::vec::Vec;
// Unused when std is linked (its inherent float methods take precedence).
#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::{DensityField, GridError, RadialGrid, Variables};
use crate::interp::MonotoneCubic;
use crate::linalg::{self, LinalgError};
use crate::parabolic::{bernoulli, solve_mean_field, ParabolicError, ParabolicRunConfig};
use crate::profile::Exponential;
use crate::quad;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FullModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    Param { name: &'static str, value: f64, reason: &'static str },
    #[error("scale separation r+/r0 = {0} is below 5")]
    ScaleSeparation(f64),
    #[error("step failed at t = {t}; retry with dt <= {suggested_dt}")]
    Stiff { t: f64, suggested_dt: f64 },
    #[error("initial data has {got} values for {cells} cells")]
    InitialLength { got: usize, cells: usize },
    #[error("initial data must be nonnegative")]
    Negative,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Reduced(#[from] ParabolicError),
}

/// Piecewise-constant external voltage: `value` from `start` on.
#[derive(Debug, Clone, PartialEq)]
pub struct Voltage {
    pieces: Vec<(f64, f64)>,
}

impl Voltage {
    pub fn constant(v: f64) -> Self {
        Self { pieces: alloc::vec![(f64::NEG_INFINITY, v)] }
    }

    /// `(start, value)` pairs; sorted by start.
    pub fn piecewise(mut pieces: Vec<(f64, f64)>) -> Self {
        pieces.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Self { pieces }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.pieces.iter().rev().find(|p| p.0 <= t).or(self.pieces.first()).map_or(0.0, |p| p.1)
    }
}

/// `W_pore`: a C¹ piecewise cubic rising to the barrier `E*` at `r*`,
/// falling to `E0` at `r0`, then linear with slope `2πσ_l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoreEnergy {
    pub e_star: f64,
    pub e0: f64,
    pub r_star: f64,
    pub r0: f64,
    pub sigma_l: f64,
}

impl PoreEnergy {
    fn slope_out(&self) -> f64 {
        2.0 * core::f64::consts::PI * self.sigma_l
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.r_star {
            let s = r / self.r_star;
            self.e_star * s * s * (3.0 - 2.0 * s)
        } else if r <= self.r0 {
            let h = self.r0 - self.r_star;
            let s = (r - self.r_star) / h;
            let (s2, s3) = (s * s, s * s * s);
            (2.0 * s3 - 3.0 * s2 + 1.0) * self.e_star + (-2.0 * s3 + 3.0 * s2) * self.e0 + (s3 - s2) * h * self.slope_out()
        } else {
            self.e0 + self.slope_out() * (r - self.r0)
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if r <= self.r_star {
            let s = r / self.r_star;
            6.0 * self.e_star * s * (1.0 - s) / self.r_star
        } else if r <= self.r0 {
            let h = self.r0 - self.r_star;
            let s = (r - self.r_star) / h;
            let s2 = s * s;
            ((6.0 * s2 - 6.0 * s) * (self.e_star - self.e0)) / h + (3.0 * s2 - 2.0 * s) * self.slope_out()
        } else {
            self.slope_out()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullModelParams {
    pub d: f64,
    pub a0: f64,
    pub sigma_l: f64,
    pub sigma_c: f64,
    pub s_m: f64,
    pub c_m: f64,
    pub c_tilde: f64,
    pub l: f64,
    pub v_ext: Voltage,
    pub e_star: f64,
    pub e0: f64,
    pub r_star: f64,
    pub r0: f64,
    /// Amplitude `c` of `s(r) = c (1 − (r/r*)²)²`.
    pub source: f64,
}

impl FullModelParams {
    /// `r+/r0 = 10`, `β_eff ≈ 3` at `V_ext = 1`.
    pub fn reference() -> Self {
        Self {
            d: 1.0,
            a0: 1.0,
            sigma_l: 1.0 / (20.0 * core::f64::consts::PI),
            sigma_c: 1.0,
            s_m: 0.0,
            c_m: 1.0,
            c_tilde: 0.025,
            l: 1.0,
            v_ext: Voltage::constant(1.0),
            e_star: 2.0,
            e0: 1.0,
            r_star: 0.5,
            r0: 1.0,
            source: 4.0,
        }
    }

    pub fn validate(&self) -> Result<(), FullModelError> {
        let positive = [
            ("d", self.d),
            ("a0", self.a0),
            ("sigma_l", self.sigma_l),
            ("sigma_c", self.sigma_c),
            ("l", self.l),
            ("r_star", self.r_star),
            ("source", self.source),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(FullModelError::Param { name, value, reason: "must be positive" });
            }
        }
        let nonneg = [("s_m", self.s_m), ("c_m", self.c_m), ("c_tilde", self.c_tilde)];
        for (name, value) in nonneg {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(FullModelError::Param { name, value, reason: "must be nonnegative" });
            }
        }
        if !(self.r0 > self.r_star) {
            return Err(FullModelError::Param { name: "r0", value: self.r0, reason: "must exceed r_star" });
        }
        if !(self.e0 < self.e_star) {
            return Err(FullModelError::Param { name: "e0", value: self.e0, reason: "must be below e_star" });
        }
        if !(self.rplus() > self.r0) {
            return Err(FullModelError::Param { name: "sigma_l", value: self.sigma_l, reason: "needs r+ > r0" });
        }
        Ok(())
    }

    pub fn energy(&self) -> PoreEnergy {
        PoreEnergy { e_star: self.e_star, e0: self.e0, r_star: self.r_star, r0: self.r0, sigma_l: self.sigma_l }
    }

    /// `r+ = 1/(2πσ_l)`.
    pub fn rplus(&self) -> f64 {
        1.0 / (2.0 * core::f64::consts::PI * self.sigma_l)
    }

    /// `T* = e^{E*}/D`.
    pub fn t_star(&self) -> f64 {
        self.e_star.exp() / self.d
    }

    pub fn source_rate(&self, r: f64) -> f64 {
        if r >= self.r_star {
            return 0.0;
        }
        let s = r / self.r_star;
        self.source * (1.0 - s * s) * (1.0 - s * s)
    }

    /// `a1 = 2 L r0² ∫_0^1 y a0 e^{-W_pore(y r0)} dy`.
    pub fn a1(&self) -> f64 {
        let w = self.energy();
        let r0 = self.r0;
        let inner = quad::integrate(|y| y * self.a0 * (-w.value(y * r0)).exp(), 0.0, self.r_star / r0, 1e-14).value
            + quad::integrate(|y| y * self.a0 * (-w.value(y * r0)).exp(), self.r_star / r0, 1.0, 1e-14).value;
        2.0 * self.l * r0 * r0 * inner
    }

    /// `L S_m/σ_c + 1 + a1`.
    pub fn conductance_factor(&self) -> f64 {
        self.l * self.s_m / self.sigma_c + 1.0 + self.a1()
    }

    /// `β = 2 r+² C̃ / (L S_m/σ_c + 1 + a1)²` (per unit `V_ext²`).
    pub fn beta_eff(&self) -> f64 {
        let lam = self.conductance_factor();
        2.0 * self.rplus().powi(2) * self.c_tilde / (lam * lam)
    }

    /// Scale `2 L r+² / (L S_m/σ_c + 1 + a1)` between `n` and `f`.
    pub fn density_scale(&self) -> f64 {
        2.0 * self.l * self.rplus().powi(2) / self.conductance_factor()
    }

    /// `μ = 2 L r+² a0 e^{-E0} / (L S_m/σ_c + 1 + a1)`.
    pub fn mu_eff(&self) -> f64 {
        self.density_scale() * self.a0 * (-self.e0).exp()
    }

    /// Diffusive time across the interior, `r0²/D`.
    pub fn interior_time(&self) -> f64 {
        self.r0 * self.r0 / self.d
    }

    /// `r+²/D`, the unit of the reduced time.
    pub fn exterior_time(&self) -> f64 {
        self.rplus().powi(2) / self.d
    }

    /// `V_m` with `C_m = 0`: `V_ext / (L S_m/σ_c + 1 + 2L ∫ r n)`.
    pub fn quasi_static_vm(&self, v_ext: f64, radius_moment: f64) -> f64 {
        v_ext / (self.l * self.s_m / self.sigma_c + 1.0 + 2.0 * self.l * radius_moment)
    }

    /// Detailed-balance density `a0 e^{-W_pore}`.
    pub fn equilibrium(&self, r: f64) -> f64 {
        self.a0 * (-self.energy().value(r)).exp()
    }
}

/// Fine uniform cells over the interior, geometric growth outside to `r0 + span·r+`.
pub fn full_model_grid(params: &FullModelParams, interior_cells: usize, span: f64) -> Result<RadialGrid, GridError> {
    let h = params.r0 / interior_cells as f64;
    let mut edges: Vec<f64> = (0..=interior_cells).map(|i| h * i as f64).collect();
    let r_max = params.r0 + span * params.rplus();
    let mut w = h;
    let cap = 0.05 * params.rplus();
    while *edges.last().unwrap() < r_max {
        w = (w * 1.02).min(cap);
        let next = edges.last().unwrap() + w;
        edges.push(next.min(r_max));
    }
    RadialGrid::from_edges(edges)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullRunConfig {
    pub grid: RadialGrid,
    pub dt: f64,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullRun {
    pub snapshots: Vec<DensityField>,
    /// `(t, V_m)` after every step.
    pub vm: Vec<(f64, f64)>,
    /// Largest `|Φ|` over faces after every step.
    pub max_flux: Vec<f64>,
    pub last: DensityField,
}

/// Face fluxes `Φ = −D (∂r n + ∂r W n)` (Scharfetter–Gummel in the potential), zero at both ends.
pub fn face_fluxes(params: &FullModelParams, grid: &RadialGrid, n: &[f64], vm: f64) -> Vec<f64> {
    let w = potential(params, grid, vm);
    let c = grid.centers();
    let mut out = alloc::vec![0.0; c.len() + 1];
    for i in 1..c.len() {
        let d = c[i] - c[i - 1];
        let dw = w[i] - w[i - 1];
        out[i] = -params.d / d * (bernoulli(-dw) * n[i] - bernoulli(dw) * n[i - 1]);
    }
    out
}

fn potential(params: &FullModelParams, grid: &RadialGrid, vm: f64) -> Vec<f64> {
    let e = params.energy();
    grid.centers().iter().map(|&r| e.value(r) - params.c_tilde * r * r * vm * vm).collect()
}

fn radius_moment(grid: &RadialGrid, n: &[f64]) -> f64 {
    grid.centers().iter().zip(grid.widths()).zip(n).map(|((r, h), v)| r * h * v).sum()
}

/// Split steps: implicit drift–diffusion with the current `V_m`, exact
/// relaxation of the source, then implicit `V_m` with the new `∫ r n`.
pub fn solve_full_model(params: &FullModelParams, n_init: &[f64], vm_init: f64, cfg: &FullRunConfig) -> Result<FullRun, FullModelError> {
    params.validate()?;
    let grid = &cfg.grid;
    let cells = grid.cells();
    if n_init.len() != cells {
        return Err(FullModelError::InitialLength { got: n_init.len(), cells });
    }
    if n_init.iter().any(|&v| !(v >= 0.0)) {
        return Err(FullModelError::Negative);
    }
    let c = grid.centers();
    let h = grid.widths();
    let eq: Vec<f64> = c.iter().map(|&r| params.equilibrium(r)).collect();
    let decay: Vec<f64> = c.iter().map(|&r| (-params.source_rate(r) * cfg.dt).exp()).collect();
    let field = |u: &[f64], t: f64| DensityField::new(grid.clone(), u.to_vec(), Variables::Physical, t).map_err(FullModelError::from);

    let mut n = n_init.to_vec();
    let mut vm = vm_init;
    let mut t = 0.0;
    let mut run = FullRun { snapshots: Vec::new(), vm: alloc::vec![(0.0, vm)], max_flux: Vec::new(), last: field(&n, 0.0)? };
    let mut snaps = cfg.snapshots.clone();
    snaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if snaps.first() == Some(&0.0) {
        run.snapshots.push(field(&n, 0.0)?);
    }
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    for k in 1..=steps {
        let w = potential(params, grid, vm);
        let mut lower = alloc::vec![0.0; cells];
        let mut diag: Vec<f64> = h.iter().map(|hi| hi / cfg.dt).collect();
        let mut upper = alloc::vec![0.0; cells];
        for i in 1..cells {
            let d = c[i] - c[i - 1];
            let dw = w[i] - w[i - 1];
            // Φ_i = −(D/d)(B(−ΔW) n_i − B(ΔW) n_{i−1}) enters cell i−1 with +, cell i with −.
            let kr = params.d / d * bernoulli(-dw);
            let kl = params.d / d * bernoulli(dw);
            diag[i - 1] += kl;
            upper[i - 1] -= kr;
            diag[i] += kr;
            lower[i] -= kl;
        }
        let rhs: Vec<f64> = h.iter().zip(&n).map(|(hi, v)| hi * v / cfg.dt).collect();
        let stiff = FullModelError::Stiff { t, suggested_dt: 0.25 * cfg.dt };
        let mut next = linalg::solve_tridiagonal(&lower, &diag, &upper, &rhs).map_err(|_| stiff.clone())?;
        for i in 0..cells {
            next[i] = eq[i] + (next[i] - eq[i]) * decay[i];
        }
        if next.iter().any(|v| !v.is_finite() || *v < -1e-12 * eq[0]) {
            return Err(stiff);
        }
        n = next;
        t = cfg.dt * k as f64;
        let moment = radius_moment(grid, &n);
        let v_ext = params.v_ext.at(t);
        vm = (params.c_m * vm / cfg.dt + params.sigma_c * v_ext / params.l)
            / (params.c_m / cfg.dt + params.s_m + 2.0 * params.sigma_c * moment + params.sigma_c / params.l);
        run.vm.push((t, vm));
        let flux = face_fluxes(params, grid, &n, vm);
        run.max_flux.push(flux.iter().fold(0.0, |m: f64, f| m.max(f.abs())));
        if snaps.iter().any(|&s| (s - t).abs() <= 0.5 * cfg.dt) {
            run.snapshots.push(field(&n, t)?);
        }
    }
    run.last = field(&n, t)?;
    Ok(run)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionConfig {
    pub interior_cells: usize,
    /// Grid reach beyond `r0`, in units of `r+`.
    pub span: f64,
    pub dt: f64,
    /// Run length in units of the interior time `r0²/D`.
    pub interior_times: f64,
    /// Reduced time `s = D t/r+²` at which exterior profiles are compared.
    pub reduced_end: f64,
    /// Relative interior perturbation `n = a0 e^{-W}(1 + p sin²(π r/r*))` on `r < r*`.
    pub perturbation: f64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self { interior_cells: 100, span: 40.0, dt: 0.01, interior_times: 3.0, reduced_end: 0.5, perturbation: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub beta_eff: f64,
    pub mu_eff: f64,
    pub a1: f64,
    /// `max_{r ≤ r0} |n − a0 e^{-W_pore}| / a0 e^{-W_pore}` after `interior_times`.
    pub interior_error: f64,
    /// Same quantity at the start.
    pub interior_error_initial: f64,
    /// Relative L1 gap on `x ∈ [0, 10]` between the rescaled exterior density and the reduced problem.
    pub exterior_profile_error: f64,
    pub interior_time: f64,
    pub exterior_time: f64,
    pub vm: Vec<(f64, f64)>,
    pub full_profile: DensityField,
    pub reduced_profile: DensityField,
}

fn interior_error(params: &FullModelParams, field: &DensityField) -> f64 {
    field
        .grid()
        .centers()
        .iter()
        .zip(field.values())
        .take_while(|(r, _)| **r <= params.r0)
        .map(|(&r, &v)| (v / params.equilibrium(r) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Runs the full model from a perturbed equilibrium and the reduced
/// mean-field problem from `μ e^{-x}` side by side.
pub fn reduction_report(params: &FullModelParams, cfg: &ReductionConfig) -> Result<ReductionReport, FullModelError> {
    params.validate()?;
    let sep = params.rplus() / params.r0;
    if sep < 5.0 {
        return Err(FullModelError::ScaleSeparation(sep));
    }
    let grid = full_model_grid(params, cfg.interior_cells, cfg.span)?;
    let n0: Vec<f64> = grid
        .centers()
        .iter()
        .map(|&r| {
            let bump = if r < params.r_star { (core::f64::consts::PI * r / params.r_star).sin().powi(2) } else { 0.0 };
            params.equilibrium(r) * (1.0 + cfg.perturbation * bump)
        })
        .collect();
    let t_interior = cfg.interior_times * params.interior_time();
    let t_end = (cfg.reduced_end * params.exterior_time()).max(t_interior);
    let vm0 = params.quasi_static_vm(params.v_ext.at(0.0), radius_moment(&grid, &n0));
    let run_cfg = FullRunConfig { grid: grid.clone(), dt: cfg.dt, t_end, snapshots: alloc::vec![0.0, t_interior] };
    let run = solve_full_model(params, &n0, vm0, &run_cfg)?;
    let at_interior = run.snapshots.iter().find(|s| (s.time() - t_interior).abs() <= cfg.dt).unwrap_or(&run.last);

    // Reduced problem on x = (r − r0)/r+, s = D t/r+²; β per unit V_ext².
    let beta = params.beta_eff();
    let mu = params.mu_eff();
    let xgrid = RadialGrid::geometric(0.01, 1.02, cfg.span)?;
    let s0 = cfg.dt / params.exterior_time();
    let mut rc = ParabolicRunConfig::new(xgrid.clone(), s0, cfg.reduced_end);
    rc.dt_max = 0.002;
    rc.step_fraction = 0.05;
    let f0 = Exponential { amplitude: mu, rate: 1.0 };
    // The comparison uses the voltage at the start of the run.
    let v2 = params.v_ext.at(0.0).powi(2);
    let reduced = solve_mean_field(&f0, mu, |n| -beta * v2 / (1.0 + n * n), None, &rc)?;

    let k = params.density_scale();
    let (xs, ys): (Vec<f64>, Vec<f64>) = grid
        .centers()
        .iter()
        .zip(run.last.values())
        .filter(|(r, _)| **r >= params.r0)
        .map(|(&r, &v)| ((r - params.r0) / params.rplus(), k * v))
        .unzip();
    let full_interp = MonotoneCubic::new(xs, ys);
    let mut num = 0.0;
    let mut den = 0.0;
    let full_values: Vec<f64> = xgrid.centers().iter().map(|&x| full_interp.eval(x)).collect();
    for ((&x, &h), (&f, &g)) in xgrid.centers().iter().zip(xgrid.widths()).zip(full_values.iter().zip(reduced.last.values())) {
        if x > 10.0 {
            break;
        }
        num += h * (f - g).abs();
        den += h * g.abs();
    }
    let full_profile = DensityField::new(xgrid.clone(), full_values, Variables::Physical, cfg.reduced_end)?;
    Ok(ReductionReport {
        beta_eff: beta,
        mu_eff: mu,
        a1: params.a1(),
        interior_error: interior_error(params, at_interior),
        interior_error_initial: interior_error(params, &run.snapshots[0]),
        exterior_profile_error: num / den,
        interior_time: params.interior_time(),
        exterior_time: params.exterior_time(),
        vm: run.vm,
        full_profile,
        reduced_profile: reduced.last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn energy_is_c1() {
        let e = FullModelParams::reference().energy();
        assert_eq!(e.value(0.0), 0.0);
        assert_eq!(e.derivative(0.0), 0.0);
        for r in [e.r_star, e.r0] {
            assert_relative_eq!(e.value(r - 1e-12), e.value(r + 1e-12), epsilon = 1e-10);
            assert_relative_eq!(e.derivative(r - 1e-12), e.derivative(r + 1e-12), epsilon = 1e-9);
        }
        assert_relative_eq!(e.value(e.r_star), 2.0);
        assert_relative_eq!(e.value(e.r0), 1.0);
        assert_relative_eq!(e.derivative(5.0), 0.1, max_relative = 1e-14);
        for k in 1..100 {
            let r = 3.0 * k as f64 / 100.0;
            let fd = (e.value(r + 1e-6) - e.value(r - 1e-6)) / 2e-6;
            assert_relative_eq!(fd, e.derivative(r), epsilon = 1e-6);
        }
    }

    #[test]
    fn voltage_pieces() {
        let v = Voltage::piecewise(alloc::vec![(0.0, 1.0), (5.0, 0.0)]);
        assert_eq!(v.at(1.0), 1.0);
        assert_eq!(v.at(6.0), 0.0);
        assert_eq!(v.at(-1.0), 1.0);
    }

    #[test]
    fn validation() {
        let mut p = FullModelParams::reference();
        p.r0 = 0.4;
        assert!(matches!(p.validate(), Err(FullModelError::Param { name: "r0", .. })));
        let mut p = FullModelParams::reference();
        p.sigma_l = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn quasi_static_vm_decreases() {
        let p = FullModelParams::reference();
        let mut last = f64::INFINITY;
        for k in 0..20 {
            let v = p.quasi_static_vm(1.0, k as f64);
            assert!(v < last);
            last = v;
        }
    }
}
