//! The hyperbolic problem `∂t f = ∂x((1 + a(t) x) f)`.
//!
//! For a coefficient `a(t)` that does not depend on `x` the solution operator
//! is the affine push-forward `T φ(x) = m′ φ(m′ x + m)` with
//! `m′ = exp(∫ a)` and `m = ∫ m′`. The mean-field solver composes such maps
//! step by step, so the profile itself is never discretised.

use alloc::vec::Vec;
// Unused when std is linked (its inherent float methods take precedence).
#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::{DensityField, FieldProfile, RadialGrid, Variables};
use crate::params::{ModelParams, SelfSimilarProfile};
use crate::profile::Profile;
use crate::quad;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error("coefficient is not finite at t = {0}")]
    NonFiniteCoefficient(f64),
    #[error("time {t} lies outside the map range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("need t >= r, got t = {t}, r = {r}")]
    Backwards { t: f64, r: f64 },
    #[error("start time must be >= 1, got {0}")]
    StartTime(f64),
    #[error("mean field became non-finite at t = {0}")]
    StepRejected(f64),
    #[error("CFL number {0} exceeds 0.9")]
    Cfl(f64),
}

/// `x ↦ slope·x + shift`, acting on densities as `φ ↦ slope·φ(slope·x + shift)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub slope: f64,
    pub shift: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine { slope: 1.0, shift: 0.0 };

    /// The map for "apply `self`, then `later`".
    pub fn then(self, later: Affine) -> Affine {
        Affine { slope: self.slope * later.slope, shift: self.slope * later.shift + self.shift }
    }
}

/// `T φ` for a profile `φ`.
#[derive(Debug, Clone)]
pub struct Pushforward<P> {
    pub inner: P,
    pub map: Affine,
}

impl<P: Profile> Profile for Pushforward<P> {
    fn value(&self, x: f64) -> f64 {
        self.map.slope * self.inner.value(self.map.slope * x + self.map.shift)
    }

    fn tail_mass(&self, r: f64) -> f64 {
        self.inner.tail_mass(self.map.slope * r + self.map.shift)
    }

    fn tail_moment(&self, r: f64) -> f64 {
        let z = self.map.slope * r + self.map.shift;
        (self.inner.tail_moment(z) - self.map.shift * self.inner.tail_mass(z)) / self.map.slope
    }

    fn nu(&self, r: f64) -> f64 {
        self.inner.nu(self.map.slope * r + self.map.shift) / self.map.slope
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSample {
    pub t: f64,
    pub m: f64,
    pub m_prime: f64,
}

/// Table of `(m(t, t0), m′(t, t0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicsMap {
    t0: f64,
    samples: Vec<MapSample>,
}

impl CharacteristicsMap {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn samples(&self) -> &[MapSample] {
        &self.samples
    }

    pub fn t_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// The affine map `T(t, t0)`. Exact at sample times; in between, `ln m′`
    /// is interpolated linearly and `m` by cubic Hermite with slope `m′`.
    pub fn at(&self, t: f64) -> Result<Affine, TransportError> {
        let (start, end) = (self.t0, self.t_end());
        if !(t >= start && t <= end) {
            return Err(TransportError::OutOfRange { t, start, end });
        }
        let i = match self.samples.binary_search_by(|s| s.t.partial_cmp(&t).unwrap()) {
            Ok(i) => {
                let s = self.samples[i];
                return Ok(Affine { slope: s.m_prime, shift: s.m });
            }
            Err(i) => i - 1,
        };
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let slope = (a.m_prime.ln() * (1.0 - s) + b.m_prime.ln() * s).exp();
        let s2 = s * s;
        let s3 = s2 * s;
        let shift = (2.0 * s3 - 3.0 * s2 + 1.0) * a.m
            + (s3 - 2.0 * s2 + s) * h * a.m_prime
            + (-2.0 * s3 + 3.0 * s2) * b.m
            + (s3 - s2) * h * b.m_prime;
        Ok(Affine { slope, shift })
    }
}

const MAP_TOL: f64 = 1e-11;

/// Builds `m′(t) = (t/t0)^{-(1-γ)} exp(∫_{t0}^t j)` and `m = ∫ m′` at `times`
/// (sorted, all `>= t0`) by adaptive quadrature.
pub fn build_map<J: Fn(f64) -> f64>(
    j: J,
    params: &ModelParams,
    t0: f64,
    times: &[f64],
) -> Result<CharacteristicsMap, TransportError> {
    if !(t0 >= 1.0) {
        return Err(TransportError::StartTime(t0));
    }
    let decay = 1.0 - params.gamma();
    let mut samples = Vec::with_capacity(times.len() + 1);
    samples.push(MapSample { t: t0, m: 0.0, m_prime: 1.0 });
    let mut last = samples[0];
    let mut log_j = 0.0;
    for &t in times.iter().filter(|&&t| t > t0) {
        let check = |s: f64| {
            let v = j(s);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(TransportError::NonFiniteCoefficient(s))
            }
        };
        check(t)?;
        let tk = last.t;
        let inner = |s: f64| quad::integrate(&j, tk, s, MAP_TOL).value;
        let step_j = inner(t);
        if !step_j.is_finite() {
            return Err(TransportError::NonFiniteCoefficient(t));
        }
        let m_prime_k = last.m_prime;
        let dm = quad::integrate(|s| m_prime_k * (s / tk).powf(-decay) * inner(s).exp(), tk, t, MAP_TOL).value;
        log_j += step_j;
        let m_prime = (t / t0).powf(-decay) * log_j.exp();
        last = MapSample { t, m: last.m + dm, m_prime };
        samples.push(last);
    }
    Ok(CharacteristicsMap { t0, samples })
}

/// `T(t, t0) φ0` sampled on `grid` (monotone cubic for gridded data).
pub fn apply_t(map: &CharacteristicsMap, phi0: &DensityField, t: f64, grid: &RadialGrid) -> Result<DensityField, TransportError> {
    let a = map.at(t)?;
    let p = Pushforward { inner: FieldProfile::new(phi0), map: a };
    let mut out = DensityField::sample(grid.clone(), |x| p.value(x), Variables::Physical, t);
    if phi0.is_signed() {
        out = out.into_signed();
    }
    Ok(out)
}

/// Result of [`moment_of_t_dxfs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TMoment {
    /// `(2β/N_s³) ∫ x T(t,r) ∂x(x f_s(x,r)) dx`.
    pub value: f64,
    /// Correction relative to the `j ≡ 0` closed form.
    pub delta1: f64,
}

/// `(2β/N_s³) ∫ x T(t, r) ∂x(x f_s(·, r)) dx` in closed form for the map `T(t, r)`.
pub fn moment_of_t_dxfs(profile: &SelfSimilarProfile, t: f64, r: f64, map: Affine) -> Result<TMoment, TransportError> {
    if t < r {
        return Err(TransportError::Backwards { t, r });
    }
    let gamma = profile.gamma();
    // ∫_m^∞ (z − m) ∂z(z f_s) dz = −∫_m^∞ z f_s dz = −r^{1/2} I₁(m/r).
    let n3 = profile.n_s().powi(3);
    let value = -2.0 * profile.beta() / n3 * r.sqrt() * profile.tail_moment(map.shift / r) / map.slope;
    let lead = -(1.0 - gamma) / gamma * t.sqrt();
    let delta1 = value / lead - 1.0 + (1.0 - 2.0 * gamma) * (t / r).powf(-gamma);
    Ok(TMoment { value, delta1 })
}

/// Sampled first moment of the solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSample {
    pub t: f64,
    pub n_f: f64,
}

impl MomentSample {
    pub fn tau(&self) -> f64 {
        self.t.ln()
    }

    /// `N_F = n_f t^{-1/2}`.
    pub fn big_n(&self) -> f64 {
        self.n_f / self.t.sqrt()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeanFieldTrace {
    pub samples: Vec<MomentSample>,
}

/// Time stepping for [`solve_transport`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransportConfig {
    pub t0: f64,
    pub t_end: f64,
    /// `dt = min(step_fraction·t, dt_max)`.
    pub step_fraction: f64,
    pub dt_max: f64,
    pub picard_max: usize,
    pub picard_tol: f64,
    /// Times at which the cumulative map is recorded.
    pub snapshots: Vec<f64>,
}

impl TransportConfig {
    pub fn new(t0: f64, t_end: f64) -> Self {
        Self {
            t0,
            t_end,
            step_fraction: 0.05,
            dt_max: f64::INFINITY,
            picard_max: 5,
            picard_tol: 1e-10,
            snapshots: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportRun {
    pub trace: MeanFieldTrace,
    /// `(t, T(t, t0))` at each requested snapshot.
    pub snapshots: Vec<(f64, Affine)>,
    /// `(t, T(t, t0))` after every step.
    pub maps: Vec<(f64, Affine)>,
}

/// One step of length `t·(ρ-1)` with `a(s) = κ/s`: exact for the self-similar drift.
fn frozen_step(t: f64, rho: f64, kappa: f64) -> Affine {
    let slope = rho.powf(kappa);
    let e = kappa + 1.0;
    let shift = if e.abs() < 1e-12 { t * rho.ln() } else { t * (rho.powf(e) - 1.0) / e };
    Affine { slope, shift }
}

fn next_time(t: f64, cfg: &TransportConfig, snaps: &[f64]) -> f64 {
    let mut next = (t + (cfg.step_fraction * t).min(cfg.dt_max)).min(cfg.t_end);
    if let Some(&s) = snaps.iter().find(|&&s| s > t * (1.0 + 1e-14)) {
        next = next.min(s);
    }
    // Avoid a sliver step before a target.
    next
}

/// Mean-field transport from `f0` at `t0` to `t_end`.
///
/// On each step the coefficient is frozen in the form `a = κ/t` with
/// `κ = −β t/(1 + n_f²)`, which the affine map integrates exactly; Picard
/// sweeps replace `κ` by the average of its end-point values.
pub fn solve_transport<P: Profile>(f0: &P, params: &ModelParams, cfg: &TransportConfig) -> Result<TransportRun, TransportError> {
    if !(cfg.t0 >= 1.0) {
        return Err(TransportError::StartTime(cfg.t0));
    }
    let beta = params.beta();
    let n_of = |a: Affine| f0.nu(a.shift) / a.slope;
    let kappa_of = |t: f64, n: f64| -beta * t / (1.0 + n * n);
    let mut snaps = cfg.snapshots.clone();
    snaps.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut t = cfg.t0;
    let mut cum = Affine::IDENTITY;
    let mut n = n_of(cum);
    if !n.is_finite() {
        return Err(TransportError::StepRejected(t));
    }
    let mut run = TransportRun {
        trace: MeanFieldTrace { samples: alloc::vec![MomentSample { t, n_f: n }] },
        snapshots: Vec::new(),
        maps: alloc::vec![(t, cum)],
    };
    if snaps.first().is_some_and(|&s| s <= t) {
        run.snapshots.push((t, cum));
    }
    while t < cfg.t_end * (1.0 - 1e-14) {
        let next = next_time(t, cfg, &snaps);
        let rho = next / t;
        let k0 = kappa_of(t, n);
        let mut kappa = k0;
        let mut cand = cum.then(frozen_step(t, rho, kappa));
        let mut n_new = n_of(cand);
        for _ in 0..cfg.picard_max {
            kappa = 0.5 * (k0 + kappa_of(next, n_new));
            cand = cum.then(frozen_step(t, rho, kappa));
            let n_next = n_of(cand);
            let change = (n_next - n_new).abs();
            n_new = n_next;
            if change < cfg.picard_tol * n_new.abs().max(1.0) {
                break;
            }
        }
        if !n_new.is_finite() {
            return Err(TransportError::StepRejected(next));
        }
        t = next;
        cum = cand;
        n = n_new;
        run.trace.samples.push(MomentSample { t, n_f: n });
        run.maps.push((t, cum));
        if snaps.iter().any(|&s| (s - t).abs() <= 1e-12 * t) {
            run.snapshots.push((t, cum));
        }
    }
    Ok(run)
}

/// Transport with a prescribed perturbation `j(t)` of the coefficient
/// `−β/n_s² + j`; every recorded map comes from [`build_map`].
pub fn solve_transport_prescribed<P: Profile, J: Fn(f64) -> f64>(
    f0: &P,
    params: &ModelParams,
    j: J,
    cfg: &TransportConfig,
) -> Result<TransportRun, TransportError> {
    let mut times = Vec::new();
    let mut snaps = cfg.snapshots.clone();
    snaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut t = cfg.t0;
    while t < cfg.t_end * (1.0 - 1e-14) {
        t = next_time(t, cfg, &snaps);
        times.push(t);
    }
    let map = build_map(j, params, cfg.t0, &times)?;
    let mut run = TransportRun::default_at(cfg.t0);
    run.trace.samples.clear();
    run.maps.clear();
    for s in map.samples() {
        let a = Affine { slope: s.m_prime, shift: s.m };
        run.trace.samples.push(MomentSample { t: s.t, n_f: f0.nu(a.shift) / a.slope });
        run.maps.push((s.t, a));
        if snaps.iter().any(|&x| (x - s.t).abs() <= 1e-12 * s.t) {
            run.snapshots.push((s.t, a));
        }
    }
    Ok(run)
}

impl TransportRun {
    fn default_at(t0: f64) -> Self {
        Self {
            trace: MeanFieldTrace::default(),
            snapshots: Vec::new(),
            maps: alloc::vec![(t0, Affine::IDENTITY)],
        }
    }

    /// The solution at a recorded snapshot, sampled on `grid` in physical variables.
    pub fn render<P: Profile>(f0: &P, at: (f64, Affine), grid: &RadialGrid) -> DensityField {
        let p = Pushforward { inner: f0, map: at.1 };
        DensityField::sample(grid.clone(), |x| p.value(x), Variables::Physical, at.0)
    }
}

/// Face fluxes `w f_upwind` of the first-order upwind scheme for `∂t f = ∂x(w f)`,
/// `w = 1 + a x`; entry `i` is the flux through edge `i` (positive = leftward).
pub fn upwind_face_fluxes(grid: &RadialGrid, values: &[f64], slope: f64) -> Vec<f64> {
    let n = grid.cells();
    let edges = grid.edges();
    (0..=n)
        .map(|i| {
            let w = 1.0 + slope * edges[i];
            // Material moves with velocity −w: upwind is the right cell when w > 0.
            if w > 0.0 {
                if i < n { w * values[i] } else { 0.0 }
            } else if i > 0 {
                w * values[i - 1]
            } else {
                0.0
            }
        })
        .collect()
}

/// First-order upwind finite volumes for `∂t f = ∂x((1 + a(t) x) f)`, explicit
/// Euler with `dt` set from the CFL number each step.
pub fn upwind_fv_transport<A: Fn(f64) -> f64>(
    f0: &DensityField,
    slope: A,
    t0: f64,
    t_end: f64,
    cfl: f64,
    snapshots: &[f64],
) -> Result<Vec<DensityField>, TransportError> {
    if !(cfl > 0.0 && cfl <= 0.9) {
        return Err(TransportError::Cfl(cfl));
    }
    let grid = f0.grid().clone();
    let edges = grid.edges();
    let widths = grid.widths();
    let mut f = f0.values().to_vec();
    let mut t = t0;
    let mut out = Vec::new();
    let mut snaps: Vec<f64> = snapshots.to_vec();
    snaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut next_snap = 0;
    while next_snap < snaps.len() && snaps[next_snap] <= t {
        out.push(DensityField::new(grid.clone(), f.clone(), Variables::Physical, t).expect("same grid"));
        next_snap += 1;
    }
    while t < t_end * (1.0 - 1e-14) {
        let a = slope(t);
        if !a.is_finite() {
            return Err(TransportError::NonFiniteCoefficient(t));
        }
        // Largest |w| on a cell bounds the speed at both its faces.
        let mut dt = f64::INFINITY;
        for i in 0..grid.cells() {
            let w = (1.0 + a * edges[i]).abs().max((1.0 + a * edges[i + 1]).abs());
            if w > 0.0 {
                dt = dt.min(cfl * widths[i] / w);
            }
        }
        let mut target = t_end;
        if next_snap < snaps.len() {
            target = target.min(snaps[next_snap]);
        }
        dt = dt.min(target - t);
        let flux = upwind_face_fluxes(&grid, &f, a);
        for i in 0..grid.cells() {
            f[i] += dt * (flux[i + 1] - flux[i]) / widths[i];
        }
        t += dt;
        while next_snap < snaps.len() && snaps[next_snap] <= t * (1.0 + 1e-14) {
            out.push(DensityField::new(grid.clone(), f.clone(), Variables::Physical, t).expect("same grid"));
            next_snap += 1;
        }
    }
    Ok(out)
}

/// One row of [`profile_limit_diagnostics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub tau: f64,
    pub big_m: f64,
    pub big_m_prime: f64,
    pub ratio: f64,
    pub sup_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitDiagnostics {
    pub rows: Vec<LimitRow>,
    /// Whether `|M′/M − γ|` shrinks over the table.
    pub approaching_gamma: bool,
}

/// Self-similar push-forward `T̃Φ(y) = e^{s/2} M′ Φ(M′y + M)` with
/// `M′ = e^s m′`, `M = m/t0`, `s = τ − τ0`.
pub fn selfsim_map(map: Affine, t: f64, t0: f64) -> (f64, f64) {
    (t / t0 * map.slope, map.shift / t0)
}

/// Tracks `M`, `M′`, `M′/M` and `sup_{y ≤ y_max} |T̃Φ − F_s|` along a map built from `t0`.
pub fn profile_limit_diagnostics<P: Profile>(
    phi0: &P,
    profile: &SelfSimilarProfile,
    map: &CharacteristicsMap,
    times: &[f64],
    y_max: f64,
) -> Result<LimitDiagnostics, TransportError> {
    let t0 = map.t0();
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let a = map.at(t)?;
        let (mp, m) = selfsim_map(a, t, t0);
        let amp = (t / t0).sqrt() * mp;
        let mut sup: f64 = 0.0;
        for k in 0..=2000 {
            let y = y_max * k as f64 / 2000.0;
            let v = amp * phi0.value(mp * y + m);
            sup = sup.max((v - profile.value(y)).abs());
        }
        rows.push(LimitRow { tau: t.ln(), big_m: m, big_m_prime: mp, ratio: if m > 0.0 { mp / m } else { f64::INFINITY }, sup_error: sup });
    }
    let gamma = profile.gamma();
    let gaps: Vec<f64> = rows.iter().filter(|r| r.ratio.is_finite()).map(|r| (r.ratio - gamma).abs()).collect();
    let approaching_gamma = gaps.len() >= 2 && gaps[gaps.len() - 1] < gaps[0];
    Ok(LimitDiagnostics { rows, approaching_gamma })
}

/// `r^{θ-2} ν(r)`, whose limit is `c_Φ γ^{-θ}/((θ-1)(θ-2))` for tails `Φ ~ c_Φ (γy)^{-θ}`.
pub fn scaled_nu<P: Profile>(phi: &P, theta: f64, r: f64) -> f64 {
    r.powf(theta - 2.0) * phi.nu(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Exponential;
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams::new(3.0, 1.0, 0.25).unwrap()
    }

    #[test]
    fn closed_form_map_for_zero_j() {
        let map = build_map(|_| 0.0, &params(), 1.0, &[4.0, 16.0]).unwrap();
        let a = map.at(16.0).unwrap();
        assert_relative_eq!(a.slope, 0.125, max_relative = 1e-12);
        assert_relative_eq!(a.shift, 4.0, max_relative = 1e-10);
        assert_eq!(map.at(1.0).unwrap(), Affine::IDENTITY);
        assert!(map.at(17.0).is_err());
    }

    #[test]
    fn rejects_non_finite_j() {
        let r = build_map(|t| if t > 2.0 { f64::NAN } else { 0.0 }, &params(), 1.0, &[4.0]);
        assert!(matches!(r, Err(TransportError::NonFiniteCoefficient(_))));
    }

    #[test]
    fn pushforward_of_exponential() {
        let map = build_map(|_| 0.0, &params(), 1.0, &[16.0]).unwrap();
        let p = Pushforward { inner: Exponential { amplitude: 1.0, rate: 1.0 }, map: map.at(16.0).unwrap() };
        assert_relative_eq!(p.value(0.0), 0.125 * (-4.0f64).exp(), max_relative = 1e-10);
        assert_relative_eq!(p.value(0.0), 0.002_289_7, max_relative = 2e-4);
    }

    #[test]
    fn moment_closed_form_values() {
        let prof = params().profile();
        let map = build_map(|_| 0.0, &params(), 1.0, &[16.0]).unwrap();
        let m = moment_of_t_dxfs(&prof, 16.0, 1.0, map.at(16.0).unwrap()).unwrap();
        assert_relative_eq!(m.value, -9.0, max_relative = 1e-9);
        assert!(m.delta1.abs() < 1e-9);
        let id = moment_of_t_dxfs(&prof, 1.0, 1.0, Affine::IDENTITY).unwrap();
        assert_relative_eq!(id.value, -1.5, max_relative = 1e-14);
        assert!(moment_of_t_dxfs(&prof, 0.5, 1.0, Affine::IDENTITY).is_err());
    }

    #[test]
    fn frozen_step_matches_build_map() {
        // a = −(1−γ)/t is κ = −0.75.
        let s = frozen_step(1.0, 16.0, -0.75);
        assert_relative_eq!(s.slope, 0.125, max_relative = 1e-14);
        assert_relative_eq!(s.shift, 4.0, max_relative = 1e-14);
        let c = frozen_step(1.0, 4.0, -0.75).then(frozen_step(4.0, 4.0, -0.75));
        assert_relative_eq!(c.slope, s.slope, max_relative = 1e-14);
        assert_relative_eq!(c.shift, s.shift, max_relative = 1e-14);
    }

    #[test]
    fn zero_data_stays_zero() {
        let run = solve_transport(&crate::profile::Zero, &params(), &TransportConfig::new(1.0, 10.0)).unwrap();
        assert!(run.trace.samples.iter().all(|s| s.n_f == 0.0));
    }

    #[test]
    fn cfl_guard() {
        let g = RadialGrid::uniform(32, 1.0).unwrap();
        let f = DensityField::zeros(g, Variables::Physical, 1.0);
        assert!(matches!(upwind_fv_transport(&f, |_| 0.0, 1.0, 2.0, 0.95, &[]), Err(TransportError::Cfl(_))));
    }
}
