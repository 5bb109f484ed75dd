//! Initial perturbations `G0` (power-law) and `Ĝ0` (boundary-concentrated)
//! of the self-similar profile.

// Unused when std is linked (its inherent float methods take precedence).
#[allow(unused_imports)]
use num_traits::Float;

use crate::params::ModelParams;
use crate::profile::Profile;
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum PerturbationError {
    #[error("c0 must be >= 0, got {0}")]
    Amplitude(f64),
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("modulation leaves [-1, 1]: |mean| + |ripple| = {0}")]
    Modulation(f64),
    #[error("hat amplitude must lie in [0, 0.45], got {0}")]
    HatAmplitude(f64),
    #[error("|G0''| exceeds c0 (1+gamma y)^(-theta-2) by factor {ratio} at y = {y}")]
    Envelope { y: f64, ratio: f64 },
    #[error("perturbations need a power-law profile (0 < gamma < 1/2)")]
    Branch,
}

/// `w(y) = mean + ripple e^{-γy} sin(phase + freq·y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulation {
    pub mean: f64,
    pub ripple: f64,
    pub freq: f64,
    pub phase: f64,
}

impl Modulation {
    pub fn constant(value: f64) -> Self {
        Self { mean: value, ripple: 0.0, freq: 0.0, phase: 0.0 }
    }

    /// Default modulation with the given phase.
    pub fn rippled(phase: f64) -> Self {
        Self { mean: 0.5, ripple: 0.1, freq: 0.25, phase }
    }

    fn eval(&self, gamma: f64, y: f64) -> f64 {
        self.mean + self.ripple * (-gamma * y).exp() * (self.phase + self.freq * y).sin()
    }
}

/// `G0(y) = c0 w(y) (1+γy)^{-θ-ε}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPerturbation {
    pub c0: f64,
    pub gamma: f64,
    /// `θ + ε`.
    pub exponent: f64,
    pub modulation: Modulation,
}

impl PowerPerturbation {
    fn length(&self) -> f64 {
        1.0 / self.gamma
    }
}

impl Profile for PowerPerturbation {
    fn value(&self, y: f64) -> f64 {
        if self.c0 == 0.0 {
            return 0.0;
        }
        self.c0 * self.modulation.eval(self.gamma, y) * (1.0 + self.gamma * y).powf(-self.exponent)
    }

    fn tail_mass(&self, r: f64) -> f64 {
        if self.c0 == 0.0 {
            return 0.0;
        }
        quad::to_infinity(|y| self.value(y), r, self.length().max(r), 1e-13).value
    }

    fn tail_moment(&self, r: f64) -> f64 {
        if self.c0 == 0.0 {
            return 0.0;
        }
        quad::to_infinity(|y| y * self.value(y), r, self.length().max(r), 1e-13).value
    }

    fn nu(&self, r: f64) -> f64 {
        if self.c0 == 0.0 {
            return 0.0;
        }
        quad::to_infinity(|y| (y - r) * self.value(y), r, self.length().max(r), 1e-13).value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HatKind {
    /// `w2 = A sin(φ + x/4)`.
    Free,
    /// Adds `−(A sin φ + G0(0) e^{-(2-εγ)τ0}) e^{-x}` so that `G0 + Ĝ0` vanishes at 0.
    Pinned,
}

/// `Ĝ0(y) = e^{(2-εγ)τ0 − y e^{τ0}/2} w2(y e^{τ0})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatPerturbation {
    /// `(2 − εγ)τ0`.
    pub log_scale: f64,
    /// `e^{τ0}`.
    pub t0: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// Coefficient of `e^{-x}` in `w2`.
    pub pin: f64,
}

impl HatPerturbation {
    fn w2(&self, x: f64) -> f64 {
        self.amplitude * (self.phase + 0.25 * x).sin() - self.pin * (-x).exp()
    }
}

impl Profile for HatPerturbation {
    fn value(&self, y: f64) -> f64 {
        let x = y * self.t0;
        (self.log_scale - 0.5 * x).exp() * self.w2(x)
    }

    fn tail_mass(&self, r: f64) -> f64 {
        quad::to_infinity(|y| self.value(y), r, 2.0 / self.t0, 1e-13).value
    }

    fn tail_moment(&self, r: f64) -> f64 {
        quad::to_infinity(|y| y * self.value(y), r, (2.0 / self.t0).max(r), 1e-13).value
    }

    fn nu(&self, r: f64) -> f64 {
        quad::to_infinity(|y| (y - r) * self.value(y), r, 2.0 / self.t0, 1e-13).value
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub c0: f64,
    pub epsilon: f64,
    pub tau0: f64,
    pub modulation: Modulation,
    pub hat_amplitude: f64,
    pub hat_phase: f64,
    pub hat: HatKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub g0: PowerPerturbation,
    pub ghat0: HatPerturbation,
}

pub fn build_perturbation(params: &ModelParams, spec: &PerturbationSpec) -> Result<Perturbation, PerturbationError> {
    let profile = params.profile();
    let theta = profile.theta().filter(|_| params.gamma() > 0.0).ok_or(PerturbationError::Branch)?;
    if !(spec.c0 >= 0.0) {
        return Err(PerturbationError::Amplitude(spec.c0));
    }
    if !(spec.epsilon > 0.0) {
        return Err(PerturbationError::Epsilon(spec.epsilon));
    }
    let reach = spec.modulation.mean.abs() + spec.modulation.ripple.abs();
    if reach > 1.0 {
        return Err(PerturbationError::Modulation(reach));
    }
    if !(0.0..=0.45).contains(&spec.hat_amplitude) {
        return Err(PerturbationError::HatAmplitude(spec.hat_amplitude));
    }
    let gamma = params.gamma();
    let g0 = PowerPerturbation { c0: spec.c0, gamma, exponent: theta + spec.epsilon, modulation: spec.modulation };
    let log_scale = (2.0 - spec.epsilon * gamma) * spec.tau0;
    let pin = match spec.hat {
        HatKind::Free => 0.0,
        HatKind::Pinned => spec.hat_amplitude * spec.hat_phase.sin() + g0.value(0.0) * (-log_scale).exp(),
    };
    let ghat0 = HatPerturbation { log_scale, t0: spec.tau0.exp(), amplitude: spec.hat_amplitude, phase: spec.hat_phase, pin };
    Ok(Perturbation { g0, ghat0 })
}

/// Largest `|G0''(y)| / (c0 (1+γy)^{-θ-2})` over log-spaced `y ∈ [0, 10^4]`,
/// from central differences; errors if it exceeds one.
pub fn check_envelope(g0: &PowerPerturbation, theta: f64) -> Result<f64, PerturbationError> {
    if g0.c0 == 0.0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    let mut at = 0.0;
    for k in 0..=2000 {
        let y = if k == 0 { 0.0 } else { 1e-3 * 10f64.powf(7.0 * k as f64 / 2000.0) };
        let h = 1e-3 * (1.0 + y);
        // One-sided at the origin.
        let d2 = if y < h {
            (2.0 * g0.value(y) - 5.0 * g0.value(y + h) + 4.0 * g0.value(y + 2.0 * h) - g0.value(y + 3.0 * h)) / (h * h)
        } else {
            (g0.value(y + h) - 2.0 * g0.value(y) + g0.value(y - h)) / (h * h)
        };
        let ratio = d2.abs() / (g0.c0 * (1.0 + g0.gamma * y).powf(-theta - 2.0));
        if ratio > worst {
            worst = ratio;
            at = y;
        }
    }
    if worst > 1.0 {
        return Err(PerturbationError::Envelope { y: at, ratio: worst });
    }
    Ok(worst)
}

/// `c0/(γ²(θ−2)(θ−1)) + 4e^{-εγτ0}`.
pub fn initial_moment_bound(params: &ModelParams, c0: f64, epsilon: f64, tau0: f64) -> f64 {
    let gamma = params.gamma();
    let theta = params.profile().theta().unwrap_or(f64::INFINITY);
    c0 / (gamma * gamma * (theta - 2.0) * (theta - 1.0)) + 4.0 * (-epsilon * gamma * tau0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams::new(3.0, 1.0, 0.25).unwrap()
    }

    fn spec(c0: f64, modulation: Modulation) -> PerturbationSpec {
        PerturbationSpec { c0, epsilon: 1.0, tau0: 100f64.ln(), modulation, hat_amplitude: 0.4, hat_phase: 0.3, hat: HatKind::Pinned }
    }

    #[test]
    fn constant_modulation_values() {
        let p = build_perturbation(&params(), &spec(0.01, Modulation::constant(1.0))).unwrap();
        assert_relative_eq!(p.g0.value(0.0), 0.01);
        assert_relative_eq!(p.g0.value(4.0), 0.000625, max_relative = 1e-14);
        // ∫ y (1+y/4)^{-4} dy = 16/((θ+ε-1)(θ+ε-2)) = 8/3
        assert_relative_eq!(p.g0.tail_moment(0.0), 0.01 * 8.0 / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn zero_amplitude() {
        let p = build_perturbation(&params(), &spec(0.0, Modulation::rippled(1.0))).unwrap();
        assert_eq!(p.g0.value(0.0), 0.0);
        assert_eq!(p.g0.nu(0.0), 0.0);
    }

    #[test]
    fn pinned_hat_cancels_at_origin() {
        let p = build_perturbation(&params(), &spec(0.01, Modulation::rippled(2.0))).unwrap();
        assert_relative_eq!(p.g0.value(0.0) + p.ghat0.value(0.0), 0.0, epsilon = 1e-14);
        let t0 = 100.0f64;
        for y in [0.0, 0.01, 0.05, 0.3] {
            assert!(p.ghat0.value(y).abs() <= (1.75 * t0.ln() - 0.5 * y * t0).exp());
        }
    }

    #[test]
    fn envelope_check() {
        let theta = 3.0;
        let p = build_perturbation(&params(), &spec(0.01, Modulation::rippled(0.7))).unwrap();
        let r = check_envelope(&p.g0, theta).unwrap();
        assert!(r < 1.0 && r > 0.5);
        let p = build_perturbation(&params(), &spec(0.01, Modulation::constant(1.0))).unwrap();
        // 20γ² = 1.25 at the origin.
        match check_envelope(&p.g0, theta) {
            Err(PerturbationError::Envelope { ratio, y }) => {
                assert!(y == 0.0);
                assert_relative_eq!(ratio, 1.25, max_relative = 1e-3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = params();
        assert!(matches!(build_perturbation(&p, &spec(-1.0, Modulation::constant(1.0))), Err(PerturbationError::Amplitude(_))));
        let m = Modulation { mean: 0.95, ripple: 0.1, freq: 1.0, phase: 0.0 };
        assert!(matches!(build_perturbation(&p, &spec(0.01, m)), Err(PerturbationError::Modulation(_))));
    }

    #[test]
    fn moment_bound_respected() {
        let p = params();
        for phase in [0.0, 1.0, 2.5, 4.0] {
            let mut s = spec(0.01, Modulation::rippled(phase));
            s.hat_phase = phase;
            let q = build_perturbation(&p, &s).unwrap();
            let n = q.g0.nu(0.0) + q.ghat0.nu(0.0);
            assert!(n.abs() <= initial_moment_bound(&p, 0.01, 1.0, s.tau0));
        }
    }
}
