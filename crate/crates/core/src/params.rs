//! Model constants and the explicit self-similar steady states.

use crate::profile::Profile;
// Unused when std is linked (its inherent float methods take precedence).
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("beta must be positive and finite, got {0}")]
    Beta(f64),
    #[error("mu must be positive and finite, got {0}")]
    Mu(f64),
    #[error("gamma must be finite and below 1/2, got {0}")]
    GammaRange(f64),
    #[error("gamma = -1/2 gives a measure-valued profile and is not supported")]
    GammaMeasureValued,
}

/// Constants of the reduced model plus the selected self-similar branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    beta: f64,
    mu: f64,
    gamma: f64,
}

impl ModelParams {
    pub fn new(beta: f64, mu: f64, gamma: f64) -> Result<Self, ParamError> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(ParamError::Beta(beta));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(ParamError::Mu(mu));
        }
        check_gamma(gamma)?;
        Ok(Self { beta, mu, gamma })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Same constants with a different drift strength (used for `β V_ext²`).
    pub fn with_beta(&self, beta: f64) -> Result<Self, ParamError> {
        Self::new(beta, self.mu, self.gamma)
    }

    pub fn profile(&self) -> SelfSimilarProfile {
        // Validated at construction.
        SelfSimilarProfile::build(self.beta, self.gamma)
    }
}

fn check_gamma(gamma: f64) -> Result<(), ParamError> {
    if !gamma.is_finite() || gamma >= 0.5 {
        return Err(ParamError::GammaRange(gamma));
    }
    if gamma == -0.5 {
        return Err(ParamError::GammaMeasureValued);
    }
    Ok(())
}

/// Shape of the steady state selected by `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `0 < γ < 1/2`: algebraic tail `(1+γy)^{-θ}`.
    PowerLaw,
    /// `γ = 0`: `e^{-y/2}`.
    Exponential,
    /// `γ < 0`: support `[0, -1/γ)`.
    Compact,
}

/// Steady state `F_s` of `0 = (1+γy)F' + (γ+1/2)F` with first moment `N_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilarProfile {
    beta: f64,
    gamma: f64,
    n_s: f64,
    c_s: f64,
}

/// Derives `(θ, N_s, c_s)` for the given branch.
pub fn derive_profile(params: &ModelParams) -> SelfSimilarProfile {
    params.profile()
}

impl SelfSimilarProfile {
    fn build(beta: f64, gamma: f64) -> Self {
        if gamma == 0.0 {
            let c_s = beta.sqrt() / 4.0;
            Self { beta, gamma, n_s: 4.0 * c_s, c_s }
        } else {
            let n_s = (beta / (1.0 - gamma)).sqrt();
            let c_s = (1.0 - 2.0 * gamma) / 4.0 * n_s;
            Self { beta, gamma, n_s, c_s }
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_s(&self) -> f64 {
        self.n_s
    }

    pub fn c_s(&self) -> f64 {
        self.c_s
    }

    pub fn branch(&self) -> Branch {
        if self.gamma > 0.0 {
            Branch::PowerLaw
        } else if self.gamma == 0.0 {
            Branch::Exponential
        } else {
            Branch::Compact
        }
    }

    /// Tail exponent `θ = 1 + 1/(2γ)`; `None` on the exponential branch.
    pub fn theta(&self) -> Option<f64> {
        (self.gamma != 0.0).then(|| 1.0 + 0.5 / self.gamma)
    }

    /// Right end of the support (`∞` unless `γ < 0`).
    pub fn support_end(&self) -> f64 {
        if self.gamma < 0.0 {
            -1.0 / self.gamma
        } else {
            f64::INFINITY
        }
    }

    /// `c_s` written as `N_s γ² (θ-1)(θ-2)`.
    pub fn c_s_from_key_relation(&self) -> Option<f64> {
        let theta = self.theta()?;
        Some(self.n_s * self.gamma * self.gamma * (theta - 1.0) * (theta - 2.0))
    }

    fn base(&self, y: f64) -> f64 {
        1.0 + self.gamma * y
    }

    pub fn value(&self, y: f64) -> f64 {
        match self.theta() {
            None => self.c_s * (-0.5 * y).exp(),
            Some(theta) => {
                if y >= self.support_end() {
                    return 0.0;
                }
                self.c_s * self.base(y).powf(-theta)
            }
        }
    }

    pub fn derivative(&self, y: f64) -> f64 {
        match self.theta() {
            None => -0.5 * self.value(y),
            Some(theta) => {
                if y >= self.support_end() {
                    return 0.0;
                }
                -self.c_s * theta * self.gamma * self.base(y).powf(-theta - 1.0)
            }
        }
    }

    pub fn second_derivative(&self, y: f64) -> f64 {
        match self.theta() {
            None => 0.25 * self.value(y),
            Some(theta) => {
                if y >= self.support_end() {
                    return 0.0;
                }
                self.c_s
                    * theta
                    * (theta + 1.0)
                    * self.gamma
                    * self.gamma
                    * self.base(y).powf(-theta - 2.0)
            }
        }
    }

    /// `∫_r^∞ F_s dy`.
    pub fn tail_mass(&self, r: f64) -> f64 {
        match self.theta() {
            None => 2.0 * self.c_s * (-0.5 * r).exp(),
            Some(theta) => {
                if r >= self.support_end() {
                    return 0.0;
                }
                2.0 * self.c_s * self.base(r).powf(1.0 - theta)
            }
        }
    }

    /// `∫_r^∞ y F_s dy`; equals `N_s` at `r = 0`.
    pub fn tail_moment(&self, r: f64) -> f64 {
        match self.theta() {
            None => self.c_s * (-0.5 * r).exp() * (2.0 * r + 4.0),
            Some(theta) => {
                if r >= self.support_end() {
                    return 0.0;
                }
                let u = self.base(r);
                self.c_s / (self.gamma * self.gamma)
                    * (u.powf(2.0 - theta) / (theta - 2.0) - u.powf(1.0 - theta) / (theta - 1.0))
            }
        }
    }
}

/// `(1+γy) F_s'(y) + (γ + 1/2) F_s(y)` with the analytic derivative.
pub fn fs_residual(profile: &SelfSimilarProfile, y: f64) -> f64 {
    (1.0 + profile.gamma * y) * profile.derivative(y) + (profile.gamma + 0.5) * profile.value(y)
}

impl Profile for SelfSimilarProfile {
    fn value(&self, y: f64) -> f64 {
        SelfSimilarProfile::value(self, y)
    }

    fn tail_mass(&self, r: f64) -> f64 {
        SelfSimilarProfile::tail_mass(self, r)
    }

    fn tail_moment(&self, r: f64) -> f64 {
        SelfSimilarProfile::tail_moment(self, r)
    }
}
