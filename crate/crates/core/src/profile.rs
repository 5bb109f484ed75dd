//! Half-line profiles with tail integrals.
//!
//! Everything that moves under the characteristics map needs
//! `ν(r) = ∫_r^∞ (z − r) φ(z) dz`, so a profile carries its tail mass and
//! tail first moment alongside point values.

use alloc::boxed::Box;
use alloc::vec::Vec;
// Unused when std is linked (its inherent float methods take precedence).
#[allow(unused_imports)]
use num_traits::Float;

use crate::quad;

pub trait Profile {
    fn value(&self, x: f64) -> f64;

    /// `∫_r^∞ φ`.
    fn tail_mass(&self, r: f64) -> f64;

    /// `∫_r^∞ x φ`.
    fn tail_moment(&self, r: f64) -> f64;

    /// `∫_r^∞ (x − r) φ`.
    fn nu(&self, r: f64) -> f64 {
        self.tail_moment(r) - r * self.tail_mass(r)
    }
}

impl<P: Profile + ?Sized> Profile for &P {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn tail_mass(&self, r: f64) -> f64 {
        (**self).tail_mass(r)
    }
    fn tail_moment(&self, r: f64) -> f64 {
        (**self).tail_moment(r)
    }
    fn nu(&self, r: f64) -> f64 {
        (**self).nu(r)
    }
}

impl<P: Profile + ?Sized> Profile for Box<P> {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn tail_mass(&self, r: f64) -> f64 {
        (**self).tail_mass(r)
    }
    fn tail_moment(&self, r: f64) -> f64 {
        (**self).tail_moment(r)
    }
    fn nu(&self, r: f64) -> f64 {
        (**self).nu(r)
    }
}

/// The zero function.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl Profile for Zero {
    fn value(&self, _: f64) -> f64 {
        0.0
    }
    fn tail_mass(&self, _: f64) -> f64 {
        0.0
    }
    fn tail_moment(&self, _: f64) -> f64 {
        0.0
    }
}

/// `t^{-3/2} Φ(x/t)`: a self-similar-variable profile read at physical time `t`.
#[derive(Debug, Clone)]
pub struct AtTime<P> {
    pub inner: P,
    pub t: f64,
}

impl<P: Profile> Profile for AtTime<P> {
    fn value(&self, x: f64) -> f64 {
        self.t.powf(-1.5) * self.inner.value(x / self.t)
    }
    fn tail_mass(&self, r: f64) -> f64 {
        self.t.powf(-0.5) * self.inner.tail_mass(r / self.t)
    }
    fn tail_moment(&self, r: f64) -> f64 {
        self.t.sqrt() * self.inner.tail_moment(r / self.t)
    }
    fn nu(&self, r: f64) -> f64 {
        self.t.sqrt() * self.inner.nu(r / self.t)
    }
}

/// `scale · φ`.
#[derive(Debug, Clone)]
pub struct Scaled<P> {
    pub inner: P,
    pub scale: f64,
}

impl<P: Profile> Profile for Scaled<P> {
    fn value(&self, x: f64) -> f64 {
        self.scale * self.inner.value(x)
    }
    fn tail_mass(&self, r: f64) -> f64 {
        self.scale * self.inner.tail_mass(r)
    }
    fn tail_moment(&self, r: f64) -> f64 {
        self.scale * self.inner.tail_moment(r)
    }
    fn nu(&self, r: f64) -> f64 {
        self.scale * self.inner.nu(r)
    }
}

/// Sum of boxed profiles.
#[derive(Default)]
pub struct Sum {
    parts: Vec<Box<dyn Profile + Send + Sync>>,
}

impl Sum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, part: impl Profile + Send + Sync + 'static) -> Self {
        self.parts.push(Box::new(part));
        self
    }

    pub fn push(&mut self, part: impl Profile + Send + Sync + 'static) {
        self.parts.push(Box::new(part));
    }
}

impl Profile for Sum {
    fn value(&self, x: f64) -> f64 {
        self.parts.iter().map(|p| p.value(x)).sum()
    }
    fn tail_mass(&self, r: f64) -> f64 {
        self.parts.iter().map(|p| p.tail_mass(r)).sum()
    }
    fn tail_moment(&self, r: f64) -> f64 {
        self.parts.iter().map(|p| p.tail_moment(r)).sum()
    }
    fn nu(&self, r: f64) -> f64 {
        self.parts.iter().map(|p| p.nu(r)).sum()
    }
}

/// `c e^{-k x}`.
#[derive(Debug, Clone, Copy)]
pub struct Exponential {
    pub amplitude: f64,
    pub rate: f64,
}

impl Profile for Exponential {
    fn value(&self, x: f64) -> f64 {
        self.amplitude * (-self.rate * x).exp()
    }
    fn tail_mass(&self, r: f64) -> f64 {
        self.amplitude * (-self.rate * r).exp() / self.rate
    }
    fn tail_moment(&self, r: f64) -> f64 {
        let k = self.rate;
        self.amplitude * (-k * r).exp() * (r / k + 1.0 / (k * k))
    }
    fn nu(&self, r: f64) -> f64 {
        self.amplitude * (-self.rate * r).exp() / (self.rate * self.rate)
    }
}

/// A closure profile whose tail integrals come from adaptive quadrature.
///
/// `scale` is the length used to map `[r, ∞)` onto `[0, 1)`; it should be
/// comparable to the decay length of the function.
pub struct Numeric<F> {
    f: F,
    scale: f64,
    tol: f64,
}

impl<F: Fn(f64) -> f64> Numeric<F> {
    pub fn new(f: F, scale: f64) -> Self {
        Self { f, scale, tol: 1e-12 }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

impl<F: Fn(f64) -> f64> Profile for Numeric<F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn tail_mass(&self, r: f64) -> f64 {
        quad::to_infinity(&self.f, r, self.scale, self.tol).value
    }
    fn tail_moment(&self, r: f64) -> f64 {
        quad::to_infinity(|x| x * (self.f)(x), r, self.scale.max(r), self.tol).value
    }
    fn nu(&self, r: f64) -> f64 {
        quad::to_infinity(|x| (x - r) * (self.f)(x), r, self.scale.max(r), self.tol).value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_nu_matches_quadrature() {
        let e = Exponential { amplitude: 2.0, rate: 0.5 };
        let n = Numeric::new(|x: f64| 2.0 * (-0.5 * x).exp(), 2.0);
        for r in [0.0, 0.3, 4.0, 20.0] {
            assert_relative_eq!(e.nu(r), n.nu(r), max_relative = 1e-10);
            assert_relative_eq!(e.tail_moment(r), n.tail_moment(r), max_relative = 1e-10);
        }
    }

    #[test]
    fn at_time_scales_moments() {
        let p = crate::ModelParams::new(3.0, 1.0, 0.25).unwrap().profile();
        let at = AtTime { inner: p, t: 16.0 };
        // n_f = N_F t^{1/2}
        assert_relative_eq!(at.tail_moment(0.0), 2.0 * 4.0, max_relative = 1e-14);
        let num = Numeric::new(|x| at.value(x), 16.0);
        assert_relative_eq!(num.tail_moment(0.0), 8.0, max_relative = 1e-9);
    }
}
