//! Solvers for a nonlocal drift-diffusion model of membrane pore densities.
//!
//! The reduced model is
//!
//! ```text
//! ∂t f = ∂x( ∂x f + (1 − β x / (1 + n_f²)) f ),   f(0, t) = μ,   n_f = ∫ x f dx
//! ```
//!
//! together with its hyperbolic limit (no `∂x²` term), the self-similar
//! variables `y = x/t`, `τ = ln t`, `F = t^{3/2} f`, and the unreduced
//! Smoluchowski/circuit model it comes from.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod fit;
pub mod full_model;
pub mod grid;
pub mod interp;
pub mod linalg;
pub mod moments;
pub mod parabolic;
pub mod params;
pub mod perturbation;
pub mod profile;
pub mod quad;
pub mod transport;

pub use grid::{DensityField, RadialGrid, Variables};
pub use params::{ModelParams, ParamError, SelfSimilarProfile};
pub use profile::Profile;
