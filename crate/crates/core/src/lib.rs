//! Numerically stable Kumaraswamy distribution.
//!
//! The crate is organised bottom-up:
//!
//! - [`scalar`]: `log1p`, `expm1`, `log1mexp`, and the gamma family.
//! - [`ks`]: the stabilized distribution in log-space parameters, with
//!   analytic gradients, entropy, moments, and KL to a Beta.
//! - [`naive`]: textbook formulations kept for diagnostics.
//! - [`oracle`]: finite differences, quadrature, and Monte Carlo references.
//! - [`mlp`] and [`bandit`]: a small MLP encoder and the variational bandit
//!   encoder built on the reparameterized sampler.

pub mod bandit;
pub mod error;
pub mod naive;
pub mod oracle;
pub mod ks;
pub mod mlp;
pub mod quadrature;
pub mod real;
pub mod scalar;

pub use error::{KsError, Result};
pub use ks::{BetaParams, GradPair, LogParams, UnitValue};
pub use real::{Precision, Real};
