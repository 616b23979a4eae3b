//! Textbook Kumaraswamy formulas in linear-space parameters.
//!
//! These mirror what autodiff frameworks ship: `log(1 - exp(·))` computed
//! literally, the inverse CDF as nested powers, and gradients assembled by
//! the chain rule one factor at a time. Nothing here guards against
//! cancellation or underflow; non-finite results are the expected output
//! in the regimes the stable implementation exists for.

use crate::error::{domain, Result};
use crate::ks::GradPair;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveParams<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> NaiveParams<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !(a > T::zero()) {
            return domain("NaiveParams", "a > 0", a.to_f64());
        }
        if !(b > T::zero()) {
            return domain("NaiveParams", "b > 0", b.to_f64());
        }
        Ok(NaiveParams { a, b })
    }
}

/// `log a + log b + (a - 1) log x + (b - 1) log(1 - exp(a log x))`.
pub fn naive_log_pdf<T: Real>(x: T, p: &NaiveParams<T>) -> T {
    let one = T::one();
    let lx = x.ln();
    p.a.ln() + p.b.ln() + (p.a - one) * lx + (p.b - one) * (one - (p.a * lx).exp()).ln()
}

/// `(1 - u^{1/b})^{1/a}`; exactly 0 once `u^{1/b}` rounds to 1.
pub fn naive_icdf<T: Real>(u: T, p: &NaiveParams<T>) -> T {
    let one = T::one();
    (one - u.powf(one / p.b)).powf(one / p.a)
}

/// Reverse-mode chain rule through `x = y^{1/a}`, `y = 1 - v`, `v = u^{1/b}`,
/// returning gradients with respect to `(log a, log b)`.
///
/// Uses the framework power rules `∂y^e/∂y = e·y^{e-1}` and
/// `∂y^e/∂e = y^e·log y`, so once `v` rounds to 1 the `log b` component is
/// infinite and the `log a` component is `0 · ∞`.
pub fn naive_icdf_grad_chainrule<T: Real>(u: T, p: &NaiveParams<T>) -> GradPair<T> {
    let one = T::one();
    let inv_a = one / p.a;
    let inv_b = one / p.b;
    let v = u.powf(inv_b);
    let y = one - v;
    let x = y.powf(inv_a);

    // ∂x/∂(1/a) · ∂(1/a)/∂log a
    let d_log_a = x * y.ln() * -inv_a;

    // ∂x/∂y · ∂y/∂v · ∂v/∂(1/b) · ∂(1/b)/∂log b
    let dx_dy = inv_a * y.powf(inv_a - one);
    let dv_dinv_b = v * u.ln();
    let d_log_b = dx_dy * -one * dv_dinv_b * -inv_b;

    GradPair::new(d_log_a, d_log_b)
}
