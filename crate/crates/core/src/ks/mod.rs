//! The stabilized Kumaraswamy distribution.
//!
//! Parameters live in log space ([`LogParams`]) and values on the unit
//! interval are carried as their logarithm ([`UnitValue`]). Every
//! `log(1 - exp(·))` term goes through [`log1mexp`](crate::scalar::log1mexp),
//! which is what keeps the log-pdf and inverse CDF finite when `a` or `b`
//! is extreme.

mod grads;
mod info;

pub use grads::{cdf_grads, icdf_grads, icdf_log_grads, log_pdf_grads, LogGrad};
pub use info::{
    entropy, entropy_grads, kl_to_beta, kl_to_beta_converged, kl_to_beta_grads, moment, moment_grads,
    DEFAULT_KL_TERMS,
};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::real::Real;
use crate::scalar::log1mexp_unchecked;

/// Kumaraswamy parameters `(log a, log b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogParams<T> {
    pub log_a: T,
    pub log_b: T,
}

impl<T: Real> LogParams<T> {
    pub fn new(log_a: T, log_b: T) -> Result<Self> {
        if !log_a.is_finite() {
            return domain("LogParams", "log a finite", log_a.to_f64());
        }
        if !log_b.is_finite() {
            return domain("LogParams", "log b finite", log_b.to_f64());
        }
        Ok(LogParams { log_a, log_b })
    }

    /// From linear-space `a, b > 0`.
    pub fn from_linear(a: T, b: T) -> Result<Self> {
        if !(a > T::zero()) || !a.is_finite() {
            return domain("LogParams", "a > 0 and finite", a.to_f64());
        }
        if !(b > T::zero()) || !b.is_finite() {
            return domain("LogParams", "b > 0 and finite", b.to_f64());
        }
        Self::new(a.ln(), b.ln())
    }

    pub fn uniform() -> Self {
        LogParams {
            log_a: T::zero(),
            log_b: T::zero(),
        }
    }

    #[inline]
    pub fn a(&self) -> T {
        self.log_a.exp()
    }

    #[inline]
    pub fn b(&self) -> T {
        self.log_b.exp()
    }

    pub fn cast<U: Real>(&self) -> LogParams<U> {
        LogParams {
            log_a: U::of(self.log_a.to_f64()),
            log_b: U::of(self.log_b.to_f64()),
        }
    }
}

/// Beta distribution parameters, both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> BetaParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return domain("BetaParams", "alpha > 0 and finite", alpha.to_f64());
        }
        if !(beta > T::zero()) || !beta.is_finite() {
            return domain("BetaParams", "beta > 0 and finite", beta.to_f64());
        }
        Ok(BetaParams { alpha, beta })
    }

    /// Beta log-density at `x`.
    pub fn log_pdf(&self, x: UnitValue<T>) -> T {
        let lb = T::of(crate::scalar::log_beta_f64(
            self.alpha.to_f64(),
            self.beta.to_f64(),
        ));
        (self.alpha - T::one()) * x.log_value() + (self.beta - T::one()) * x.log_complement() - lb
    }
}

/// Partial derivatives with respect to `(log a, log b)`, and optionally `log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradPair<T> {
    pub d_log_a: T,
    pub d_log_b: T,
    pub d_log_x: Option<T>,
}

impl<T: Real> GradPair<T> {
    pub fn new(d_log_a: T, d_log_b: T) -> Self {
        GradPair {
            d_log_a,
            d_log_b,
            d_log_x: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.d_log_a.is_finite() && self.d_log_b.is_finite() && self.d_log_x.is_none_or(|g| g.is_finite())
    }
}

/// A point strictly inside (0, 1), stored as its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct UnitValue<T> {
    log_value: T,
}

impl<T: Real> UnitValue<T> {
    /// From `log x`, which must be finite and strictly negative.
    pub fn from_log(log_value: T) -> Result<Self> {
        if !(log_value < T::zero()) || !log_value.is_finite() {
            return domain("UnitValue", "log value finite and < 0 (x strictly inside (0, 1))", log_value.to_f64());
        }
        Ok(UnitValue { log_value })
    }

    /// From a linear value strictly inside (0, 1).
    pub fn new(x: T) -> Result<Self> {
        if !(x > T::zero() && x < T::one()) {
            return domain("UnitValue", "0 < x < 1", x.to_f64());
        }
        Self::from_log(x.ln())
    }

    #[inline]
    pub fn log_value(&self) -> T {
        self.log_value
    }

    /// Linear value; may underflow to 0 when `log_value` is very negative.
    #[inline]
    pub fn value(&self) -> T {
        self.log_value.exp()
    }

    /// `log(1 - x)`.
    #[inline]
    pub fn log_complement(&self) -> T {
        log1mexp_unchecked(self.log_value)
    }

    /// `1 - x`, accurate when `x` is close to 1.
    #[inline]
    pub fn complement(&self) -> T {
        -self.log_value.exp_m1()
    }
}

/// `log(1 - exp(c · v))` for `v < 0` and `c = exp(log_c)`.
///
/// When `c · v` is tiny it is taken as `log(-c v) + y/2 + y²/24` with
/// `log(-c v) = log_c + log(-v)`, which stays exact even after `c · v`
/// itself has underflowed.
#[inline]
pub(crate) fn log1mexp_scaled<T: Real>(log_c: T, c: T, v: T) -> T {
    let y = c * v;
    if y > -T::of(1e-5) {
        log_c + (-v).ln() + y * (T::of(0.5) + y / T::of(24.0))
    } else {
        log1mexp_unchecked(y)
    }
}

// `c * w` where a zero coefficient annihilates even an infinite `w`.
#[inline]
fn scaled<T: Real>(c: T, w: T) -> T {
    if c == T::zero() {
        T::zero()
    } else {
        c * w
    }
}

/// Log-density `log a + log b + (a - 1) log x + (b - 1) log(1 - x^a)`.
pub fn log_pdf<T: Real>(x: UnitValue<T>, p: &LogParams<T>) -> T {
    let a = p.a();
    let b = p.b();
    let lx = x.log_value();
    let w = log1mexp_scaled(p.log_a, a, lx);
    p.log_a + p.log_b + scaled(a - T::one(), lx) + scaled(b - T::one(), w)
}

/// CDF `1 - (1 - x^a)^b`, evaluated as `-expm1(b · log(1 - x^a))`.
pub fn cdf<T: Real>(x: UnitValue<T>, p: &LogParams<T>) -> T {
    let w = log1mexp_scaled(p.log_a, p.a(), x.log_value());
    -(p.b() * w).exp_m1()
}

/// Inverse CDF with `log F⁻¹(u) = a⁻¹ · log1mexp(b⁻¹ · log u)`.
///
/// This is the quantile of `1 - u`, i.e. `cdf(icdf(u)) = 1 - u`; the two
/// conventions give the same sampler, and this one keeps `log u` exact.
///
/// Fails only if `u^(1/b)` underflows in the working precision, which
/// leaves no representable value strictly below 1.
pub fn icdf<T: Real>(u: UnitValue<T>, p: &LogParams<T>) -> Result<UnitValue<T>> {
    let w = log1mexp_scaled(-p.log_b, (-p.log_b).exp(), u.log_value());
    let log_value = w * (-p.log_a).exp();
    if !(log_value < T::zero()) || !log_value.is_finite() {
        return domain("icdf", "result strictly inside (0, 1) in working precision", log_value.to_f64());
    }
    Ok(UnitValue { log_value })
}

/// Reparameterized draw: `icdf(u)` with `u` uniform on the open unit interval.
pub fn sample<T: Real, R: RngCore + ?Sized>(p: &LogParams<T>, rng: &mut R) -> Result<UnitValue<T>> {
    let u = UnitValue::from_log(T::open_unit(rng).ln())?;
    icdf(u, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lin(a: f64, b: f64) -> LogParams<f64> {
        LogParams::from_linear(a, b).unwrap()
    }

    fn x(v: f64) -> UnitValue<f64> {
        UnitValue::new(v).unwrap()
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(LogParams::new(f64::NAN, 0.0).is_err());
        assert!(LogParams::new(0.0, f64::INFINITY).is_err());
        assert!(LogParams::from_linear(0.0, 1.0).is_err());
        assert!(LogParams::from_linear(1.0, -2.0).is_err());
        assert!(BetaParams::new(0.0, 1.0).is_err());
        assert!(UnitValue::new(0.0f64).is_err());
        assert!(UnitValue::new(1.0f64).is_err());
        assert!(UnitValue::from_log(0.0f64).is_err());
        assert!(UnitValue::from_log(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn log_pdf_examples() {
        let uniform = LogParams::uniform();
        for v in [1e-9, 0.2, 0.5, 0.999] {
            assert_eq!(log_pdf(x(v), &uniform), 0.0);
        }
        assert!(log_pdf(x(0.5), &lin(2.0, 1.0)).abs() < 1e-15);
        // log(6 · 0.3 · 0.91²)
        assert!((log_pdf(x(0.3), &lin(2.0, 3.0)) - 0.399_165_305_959_636_354).abs() < 1e-12);
    }

    #[test]
    fn icdf_examples() {
        let z = icdf(x(0.25), &LogParams::uniform()).unwrap();
        assert!((z.value() - 0.75).abs() < 1e-15);
        let z = icdf(x(0.75), &lin(2.0, 2.0)).unwrap();
        assert!((z.value() - 0.366_025_403_784_438_6).abs() < 1e-12);
    }

    #[test]
    fn icdf_single_precision_no_underflow() {
        let p = LogParams::<f32>::new(0.0, 24.0 * std::f32::consts::LN_2).unwrap();
        let u = UnitValue::new(0.99f32).unwrap();
        let z = icdf(u, &p).unwrap();
        assert!(z.value() > 0.0);
        let naive = (1.0 - 0.99f32.powf(1.0 / (1u32 << 24) as f32)).powf(1.0);
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn cdf_examples() {
        let uniform = LogParams::uniform();
        assert!((cdf(x(0.3), &uniform) - 0.3).abs() < 1e-15);
        // icdf is the reflected quantile, so icdf(0.75) lands where F = 0.25
        assert!((cdf(x(0.366_025_403_784_438_6), &lin(2.0, 2.0)) - 0.25).abs() < 1e-12);
        let p = lin(2.0, 3.0);
        let mut prev = 1.0;
        for k in 1..40 {
            let c = cdf(x(0.5f64.powi(k)), &p);
            assert!(c < prev && c > 0.0);
            prev = c;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn icdf_rejects_unrepresentable_result() {
        // u^(1/b) underflows for tiny b, so F⁻¹(u) sits closer to 1 than any float.
        let p = LogParams::new(0.0f64, -8.0).unwrap();
        assert!(icdf(x(1e-3), &p).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = lin(2.0, 5.0);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| sample(&p, &mut rng).unwrap().log_value()).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    #[test]
    fn uniform_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let p = LogParams::<f64>::uniform();
        let mean: f64 = (0..n).map(|_| sample(&p, &mut rng).unwrap().value()).sum::<f64>() / n as f64;
        let se = (1.0 / 12.0f64).sqrt() / (n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn complement_accessors() {
        let z = x(1.0 - 1e-12);
        assert!((z.complement() - 1e-12).abs() < 1e-16);
        assert!((z.log_complement() - (1e-12f64).ln()).abs() < 1e-4);
    }

    #[test]
    fn subnormal_log_x_keeps_density_finite() {
        // log x = -5e-324: a · log x underflows to 0 for a < 1
        let p = LogParams::new(-5.0f64, -5.0).unwrap();
        let z = UnitValue::from_log(-5e-324f64).unwrap();
        let lx = -5e-324f64;
        let want = p.log_a + p.log_b + (p.a() - 1.0) * lx + (p.b() - 1.0) * (p.log_a + (-lx).ln());
        let got = log_pdf(z, &p);
        assert!((got - want).abs() < 1e-12 * want.abs(), "{got} vs {want}");
        assert!(cdf(z, &p) < 1.0);
        // ∂/∂log x is of order 1/|log x| and genuinely overflows here
        let g = grads::log_pdf_grads(z, &p);
        assert!(g.d_log_a.is_finite() && g.d_log_b.is_finite());
    }

    #[test]
    fn icdf_survives_underflowing_exponent() {
        // log u / b underflows to zero; the quantile still exists
        let p = LogParams::new(0.0f64, 700.0).unwrap();
        let u = UnitValue::from_log(-1e-10f64).unwrap();
        let z = icdf(u, &p).unwrap();
        assert!((z.log_value() - ((1e-10f64).ln() - 700.0)).abs() < 1e-12);
        let (ga, gb) = icdf_log_grads(u, &p);
        assert!(ga.log_abs.is_finite() && gb.log_abs.is_finite());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cdf_inverts_icdf_double(la in -5.0f64..5.0, lb in -5.0f64..5.0, u in 0.001f64..0.999) {
                let p = LogParams::new(la, lb).unwrap();
                let uv = UnitValue::new(u).unwrap();
                // a subnormal log x carries too few bits to invert
                if let Some(z) = icdf(uv, &p).ok().filter(|z| z.log_value().is_normal()) {
                    prop_assert!((cdf(z, &p) - (1.0 - u)).abs() <= 1e-10);
                }
            }

            #[test]
            fn cdf_inverts_icdf_single(la in -5.0f32..5.0, lb in -5.0f32..5.0, u in 0.001f32..0.999) {
                let p = LogParams::new(la, lb).unwrap();
                let uv = UnitValue::new(u).unwrap();
                if let Some(z) = icdf(uv, &p).ok().filter(|z| z.log_value().is_normal()) {
                    prop_assert!((cdf(z, &p) - (1.0 - u)).abs() <= 1e-5);
                }
            }

            #[test]
            fn icdf_decreasing_in_u(la in -5.0f64..5.0, lb in -3.0f64..5.0, u in 0.01f64..0.98, du in 1e-4f64..0.01) {
                let p = LogParams::new(la, lb).unwrap();
                let lo = icdf(UnitValue::new(u).unwrap(), &p).unwrap();
                let hi = icdf(UnitValue::new(u + du).unwrap(), &p).unwrap();
                prop_assert!(hi.log_value() < lo.log_value());
            }
        }
    }
}
