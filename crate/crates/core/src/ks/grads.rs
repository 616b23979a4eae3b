use crate::real::Real;

use super::{log1mexp_scaled, scaled, GradPair, LogParams, UnitValue};

/// A signed quantity held as `sign · exp(log_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogGrad<T> {
    pub log_abs: T,
    pub negative: bool,
}

impl<T: Real> LogGrad<T> {
    #[inline]
    pub fn value(&self) -> T {
        let m = self.log_abs.exp();
        if self.negative {
            -m
        } else {
            m
        }
    }

    /// `self / exp(log_divisor)`, staying in log space.
    #[inline]
    pub fn div_exp(&self, log_divisor: T) -> T {
        let m = (self.log_abs - log_divisor).exp();
        if self.negative {
            -m
        } else {
            m
        }
    }
}

/// Gradients of the log-density with respect to `log a`, `log b`, and `log x`.
pub fn log_pdf_grads<T: Real>(x: UnitValue<T>, p: &LogParams<T>) -> GradPair<T> {
    let one = T::one();
    let a = p.a();
    let b = p.b();
    let lx = x.log_value();
    let alx = a * lx;
    let w = log1mexp_scaled(p.log_a, a, lx);
    // -a log x · x^a / (1 - x^a), formed in log space; tends to 1 as x → 1
    // even after a log x underflows
    let odds_term = (p.log_a + (-lx).ln() + alx - w).exp();
    let d_log_x = (a - one) - scaled(b - one, (alx - w + p.log_a).exp());
    let d_log_a = one + alx + scaled(b - one, odds_term);
    let d_log_b = one + b * w;
    GradPair {
        d_log_a,
        d_log_b,
        d_log_x: Some(d_log_x),
    }
}

/// Gradients of the CDF with respect to `log a`, `log b`, and `log x`.
///
/// With `w = log(1 - x^a)` and survival `exp(b w)`, each component is one
/// exponent, so none of them overflow before the result does.
pub fn cdf_grads<T: Real>(x: UnitValue<T>, p: &LogParams<T>) -> GradPair<T> {
    let b = p.b();
    let lx = x.log_value();
    let alx = p.a() * lx;
    let w = log1mexp_scaled(p.log_a, p.a(), lx);
    let log_s = b * w;
    let d_log_x = (log_s + p.log_b + p.log_a + alx - w).exp();
    GradPair {
        d_log_a: -(log_s + p.log_b + p.log_a + (-lx).ln() + alx - w).exp(),
        d_log_b: (log_s + p.log_b + (-w).ln()).exp(),
        d_log_x: Some(d_log_x),
    }
}

/// Log-magnitudes of `∂F⁻¹/∂log a` (positive) and `∂F⁻¹/∂log b` (negative).
///
/// Each is a single exponent assembled in log space, with the sign applied
/// last; composing the factors one by one loses the result for extreme `b`.
pub fn icdf_log_grads<T: Real>(u: UnitValue<T>, p: &LogParams<T>) -> (LogGrad<T>, LogGrad<T>) {
    let lu = u.log_value();
    let inv_a = (-p.log_a).exp();
    let s = lu * (-p.log_b).exp();
    let w = log1mexp_scaled(-p.log_b, (-p.log_b).exp(), lu);
    let d_a = LogGrad {
        log_abs: -p.log_a + inv_a * w + (-w).ln(),
        negative: false,
    };
    let d_b = LogGrad {
        log_abs: -p.log_a - p.log_b + s + (inv_a - T::one()) * w + (-lu).ln(),
        negative: true,
    };
    (d_a, d_b)
}

/// Gradients of the inverse CDF `F⁻¹(u)` with respect to `(log a, log b)`.
pub fn icdf_grads<T: Real>(u: UnitValue<T>, p: &LogParams<T>) -> GradPair<T> {
    let (d_a, d_b) = icdf_log_grads(u, p);
    GradPair::new(d_a.value(), d_b.value())
}

#[cfg(test)]
mod tests {
    use super::super::{icdf, log_pdf};
    use super::*;

    fn x(v: f64) -> UnitValue<f64> {
        UnitValue::new(v).unwrap()
    }

    // Central differences in one log-coordinate; test-local so the module
    // oracle is not the only check.
    fn fd(f: impl Fn(f64) -> f64, at: f64) -> f64 {
        let h = 1e-6 * at.abs().max(1.0);
        (f(at + h) - f(at - h)) / (2.0 * h)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
    }

    #[test]
    fn cdf_grads_match_fd() {
        use super::super::cdf;
        for &(la, lb) in &[(0.0, 0.0), (0.7, 1.1), (-1.5, 2.0), (2.0, -1.0)] {
            for &v in &[0.01, 0.3, 0.9] {
                let p = LogParams { log_a: la, log_b: lb };
                let g = cdf_grads(x(v), &p);
                let fa = fd(|t| cdf(x(v), &LogParams { log_a: t, log_b: lb }), la);
                let fb = fd(|t| cdf(x(v), &LogParams { log_a: la, log_b: t }), lb);
                let fx = fd(|t| cdf(UnitValue::from_log(t).unwrap(), &p), v.ln());
                // where F saturates at 1 the difference quotient is 0
                let ok = |g: f64, f: f64| rel(g, f) < 1e-6 || (g - f).abs() < 1e-9;
                assert!(ok(g.d_log_a, fa), "{la} {lb} {v}: {} vs {fa}", g.d_log_a);
                assert!(ok(g.d_log_b, fb), "{la} {lb} {v}: {} vs {fb}", g.d_log_b);
                assert!(ok(g.d_log_x.unwrap(), fx), "{la} {lb} {v}");
            }
        }
    }

    #[test]
    fn uniform_log_pdf_grads() {
        let p = LogParams::uniform();
        for v in [0.01, 0.3, 0.9] {
            let g = log_pdf_grads(x(v), &p);
            assert_eq!(g.d_log_x, Some(0.0));
            assert!((g.d_log_b - (1.0 + (1.0 - v).ln())).abs() < 1e-15);
        }
    }

    #[test]
    fn log_pdf_grads_match_fd() {
        let p = LogParams::from_linear(2.0, 3.0).unwrap();
        let lx = 0.3f64.ln();
        let g = log_pdf_grads(x(0.3), &p);
        let fx = fd(|t| log_pdf(UnitValue::from_log(t).unwrap(), &p), lx);
        let fa = fd(|t| log_pdf(x(0.3), &LogParams::new(t, p.log_b).unwrap()), p.log_a);
        let fb = fd(|t| log_pdf(x(0.3), &LogParams::new(p.log_a, t).unwrap()), p.log_b);
        assert!(rel(g.d_log_x.unwrap(), fx) < 1e-6);
        assert!(rel(g.d_log_a, fa) < 1e-6);
        assert!(rel(g.d_log_b, fb) < 1e-6);
    }

    #[test]
    fn icdf_grads_uniform() {
        let g = icdf_grads(x(0.5), &LogParams::uniform());
        // u · log u at a = b = 1
        assert!((g.d_log_b - 0.5 * 0.5f64.ln()).abs() < 1e-15);
        assert!((g.d_log_b + 0.346_573_590_279_972_65).abs() < 1e-15);
    }

    #[test]
    fn icdf_grads_match_fd() {
        let p = LogParams::from_linear(2.0, 3.0).unwrap();
        let g = icdf_grads(x(0.9), &p);
        let fa = fd(|t| icdf(x(0.9), &LogParams::new(t, p.log_b).unwrap()).unwrap().value(), p.log_a);
        let fb = fd(|t| icdf(x(0.9), &LogParams::new(p.log_a, t).unwrap()).unwrap().value(), p.log_b);
        assert!(rel(g.d_log_a, fa) < 1e-6);
        assert!(rel(g.d_log_b, fb) < 1e-6);
    }

    #[test]
    fn icdf_grads_finite_where_naive_underflows() {
        let p = LogParams::<f32>::new(2.0f32.ln(), 24.0 * std::f32::consts::LN_2).unwrap();
        // log u > -1/2: u^(1/b) rounds to 1 in single precision
        let u = UnitValue::new(0.8f32).unwrap();
        let g = icdf_grads(u, &p);
        assert!(g.is_finite());
        assert!(g.d_log_a > 0.0 && g.d_log_b < 0.0);
    }

    #[test]
    fn log_grad_division() {
        let g = LogGrad {
            log_abs: 3.0f64,
            negative: true,
        };
        assert!((g.value() + 3.0f64.exp()).abs() < 1e-12);
        assert!((g.div_exp(1.0) + 2.0f64.exp()).abs() < 1e-12);
    }
}
