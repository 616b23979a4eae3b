//! Closed-form summaries: entropy, moments, and KL divergence to a Beta.

use crate::error::{domain, Result};
use crate::quadrature::gauss_legendre;
use crate::real::Real;
use crate::scalar::{digamma_f64, log_beta_f64, trigamma_f64, EULER_GAMMA};

use super::{BetaParams, GradPair, LogParams};

/// Series length used when no explicit truncation is requested.
pub const DEFAULT_KL_TERMS: usize = 10;

/// Differential entropy
/// `1 - 1/b + (1 - 1/a)(γ + ψ(b + 1)) - log a - log b`.
pub fn entropy<T: Real>(p: &LogParams<T>) -> T {
    let (la, lb) = (p.log_a.to_f64(), p.log_b.to_f64());
    let b = lb.exp();
    // 1 - 1/a and 1 - 1/b without cancellation near a, b = 1
    let one_m_inv_a = -(-la).exp_m1();
    let one_m_inv_b = -(-lb).exp_m1();
    T::of(one_m_inv_b + one_m_inv_a * (EULER_GAMMA + digamma_f64(b + 1.0)) - la - lb)
}

/// Partials of [`entropy`] with respect to `(log a, log b)`.
pub fn entropy_grads<T: Real>(p: &LogParams<T>) -> GradPair<T> {
    let (la, lb) = (p.log_a.to_f64(), p.log_b.to_f64());
    let inv_a = (-la).exp();
    let inv_b = (-lb).exp();
    let b = lb.exp();
    let d_log_a = inv_a * (EULER_GAMMA + digamma_f64(b + 1.0)) - 1.0;
    let d_log_b = inv_b - (-la).exp_m1() * b * trigamma_f64(b + 1.0) - 1.0;
    GradPair::new(T::of(d_log_a), T::of(d_log_b))
}

/// Raw moment `E[Xⁿ] = b · B(1 + n/a, b)`.
pub fn moment<T: Real>(n: u32, p: &LogParams<T>) -> Result<T> {
    if n == 0 {
        return domain("moment", "n >= 1", 0.0);
    }
    let (la, lb) = (p.log_a.to_f64(), p.log_b.to_f64());
    let shape = 1.0 + n as f64 * (-la).exp();
    Ok(T::of((lb + log_beta_f64(shape, lb.exp())).exp()))
}

/// Gradient of [`moment`] with respect to `(log a, log b)`.
pub fn moment_grads<T: Real>(n: u32, p: &LogParams<T>) -> Result<GradPair<T>> {
    let m = moment(n, p)?.to_f64();
    let (la, lb) = (p.log_a.to_f64(), p.log_b.to_f64());
    let b = lb.exp();
    let r = n as f64 * (-la).exp();
    let psi_sum = digamma_f64(1.0 + r + b);
    Ok(GradPair::new(
        T::of(-m * r * (digamma_f64(1.0 + r) - psi_sum)),
        T::of(m * (1.0 + b * (digamma_f64(b) - psi_sum))),
    ))
}

// Everything in the KL expression except the infinite series.
fn kl_head(la: f64, lb: f64, alpha: f64, beta: f64) -> f64 {
    let a = la.exp();
    let b = lb.exp();
    (1.0 - alpha / a) * (-EULER_GAMMA - digamma_f64(b) - 1.0 / b) + la + lb + log_beta_f64(alpha, beta)
        - (b - 1.0) / b
}

// log of the m-th series term, B(m/a, b) / (m + ab)
#[inline]
fn log_series_term(m: f64, a: f64, b: f64) -> f64 {
    log_beta_f64(m / a, b) - (m + a * b).ln()
}

/// KL(q ‖ Beta(α, β)) for a Kumaraswamy `q`, with the series over
/// `E_q[log(1 - v)]` truncated after `terms` terms.
///
/// The truncation error decays only like `terms^{-b}`, so small `terms`
/// is biased unless `β = 1` or `b` is large; see [`kl_to_beta_converged`].
pub fn kl_to_beta<T: Real>(q: &LogParams<T>, p: &BetaParams<T>, terms: usize) -> Result<T> {
    if terms == 0 {
        return domain("kl_to_beta", "terms >= 1", 0.0);
    }
    let (la, lb) = (q.log_a.to_f64(), q.log_b.to_f64());
    let (alpha, beta) = (p.alpha.to_f64(), p.beta.to_f64());
    let (a, b) = (la.exp(), lb.exp());
    let series = if beta == 1.0 {
        0.0
    } else {
        (1..=terms).map(|m| log_series_term(m as f64, a, b).exp()).sum::<f64>()
    };
    Ok(T::of(kl_head(la, lb, alpha, beta) + (beta - 1.0) * b * series))
}

/// Partials of [`kl_to_beta`] (same truncation) with respect to `(log a, log b)`.
pub fn kl_to_beta_grads<T: Real>(
    q: &LogParams<T>,
    p: &BetaParams<T>,
    terms: usize,
) -> Result<GradPair<T>> {
    if terms == 0 {
        return domain("kl_to_beta_grads", "terms >= 1", 0.0);
    }
    let (la, lb) = (q.log_a.to_f64(), q.log_b.to_f64());
    let (alpha, beta) = (p.alpha.to_f64(), p.beta.to_f64());
    let (a, b) = (la.exp(), lb.exp());
    let psi_b = digamma_f64(b);
    let bracket = -EULER_GAMMA - psi_b - 1.0 / b;

    let (mut s, mut ds_a, mut ds_b) = (0.0, 0.0, 0.0);
    if beta != 1.0 {
        for m in 1..=terms {
            let m = m as f64;
            let t = log_series_term(m, a, b).exp();
            let ma = m / a;
            let psi_sum = digamma_f64(ma + b);
            let ab_frac = a * b / (m + a * b);
            s += t;
            ds_a += t * (-ma * (digamma_f64(ma) - psi_sum) - ab_frac);
            ds_b += t * (b * (psi_b - psi_sum) - ab_frac);
        }
    }
    let scale = (beta - 1.0) * b;
    let d_log_a = alpha / a * bracket + 1.0 + scale * ds_a;
    let d_log_b = (1.0 - alpha / a) * (1.0 / b - b * trigamma_f64(b)) + 1.0 - 1.0 / b
        + scale * (s + ds_b);
    Ok(GradPair::new(T::of(d_log_a), T::of(d_log_b)))
}

const EXPLICIT_TERMS: usize = 200;
const TAIL_NODES: usize = 48;

/// KL(q ‖ Beta(α, β)) with the full series: 200 explicit terms plus the
/// remaining tail from a midpoint Euler–Maclaurin estimate.
pub fn kl_to_beta_converged<T: Real>(q: &LogParams<T>, p: &BetaParams<T>) -> T {
    let (la, lb) = (q.log_a.to_f64(), q.log_b.to_f64());
    let (alpha, beta) = (p.alpha.to_f64(), p.beta.to_f64());
    let (a, b) = (la.exp(), lb.exp());
    if beta == 1.0 {
        return T::of(kl_head(la, lb, alpha, beta));
    }
    let explicit: f64 = (1..=EXPLICIT_TERMS)
        .map(|m| log_series_term(m as f64, a, b).exp())
        .sum();

    // Σ_{m > M} g(m) ≈ ∫_{M+1/2}^∞ g(t) dt + g'(M + 1/2) / 24.
    // With t = t0 · v^{-1/b} the integral becomes t0^{-b}/b · ∫₀¹ g(t) t^{1+b} dv,
    // whose integrand tends to Γ(b) a^b as v → 0.
    let t0 = EXPLICIT_TERMS as f64 + 0.5;
    let (nodes, weights) = gauss_legendre(TAIL_NODES);
    let integral: f64 = nodes
        .iter()
        .zip(&weights)
        .map(|(&v, &w)| {
            let t = t0 * (-v.ln() / b).exp();
            w * (log_series_term(t, a, b) + (1.0 + b) * t.ln()).exp()
        })
        .sum::<f64>()
        * (-b * t0.ln()).exp()
        / b;
    let g0 = log_series_term(t0, a, b).exp();
    let dlog_g0 = (digamma_f64(t0 / a) - digamma_f64(t0 / a + b)) / a - 1.0 / (t0 + a * b);
    let tail = integral + g0 * dlog_g0 / 24.0;

    T::of(kl_head(la, lb, alpha, beta) + (beta - 1.0) * b * (explicit + tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(a: f64, b: f64) -> LogParams<f64> {
        LogParams::from_linear(a, b).unwrap()
    }

    fn fd(f: impl Fn(f64) -> f64, at: f64) -> f64 {
        let h = 1e-6 * at.abs().max(1.0);
        (f(at + h) - f(at - h)) / (2.0 * h)
    }

    #[test]
    fn entropy_examples() {
        assert!(entropy(&LogParams::<f64>::uniform()).abs() < 1e-15);
        let want = 0.5 - std::f64::consts::LN_2;
        assert!((entropy(&lin(1.0, 2.0)) - want).abs() < 1e-14);
    }

    #[test]
    fn entropy_grads_examples() {
        for (a, b) in [(1.0, 1.0), (5.0, 0.5), (2.0, 3.0)] {
            let p = lin(a, b);
            let g = entropy_grads(&p);
            let fa = fd(|t| entropy(&LogParams::new(t, p.log_b).unwrap()), p.log_a);
            let fb = fd(|t| entropy(&LogParams::new(p.log_a, t).unwrap()), p.log_b);
            let tol = 1e-6 * fa.abs().max(1.0);
            assert!((g.d_log_a - fa).abs() < tol, "({a}, {b}) d_log_a {} vs {fa}", g.d_log_a);
            let tol = 1e-6 * fb.abs().max(1.0);
            assert!((g.d_log_b - fb).abs() < tol, "({a}, {b}) d_log_b {} vs {fb}", g.d_log_b);
        }
        // At a = 1: ∂H/∂log a = γ + ψ(b + 1) - 1
        let g = entropy_grads(&lin(1.0, 3.0));
        assert!((g.d_log_a - (EULER_GAMMA + digamma_f64(4.0) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn moment_examples() {
        let u = LogParams::<f64>::uniform();
        assert!((moment(1, &u).unwrap() - 0.5).abs() < 1e-15);
        assert!((moment(2, &u).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        // 2 · B(1.5, 2) = 8/15
        assert!((moment(1, &lin(2.0, 2.0)).unwrap() - 8.0 / 15.0).abs() < 1e-14);
        assert!(moment(0, &u).is_err());
    }

    #[test]
    fn moment_grads_match_fd() {
        for &(a, b) in &[(1.0, 1.0), (2.0, 3.0), (0.5, 7.0)] {
            let p = lin(a, b);
            for n in 1..=3 {
                let g = moment_grads(n, &p).unwrap();
                let fa = fd(|t| moment(n, &LogParams { log_a: t, log_b: p.log_b }).unwrap(), p.log_a);
                let fb = fd(|t| moment(n, &LogParams { log_a: p.log_a, log_b: t }).unwrap(), p.log_b);
                assert!((g.d_log_a - fa).abs() < 1e-7 * fa.abs().max(1.0), "{a} {b} {n}");
                assert!((g.d_log_b - fb).abs() < 1e-7 * fb.abs().max(1.0), "{a} {b} {n}");
            }
        }
    }

    #[test]
    fn kl_vanishes_for_matched_uniform() {
        let u = LogParams::<f64>::uniform();
        let flat = BetaParams::new(1.0, 1.0).unwrap();
        for terms in [1, 10, 100] {
            assert_eq!(kl_to_beta(&u, &flat, terms).unwrap(), 0.0);
        }
        assert!(kl_to_beta(&u, &flat, 0).is_err());
        assert_eq!(kl_to_beta_converged(&u, &flat), 0.0);
    }

    #[test]
    fn kl_matches_reference_series() {
        // Full-series values cross-checked against direct quadrature of q log(q/p) at 25 digits.
        let cases = [
            ((2.0, 3.0, 2.5, 3.5), 0.031_590_865_932_669_09, 0.014_826_380_418_183_509),
            ((1.0, 1.0, 1.0, 2.0), 0.306_852_819_440_054_7, 0.215_943_728_530_963_77),
            ((2.0, 2.0, 2.0, 2.0), 0.011_201_558_558_502_285, -0.014_689_217_332_273_59),
            ((0.5, 0.5, 0.5, 0.5), 0.004_886_005_009_97, 0.197_089_150_568_415_72),
        ];
        for ((a, b, al, be), full, ten) in cases {
            let q = lin(a, b);
            let p = BetaParams::new(al, be).unwrap();
            let t = kl_to_beta(&q, &p, 10).unwrap();
            assert!((t - ten).abs() < 1e-12, "truncated ({a},{b},{al},{be}): {t}");
            let c = kl_to_beta_converged(&q, &p);
            assert!((c - full).abs() < 1e-8, "converged ({a},{b},{al},{be}): {c} vs {full}");
        }
    }

    #[test]
    fn kl_grads_match_fd() {
        for ((a, b), (al, be)) in [((2.0, 3.0), (2.5, 3.5)), ((0.7, 1.4), (0.5, 2.0)), ((1.0, 1.0), (3.0, 1.0))] {
            let q = lin(a, b);
            let p = BetaParams::new(al, be).unwrap();
            let g = kl_to_beta_grads(&q, &p, 10).unwrap();
            let fa = fd(|t| kl_to_beta(&LogParams::new(t, q.log_b).unwrap(), &p, 10).unwrap(), q.log_a);
            let fb = fd(|t| kl_to_beta(&LogParams::new(q.log_a, t).unwrap(), &p, 10).unwrap(), q.log_b);
            assert!((g.d_log_a - fa).abs() < 1e-6 * fa.abs().max(1.0), "d_log_a {} vs {fa}", g.d_log_a);
            assert!((g.d_log_b - fb).abs() < 1e-6 * fb.abs().max(1.0), "d_log_b {} vs {fb}", g.d_log_b);
        }
    }
}
