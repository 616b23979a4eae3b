//! Precision-safe scalar building blocks.
//!
//! Every function is generic over [`Real`]; calling it at `f32` or `f64`
//! selects the working precision. `log1p`, `expm1`, and `log1mexp` are
//! evaluated natively in that precision. The gamma-family functions are
//! evaluated in double and rounded, since a single-precision lgamma adds
//! nothing but error.

use crate::error::{domain, Result};
use crate::real::Real;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;

/// `log(1 + x)` for `x > -1`.
pub fn log1p<T: Real>(x: T) -> Result<T> {
    if !(x > -T::one()) {
        return domain("log1p", "x > -1", x.to_f64());
    }
    Ok(x.ln_1p())
}

/// `exp(x) - 1`, accurate for small `|x|`. Overflow follows IEEE semantics.
#[inline]
pub fn expm1<T: Real>(x: T) -> T {
    x.exp_m1()
}

/// `log(1 - exp(x))` for `x < 0`.
///
/// Uses `log(-expm1(x))` on `[-log 2, 0)` and `log1p(-exp(x))` below
/// `-log 2`; each form is accurate where the other cancels.
pub fn log1mexp<T: Real>(x: T) -> Result<T> {
    if !(x < T::zero()) {
        return domain("log1mexp", "x < 0", x.to_f64());
    }
    Ok(log1mexp_unchecked(x))
}

#[inline]
pub(crate) fn log1mexp_unchecked<T: Real>(x: T) -> T {
    if x >= -T::LN_2() {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Digamma ψ(x) for `x > 0`.
pub fn digamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return domain("digamma", "x > 0", x.to_f64());
    }
    Ok(T::of(digamma_f64(x.to_f64())))
}

/// Trigamma ψ'(x) for `x > 0`.
pub fn trigamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return domain("trigamma", "x > 0", x.to_f64());
    }
    Ok(T::of(trigamma_f64(x.to_f64())))
}

/// `log Γ(x)` for `x > 0`.
pub fn lgamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return domain("lgamma", "x > 0", x.to_f64());
    }
    Ok(T::of(lgamma_f64(x.to_f64())))
}

/// `log B(p, q)` for `p, q > 0`.
pub fn log_beta<T: Real>(p: T, q: T) -> Result<T> {
    if !(p > T::zero()) {
        return domain("log_beta", "p > 0", p.to_f64());
    }
    if !(q > T::zero()) {
        return domain("log_beta", "q > 0", q.to_f64());
    }
    Ok(T::of(log_beta_f64(p.to_f64(), q.to_f64())))
}

// Below this the argument is shifted up with the recurrence before the
// asymptotic series is applied.
const ASYMPTOTIC_FROM: f64 = 6.0;

// Bernoulli numbers B_2 ..= B_24. Twelve terms keep the truncation error of
// both asymptotic series below 1e-15 at x = 6.
const BERNOULLI_EVEN: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

pub(crate) fn digamma_f64(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_FROM {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    // Σ B_2k / (2k x^2k), Horner in r
    let series = BERNOULLI_EVEN
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |s, (i, b)| (s + b / (2 * i + 2) as f64) * r);
    acc + x.ln() - 0.5 / x - series
}

pub(crate) fn trigamma_f64(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_FROM {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    // Σ B_2k / x^(2k+1)
    let series = BERNOULLI_EVEN.iter().rev().fold(0.0, |s, b| (s + b) * r) / x;
    acc + 1.0 / x + 0.5 * r + series
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_741_8;

pub(crate) fn lgamma_f64(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps small arguments away from the reflection formula.
        return lgamma_f64(x + 1.0) - x.ln();
    }
    let x = x - 1.0;
    let mut sum = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (x + 0.5) * t.ln() - t + sum.ln()
}

/// Remainder of Stirling's series, `lgamma(x) - [(x - 1/2) ln x - x + ln √(2π)]`,
/// for `x >= 10`.
fn stirling_remainder(x: f64) -> f64 {
    let r = 1.0 / (x * x);
    (1.0 / 12.0 - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r * (1.0 / 1680.0)))) / x
}

const STIRLING_FROM: f64 = 10.0;

pub(crate) fn log_beta_f64(p: f64, q: f64) -> f64 {
    let (small, large) = if p < q { (p, q) } else { (q, p) };
    if large < STIRLING_FROM {
        return lgamma_f64(small) + lgamma_f64(large) - lgamma_f64(small + large);
    }
    // lgamma(large) - lgamma(small + large) without cancelling two huge values.
    let sum = small + large;
    let diff = -(large - 0.5) * (small / large).ln_1p() - small * sum.ln()
        + small
        + stirling_remainder(large)
        - stirling_remainder(sum);
    if small < STIRLING_FROM {
        lgamma_f64(small) + diff
    } else {
        // Both large: expand lgamma(small) as well.
        (small - 0.5) * small.ln() - small + HALF_LN_TWO_PI + stirling_remainder(small) + diff
    }
}
