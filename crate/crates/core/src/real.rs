//! Floating-point carrier shared by every numerical routine.
//!
//! Precision is selected by type: `f32` routines run entirely in single
//! precision and `f64` routines in double, so diagnostics can reproduce
//! single-precision failure modes bit for bit.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst};
use rand::RngCore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

impl Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Precision::Single => f.write_str("single"),
            Precision::Double => f.write_str("double"),
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" | "f32" => Ok(Precision::Single),
            "double" | "f64" => Ok(Precision::Double),
            other => Err(format!("unknown precision `{other}` (expected single or double)")),
        }
    }
}

pub trait Real:
    Float + FloatConst + Debug + Display + Default + Send + Sync + std::iter::Sum + 'static
{
    const PRECISION: Precision;

    /// Unit roundoff (half an ulp at 1).
    const HALF_EPSILON: Self;

    fn of(v: f64) -> Self;

    fn to_f64(self) -> f64;

    /// Uniform draw from the open interval (0, 1) on the type's native
    /// grid; exact zero is rejected and redrawn.
    fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f32 {
    const PRECISION: Precision = Precision::Single;
    const HALF_EPSILON: f32 = f32::EPSILON / 2.0;

    #[inline]
    fn of(v: f64) -> f32 {
        v as f32
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f32 {
        loop {
            let bits = rng.next_u32() >> 8;
            if bits != 0 {
                return bits as f32 * (1.0 / (1u32 << 24) as f32);
            }
        }
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Double;
    const HALF_EPSILON: f64 = f64::EPSILON / 2.0;

    #[inline]
    fn of(v: f64) -> f64 {
        v
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
        loop {
            let bits = rng.next_u64() >> 11;
            if bits != 0 {
                return bits as f64 * (1.0 / (1u64 << 53) as f64);
            }
        }
    }
}
