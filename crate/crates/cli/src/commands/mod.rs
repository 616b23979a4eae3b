pub mod bandit;
pub mod diagnose;
pub mod dist;
pub mod gradcheck;
pub mod oracle;
pub mod sample;

use anyhow::{bail, Result};
use stableks::{LogParams, Precision, Real};

use crate::args::ParamArgs;
use crate::table::num;

/// `(log a, log b)` from either the log-space or the linear flags.
pub fn log_params(p: &ParamArgs) -> Result<LogParams<f64>> {
    let log_a = match (p.log_a, p.a) {
        (Some(la), _) => la,
        (None, Some(a)) => LogParams::from_linear(a, 1.0)?.log_a,
        (None, None) => bail!("one of --log-a or --a is required"),
    };
    let log_b = match (p.log_b, p.b) {
        (Some(lb), _) => lb,
        (None, Some(b)) => LogParams::from_linear(1.0, b)?.log_b,
        (None, None) => bail!("one of --log-b or --b is required"),
    };
    Ok(LogParams::new(log_a, log_b)?)
}

/// Console form of a value: all digits an `f32` carries, or 15 significant
/// digits of an `f64`, so `0.7500000000000001` prints as `0.75`.
pub fn show<T: Real>(v: T) -> String {
    match T::PRECISION {
        // f32 values widen exactly, so the f32 text is the shortest one
        Precision::Single => {
            let v = v.to_f64() as f32;
            let rounded: f64 = format!("{v}").parse().unwrap_or(v as f64);
            num(rounded)
        }
        Precision::Double => {
            let v = v.to_f64();
            if !v.is_finite() {
                return num(v);
            }
            num(format!("{v:.14e}").parse().unwrap_or(v))
        }
    }
}
