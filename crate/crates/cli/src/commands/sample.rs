use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use stableks::ks::{self, LogParams, UnitValue};
use stableks::naive::{naive_icdf, NaiveParams};
use stableks::oracle::{ks_critical_1pct, ks_statistic};
use stableks::{Precision, Real};

use super::log_params;
use crate::args::{SampleArgs, SampleMethod};
use crate::sidecar::Run;
use crate::table::{num, SAMPLES};

#[derive(Debug, Clone, Serialize)]
pub struct SampleSummary {
    pub n: usize,
    pub method: SampleMethod,
    pub precision: Precision,
    pub mean: f64,
    /// Draws that landed on 0 or 1 exactly (or failed).
    pub boundary: usize,
    /// One-sample Kolmogorov-Smirnov statistic against the analytic CDF.
    pub ks_statistic: f64,
    pub ks_critical_1pct: f64,
}

fn sample_in<T: Real>(run: &mut Run, args: &SampleArgs) -> Result<SampleSummary> {
    let p64 = log_params(&args.params)?;
    let p = LogParams::new(T::of(p64.log_a), T::of(p64.log_b))?;
    let naive = NaiveParams::new(p.a(), p.b())?;
    let mut rng = ChaCha8Rng::seed_from_u64(run.cli.seed);
    let mut t = run.table("samples.csv", SAMPLES)?;
    let mut log_xs = Vec::with_capacity(args.n);
    let mut boundary = 0;
    for i in 0..args.n {
        let log_x = match args.method {
            SampleMethod::Stable => ks::sample(&p, &mut rng).map_or(f64::NAN, |z| z.log_value().to_f64()),
            SampleMethod::Naive => naive_icdf(T::open_unit(&mut rng), &naive).ln().to_f64(),
        };
        if !(log_x < 0.0) || !log_x.is_finite() {
            boundary += 1;
        }
        t.row([i.to_string(), num(log_x.exp()), num(log_x)])?;
        log_xs.push(log_x);
    }
    run.record(t.finish()?);

    let mean = log_xs.iter().map(|l| l.exp()).sum::<f64>() / args.n.max(1) as f64;
    // compare in log x so values near 0 keep their resolution
    let cdf = |lx: f64| {
        if lx.is_nan() {
            f64::NAN
        } else if lx == f64::NEG_INFINITY {
            0.0
        } else if lx >= 0.0 {
            1.0
        } else {
            UnitValue::from_log(lx).map_or(f64::NAN, |x| ks::cdf(x, &p64))
        }
    };
    let stat = if args.n > 0 {
        ks_statistic(&mut log_xs, cdf)
    } else {
        f64::NAN
    };
    Ok(SampleSummary {
        n: args.n,
        method: args.method,
        precision: T::PRECISION,
        mean,
        boundary,
        ks_statistic: stat,
        ks_critical_1pct: ks_critical_1pct(args.n.max(1)),
    })
}

pub fn run(run: &mut Run, args: &SampleArgs) -> Result<SampleSummary> {
    let s = match args.precision.into() {
        Precision::Single => sample_in::<f32>(run, args)?,
        Precision::Double => sample_in::<f64>(run, args)?,
    };
    println!(
        "{} draws, mean {:.6}, {} at the boundary, KS statistic {:.5} (1% critical {:.5})",
        s.n, s.mean, s.boundary, s.ks_statistic, s.ks_critical_1pct
    );
    Ok(s)
}
