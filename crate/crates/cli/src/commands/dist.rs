use anyhow::Result;
use serde::Serialize;
use stableks::ks::{self, BetaParams, GradPair, LogParams, UnitValue};
use stableks::{Precision, Real};

use super::{log_params, show};
use crate::args::{DistArgs, Query};
use crate::sidecar::Run;
use crate::table::{num, DIST};

#[derive(Debug, Clone, Serialize)]
pub struct DistSummary {
    pub query: &'static str,
    pub argument: String,
    pub precision: Precision,
    pub log_a: f64,
    pub log_b: f64,
    pub value: f64,
    pub grads: Option<GradPair<f64>>,
}

fn point<T: Real>(v: f64, log_input: bool) -> Result<UnitValue<T>> {
    Ok(if log_input {
        UnitValue::from_log(T::of(v))?
    } else {
        UnitValue::new(T::of(v))?
    })
}

fn widen<T: Real>(g: GradPair<T>) -> GradPair<f64> {
    GradPair {
        d_log_a: g.d_log_a.to_f64(),
        d_log_b: g.d_log_b.to_f64(),
        d_log_x: g.d_log_x.map(Real::to_f64),
    }
}

fn evaluate<T: Real>(args: &DistArgs, p: &LogParams<T>) -> Result<(&'static str, String, T, GradPair<T>)> {
    let li = args.log_input;
    Ok(match &args.query {
        Query::Logpdf { x } => {
            let x_ = point::<T>(*x, li)?;
            ("logpdf", num(*x), ks::log_pdf(x_, p), ks::log_pdf_grads(x_, p))
        }
        Query::Icdf { u } => {
            let u_ = point::<T>(*u, li)?;
            let z = ks::icdf(u_, p)?;
            ("icdf", num(*u), z.value(), ks::icdf_grads(u_, p))
        }
        Query::Cdf { x } => {
            let x_ = point::<T>(*x, li)?;
            ("cdf", num(*x), ks::cdf(x_, p), ks::cdf_grads(x_, p))
        }
        Query::Entropy => ("entropy", String::new(), ks::entropy(p), ks::entropy_grads(p)),
        Query::Moment { n } => ("moment", n.to_string(), ks::moment(*n, p)?, ks::moment_grads(*n, p)?),
        Query::KlBeta { alpha, beta, terms } => {
            let prior = BetaParams::new(T::of(*alpha), T::of(*beta))?;
            (
                "kl-beta",
                format!("{alpha} {beta} terms={terms}"),
                ks::kl_to_beta(p, &prior, *terms)?,
                ks::kl_to_beta_grads(p, &prior, *terms)?,
            )
        }
    })
}

fn dist_in<T: Real>(args: &DistArgs) -> Result<DistSummary> {
    let p64 = log_params(&args.params)?;
    let p = LogParams::new(T::of(p64.log_a), T::of(p64.log_b))?;
    let (query, argument, value, grads) = evaluate(args, &p)?;
    println!("{}", show(value));
    if args.grad {
        println!("d_log_a {}", show(grads.d_log_a));
        println!("d_log_b {}", show(grads.d_log_b));
        if let Some(g) = grads.d_log_x {
            println!("d_log_x {}", show(g));
        }
    }
    Ok(DistSummary {
        query,
        argument,
        precision: T::PRECISION,
        log_a: p.log_a.to_f64(),
        log_b: p.log_b.to_f64(),
        value: value.to_f64(),
        grads: args.grad.then(|| widen(grads)),
    })
}

pub fn run(run: &mut Run, args: &DistArgs) -> Result<DistSummary> {
    let s = match args.precision.into() {
        Precision::Single => dist_in::<f32>(args)?,
        Precision::Double => dist_in::<f64>(args)?,
    };
    let mut t = run.table("dist.csv", DIST)?;
    let g = |f: fn(&GradPair<f64>) -> Option<f64>| s.grads.as_ref().and_then(f).map(num).unwrap_or_default();
    t.row([
        s.query.to_string(),
        s.argument.clone(),
        num(s.log_a),
        num(s.log_b),
        num(s.value),
        g(|g| Some(g.d_log_a)),
        g(|g| Some(g.d_log_b)),
        g(|g| g.d_log_x),
    ])?;
    run.record(t.finish()?);
    Ok(s)
}
