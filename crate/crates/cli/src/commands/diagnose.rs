use anyhow::{bail, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use stableks::ks::{self, LogParams, UnitValue};
use stableks::naive::{naive_icdf, naive_log_pdf, NaiveParams};
use stableks::oracle::{log1mexp_oracle, RefDensity, UnitPoint};
use stableks::scalar::log1mexp;
use stableks::{Precision, Real};

use crate::args::DiagnoseArgs;
use crate::sidecar::Run;
use crate::table::{num, ICDF, LOG1MEXP, LOG_PDF, POINT_MASS};

#[derive(Debug, Serialize)]
pub struct DiagnoseSummary {
    pub precision: Precision,
    pub stable_log1mexp_max_rel_err: f64,
    pub stable_log1mexp_nonfinite: usize,
    pub naive_log1mexp_neg_inf: usize,
    /// Largest log2|x| at which the naive form returned -inf.
    pub naive_log1mexp_inf_onset_log2: Option<f64>,
    pub stable_icdf_nonfinite: usize,
    pub stable_log_pdf_nonfinite: usize,
    pub naive_zero_fraction: Vec<(f64, f64)>,
    pub stable_boundary_draws: usize,
    pub pass: bool,
}

/// Half an ulp below 1: `u^(1/b)` rounds to 1 once `|log u| / b` is under this.
fn half_ulp_below_one(p: Precision) -> f64 {
    match p {
        Precision::Single => 2f64.powi(-25),
        Precision::Double => 2f64.powi(-54),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| lo + step * i as f64)
}

pub fn run(run: &mut Run, args: &DiagnoseArgs) -> Result<DiagnoseSummary> {
    if args.points < 2 || args.curve_points < 2 {
        bail!("--points and --curve-points must be at least 2");
    }
    if !(args.log2_min < args.log2_max) {
        bail!("need --log2-min < --log2-max");
    }
    if let Some(a) = args.a.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
        bail!("a > 0 required, got {a}");
    }
    match args.precision.into() {
        Precision::Single => diagnose_in::<f32>(run, args),
        Precision::Double => diagnose_in::<f64>(run, args),
    }
}

fn rel_err(v: f64, truth: f64) -> f64 {
    if v == truth {
        0.0
    } else {
        ((v - truth) / truth).abs()
    }
}

fn diagnose_in<T: Real>(run: &mut Run, args: &DiagnoseArgs) -> Result<DiagnoseSummary> {
    let precision = T::PRECISION;
    let mut s = DiagnoseSummary {
        precision,
        stable_log1mexp_max_rel_err: 0.0,
        stable_log1mexp_nonfinite: 0,
        naive_log1mexp_neg_inf: 0,
        naive_log1mexp_inf_onset_log2: None,
        stable_icdf_nonfinite: 0,
        stable_log_pdf_nonfinite: 0,
        naive_zero_fraction: Vec::new(),
        stable_boundary_draws: 0,
        pass: false,
    };

    let mut t = run.table("diagnose_log1mexp.csv", LOG1MEXP)?;
    for l2 in linspace(args.log2_min, args.log2_max, args.points) {
        let x = T::of(-l2.exp2());
        let xf = x.to_f64();
        let truth = log1mexp_oracle(xf);
        let naive = (T::one() - x.exp()).ln().to_f64();
        let stable = log1mexp(x).map_or(f64::NAN, |v| v.to_f64());
        let (ne, se) = (rel_err(naive, truth), rel_err(stable, truth));
        if stable.is_finite() {
            s.stable_log1mexp_max_rel_err = s.stable_log1mexp_max_rel_err.max(se);
        } else {
            s.stable_log1mexp_nonfinite += 1;
        }
        if naive == f64::NEG_INFINITY {
            s.naive_log1mexp_neg_inf += 1;
            let onset = s.naive_log1mexp_inf_onset_log2.get_or_insert(l2);
            *onset = onset.max(l2);
        }
        t.row([num(l2), num(xf), num(truth), num(naive), num(stable), num(ne), num(se)])?;
    }
    run.record(t.finish()?);

    let b = T::of(args.log2_b.exp2());
    let log_b = T::of(args.log2_b * std::f64::consts::LN_2);

    let mut t = run.table("diagnose_icdf.csv", ICDF)?;
    for &a in &args.a {
        let naive = NaiveParams::new(T::of(a), b)?;
        let p = LogParams::new(T::of(a.ln()), log_b)?;
        let reference = RefDensity::new(&p.cast::<f64>());
        // u log-spaced over (1e-12, 1)
        for l10 in linspace(-12.0, 0.0, args.curve_points + 1).take(args.curve_points) {
            let u = T::of(10f64.powf(l10));
            let uf = u.to_f64();
            let nx = naive_icdf(u, &naive).to_f64();
            let stable = UnitValue::from_log(u.ln()).and_then(|u| ks::icdf(u, &p));
            let (sx, slx) = match stable {
                Ok(z) => (z.value().to_f64(), z.log_value().to_f64()),
                Err(_) => {
                    s.stable_icdf_nonfinite += 1;
                    (f64::NAN, f64::NAN)
                }
            };
            t.row([num(a), num(args.log2_b), num(uf), num(nx), num(sx), num(slx), num(reference.log_icdf(uf))])?;
        }
    }
    run.record(t.finish()?);

    let mut t = run.table("diagnose_log_pdf.csv", LOG_PDF)?;
    for &a in &args.a {
        let naive = NaiveParams::new(T::of(a), b)?;
        let p = LogParams::new(T::of(a.ln()), log_b)?;
        let reference = RefDensity::new(&p.cast::<f64>());
        for l10 in linspace(-12.0, 0.0, args.curve_points + 1).take(args.curve_points) {
            let x = T::of(10f64.powf(l10));
            let xf = x.to_f64();
            let nl = naive_log_pdf(x, &naive).to_f64();
            let sl = ks::log_pdf(UnitValue::new(x)?, &p).to_f64();
            if !sl.is_finite() {
                s.stable_log_pdf_nonfinite += 1;
            }
            let rl = reference.log_pdf(UnitPoint::from_log_x(xf.ln()));
            t.row([num(a), num(args.log2_b), num(xf), num(nl), num(sl), num(rl)])?;
        }
    }
    run.record(t.finish()?);

    let mut rng = ChaCha8Rng::seed_from_u64(run.cli.seed);
    let predicted = 1.0 - (-args.log2_b.exp2() * half_ulp_below_one(precision)).exp();
    let mut t = run.table("diagnose_point_mass.csv", POINT_MASS)?;
    for &a in &args.a {
        let naive = NaiveParams::new(T::of(a), b)?;
        let p = LogParams::new(T::of(a.ln()), log_b)?;
        let (mut zeros, mut boundary) = (0usize, 0usize);
        for _ in 0..args.draws {
            let u = T::open_unit(&mut rng);
            zeros += usize::from(naive_icdf(u, &naive) == T::zero());
            // the stable result lives in log space; only log x = 0 or -inf
            // would be a boundary hit, and icdf reports either as an error
            let ok = UnitValue::from_log(u.ln()).and_then(|u| ks::icdf(u, &p)).is_ok();
            boundary += usize::from(!ok);
        }
        let n = args.draws.max(1) as f64;
        let frac = zeros as f64 / n;
        s.naive_zero_fraction.push((a, frac));
        s.stable_boundary_draws += boundary;
        t.row([
            precision.to_string(),
            num(a),
            num(args.log2_b),
            args.draws.to_string(),
            num(frac),
            num(predicted),
            num(boundary as f64 / n),
        ])?;
    }
    run.record(t.finish()?);

    s.pass = s.stable_log1mexp_nonfinite == 0
        && s.stable_log1mexp_max_rel_err <= 1e-6
        && s.stable_icdf_nonfinite == 0
        && s.stable_log_pdf_nonfinite == 0;

    println!(
        "log1mexp: stable max rel err {:.3e}, {} non-finite; naive -inf at {} points{}",
        s.stable_log1mexp_max_rel_err,
        s.stable_log1mexp_nonfinite,
        s.naive_log1mexp_neg_inf,
        s.naive_log1mexp_inf_onset_log2
            .map(|o| format!(" (from log2|x| = {o:.2} down)"))
            .unwrap_or_default()
    );
    println!(
        "icdf / log-density: {} / {} non-finite stable values",
        s.stable_icdf_nonfinite, s.stable_log_pdf_nonfinite
    );
    for (a, frac) in &s.naive_zero_fraction {
        println!("point mass at a = {a}: naive zero fraction {frac:.4}");
    }
    println!(
        "{}: stable sampler boundary draws {}",
        if s.pass { "PASS" } else { "FAIL" },
        s.stable_boundary_draws
    );
    Ok(s)
}
