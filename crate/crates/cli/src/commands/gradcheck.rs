use anyhow::{bail, Result};
use serde::Serialize;
use stableks::ks::{self, GradPair, LogParams, UnitValue};
use stableks::oracle::{gradcheck_sweep, GradFormulas, GradGrid, Stencil};

use crate::args::{GradcheckArgs, StencilArg};
use crate::sidecar::Run;
use crate::table::{num, GRADCHECK};

#[derive(Debug, Clone, Serialize)]
pub struct ComponentWorst {
    pub component: String,
    pub rel_error: f64,
    pub abs_error: f64,
    pub log_a: f64,
    pub log_b: f64,
    pub point: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckSummary {
    pub entries: usize,
    pub failures: usize,
    pub worst: Vec<ComponentWorst>,
    pub pass: bool,
}

// Negative control: the log b component is off by one.
fn corrupted_log_pdf_grads(x: UnitValue<f64>, p: &LogParams<f64>) -> GradPair<f64> {
    let mut g = ks::log_pdf_grads(x, p);
    g.d_log_b += 1.0;
    g
}

pub fn run(run: &mut Run, args: &GradcheckArgs) -> Result<GradcheckSummary> {
    if let Some(v) = args.points.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        bail!("--points must lie strictly inside (0, 1), got {v}");
    }
    if !(args.rel_step > 0.0) {
        bail!("--rel-step must be positive");
    }
    let grid = GradGrid {
        log_params: args.log_params.clone(),
        points: args.points.clone(),
    };
    let mut formulas = GradFormulas::default();
    if args.corrupt {
        formulas.log_pdf_grads = corrupted_log_pdf_grads;
    }
    let stencil = match args.stencil {
        StencilArg::Central2 => Stencil::Central2,
        StencilArg::Central4 => Stencil::Central4,
    };
    let report = gradcheck_sweep(&grid, &formulas, stencil, args.rel_step);

    let mut t = run.table("gradcheck.csv", GRADCHECK)?;
    for e in &report.entries {
        t.row([
            e.component.clone(),
            num(e.log_a),
            num(e.log_b),
            e.point.map(num).unwrap_or_default(),
            num(e.analytic),
            num(e.fd),
            num(e.rel_error),
            num(e.abs_error),
            e.passes(args.rel_tol, args.abs_tol).to_string(),
        ])?;
    }
    run.record(t.finish()?);

    let worst: Vec<ComponentWorst> = report
        .worst_by_component()
        .into_iter()
        .map(|(c, e)| ComponentWorst {
            component: c.to_string(),
            rel_error: e.rel_error,
            abs_error: e.abs_error,
            log_a: e.log_a,
            log_b: e.log_b,
            point: e.point,
        })
        .collect();
    let failures = report.failures(args.rel_tol, args.abs_tol).count();
    for w in &worst {
        let at = w.point.map(|p| format!(", point {p}")).unwrap_or_default();
        println!(
            "{:<16} worst rel err {:.3e} (abs {:.1e}) at log a {}, log b {}{at}",
            w.component, w.rel_error, w.abs_error, w.log_a, w.log_b
        );
    }
    let pass = failures == 0;
    println!(
        "{}: {} entries, {failures} over rel tol {:e}",
        if pass { "PASS" } else { "FAIL" },
        report.entries.len(),
        args.rel_tol
    );
    Ok(GradcheckSummary {
        entries: report.entries.len(),
        failures,
        worst,
        pass,
    })
}
