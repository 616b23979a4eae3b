use anyhow::Result;
use serde::Serialize;
use stableks::oracle::derived_values;

use crate::sidecar::Run;
use crate::table::{num, ORACLE};

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub values: usize,
}

pub fn run(run: &mut Run) -> Result<OracleSummary> {
    let values = derived_values(run.cli.seed)?;
    let mut t = run.table("oracle.csv", ORACLE)?;
    for v in &values {
        t.row([v.name.to_string(), num(v.value), v.method.to_string()])?;
        println!("{:<44} {:<24} {}", v.name, num(v.value), v.method);
    }
    run.record(t.finish()?);
    Ok(OracleSummary { values: values.len() })
}
