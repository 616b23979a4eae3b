//! Versioned CSV tables.
//!
//! Every table starts with one comment line naming its schema and version,
//! followed by the column header:
//!
//! ```text
//! # stableks-csv schema=log1mexp version=1
//! log2_abs_x,x,oracle,naive,stable,naive_rel_err,stable_rel_err
//! ```
//!
//! [`read_table`] refuses a file whose comment line or header differs from
//! the expected [`Schema`], so a column change without a version bump is
//! caught by anything that reads the output back.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Schema {
    pub name: &'static str,
    pub columns: &'static [&'static str],
}

impl Schema {
    pub fn comment_line(&self) -> String {
        format!("# stableks-csv schema={} version={SCHEMA_VERSION}", self.name)
    }
}

pub const LOG1MEXP: Schema = Schema {
    name: "log1mexp",
    columns: &["log2_abs_x", "x", "oracle", "naive", "stable", "naive_rel_err", "stable_rel_err"],
};

pub const ICDF: Schema = Schema {
    name: "icdf",
    columns: &["a", "log2_b", "u", "naive_x", "stable_x", "stable_log_x", "oracle_log_x"],
};

pub const LOG_PDF: Schema = Schema {
    name: "log-pdf",
    columns: &["a", "log2_b", "x", "naive_log_pdf", "stable_log_pdf", "oracle_log_pdf"],
};

pub const POINT_MASS: Schema = Schema {
    name: "point-mass",
    columns: &[
        "precision",
        "a",
        "log2_b",
        "draws",
        "naive_zero_fraction",
        "predicted_zero_fraction",
        "stable_boundary_fraction",
    ],
};

pub const DIST: Schema = Schema {
    name: "dist",
    columns: &["query", "argument", "log_a", "log_b", "value", "d_log_a", "d_log_b", "d_log_x"],
};

pub const SAMPLES: Schema = Schema {
    name: "samples",
    columns: &["index", "x", "log_x"],
};

pub const GRADCHECK: Schema = Schema {
    name: "gradcheck",
    columns: &["component", "log_a", "log_b", "point", "analytic", "fd", "rel_error", "abs_error", "pass"],
};

pub const TRACE: Schema = Schema {
    name: "trace",
    columns: &["step", "arm", "reward", "inst_regret", "cum_regret"],
};

pub const BANDIT_SUMMARY: Schema = Schema {
    name: "bandit-summary",
    columns: &[
        "policy",
        "runs",
        "mean_cum_regret",
        "std_cum_regret",
        "se_cum_regret",
        "expected_random_regret",
        "aborted_runs",
        "nonfinite_events",
    ],
};

pub const ORACLE: Schema = Schema {
    name: "oracle",
    columns: &["name", "value", "method"],
};

/// Where a table was written, for the run sidecar.
#[derive(Debug, Clone, Serialize)]
pub struct WrittenTable {
    pub path: PathBuf,
    pub schema: &'static str,
    pub schema_version: u32,
    pub rows: usize,
    pub sha256: String,
}

pub struct TableWriter {
    inner: csv::Writer<BufWriter<File>>,
    schema: Schema,
    path: PathBuf,
    rows: usize,
}

impl TableWriter {
    pub fn create(path: impl AsRef<Path>, schema: Schema) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", schema.comment_line())?;
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(schema.columns)?;
        Ok(TableWriter {
            inner,
            schema,
            path,
            rows: 0,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let record: csv::ByteRecord = fields.into_iter().collect();
        if record.len() != self.schema.columns.len() {
            bail!(
                "{} row has {} fields, schema has {}",
                self.schema.name,
                record.len(),
                self.schema.columns.len()
            );
        }
        self.inner.write_byte_record(&record)?;
        self.rows += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<WrittenTable> {
        let mut out = self.inner.into_inner().map_err(|e| e.into_error())?;
        out.flush()?;
        drop(out);
        let bytes = std::fs::read(&self.path)?;
        Ok(WrittenTable {
            path: self.path,
            schema: self.schema.name,
            schema_version: SCHEMA_VERSION,
            rows: self.rows,
            sha256: hex(&Sha256::digest(&bytes)),
        })
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads a table back, rejecting any schema or version drift.
pub fn read_table(path: impl AsRef<Path>, schema: Schema) -> Result<Vec<csv::StringRecord>> {
    let path = path.as_ref();
    let file = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let first = first.trim_end();
    if first != schema.comment_line() {
        bail!(
            "{}: expected schema line `{}`, found `{first}`",
            path.display(),
            schema.comment_line()
        );
    }
    let mut csv = csv::Reader::from_reader(reader);
    let header = csv.headers()?.clone();
    if header.iter().ne(schema.columns.iter().copied()) {
        bail!(
            "{}: columns {:?} do not match schema {} v{SCHEMA_VERSION} {:?}",
            path.display(),
            header.iter().collect::<Vec<_>>(),
            schema.name,
            schema.columns
        );
    }
    let mut rows = Vec::new();
    for r in csv.records() {
        rows.push(r?);
    }
    Ok(rows)
}

/// Shortest round-trip text for a float, in exponent form outside
/// `[1e-5, 1e16)`; `inf`, `-inf`, and `NaN` as is.
pub fn num(v: f64) -> String {
    let m = v.abs();
    if m != 0.0 && m.is_finite() && !(1e-5..1e16).contains(&m) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}
