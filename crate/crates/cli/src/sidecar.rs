use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::args::Cli;
use crate::config::ConfigEntry;
use crate::table::{Schema, TableWriter, WrittenTable, SCHEMA_VERSION};

/// Per-invocation state: output directory, the tables written so far, and
/// everything the sidecar needs to replay the run.
pub struct Run {
    pub cli: Cli,
    pub argv: Vec<String>,
    pub config_entries: Vec<ConfigEntry>,
    outputs: Vec<WrittenTable>,
    started: Instant,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    schema_version: u32,
    subcommand: &'static str,
    /// Arguments after merging the config file; replaying them reproduces the run.
    argv: &'a [String],
    seed: u64,
    config_entries: &'a [ConfigEntry],
    args: &'a Cli,
    outputs: &'a [WrittenTable],
    wall_clock_secs: f64,
    summary: Value,
}

impl Run {
    pub fn new(cli: Cli, argv: Vec<String>, config_entries: Vec<ConfigEntry>) -> Result<Self> {
        std::fs::create_dir_all(&cli.out_dir)
            .with_context(|| format!("cannot create output directory {}", cli.out_dir.display()))?;
        Ok(Run {
            cli,
            argv,
            config_entries,
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.cli.out_dir.join(file)
    }

    pub fn table(&self, file: &str, schema: Schema) -> Result<TableWriter> {
        TableWriter::create(self.path(file), schema)
    }

    pub fn record(&mut self, written: WrittenTable) {
        self.outputs.push(written);
    }

    pub fn outputs(&self) -> &[WrittenTable] {
        &self.outputs
    }

    /// Writes `<out-dir>/<subcommand>.json` and returns its path.
    pub fn finish(self, summary: impl Serialize) -> Result<PathBuf> {
        let name = self.cli.command.name();
        let sidecar = Sidecar {
            tool: "stableks",
            version: env!("CARGO_PKG_VERSION"),
            schema_version: SCHEMA_VERSION,
            subcommand: name,
            argv: &self.argv,
            seed: self.cli.seed,
            config_entries: &self.config_entries,
            args: &self.cli,
            outputs: &self.outputs,
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
            summary: serde_json::to_value(summary)?,
        };
        let path = self.path(&format!("{name}.json"));
        write_json(&path, &sidecar)?;
        Ok(path)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
