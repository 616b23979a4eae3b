//! `key = value` config files merged under command-line flags.
//!
//! Each key names a long flag of the chosen subcommand or a global flag;
//! `_` and `-` are interchangeable. Boolean flags take `true` or `false`.
//! The merge rewrites the argument list as
//!
//! ```text
//! stableks <subcommand> <flags from the file> <flags from the command line>
//! ```
//!
//! and relies on later occurrences overriding earlier ones.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, CommandFactory, Parser};
use serde::Serialize;

use crate::args::Cli;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected `key = value`, got `{line}`", i + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            bail!("config line {}: empty key", i + 1);
        }
        out.push(ConfigEntry {
            key,
            value: value.trim().to_string(),
            line: i + 1,
        });
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<Vec<ConfigEntry>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

/// The parsed command line plus the argument list it was parsed from.
pub struct Resolved {
    pub cli: Cli,
    pub argv: Vec<String>,
    pub config_entries: Vec<ConfigEntry>,
}

pub fn resolve(argv: Vec<OsString>) -> Result<Resolved, clap::Error> {
    let first = Cli::try_parse_from(&argv)?;
    let Some(path) = first.config.clone() else {
        return Ok(Resolved {
            cli: first,
            argv: lossy(&argv),
            config_entries: Vec::new(),
        });
    };
    let fail = |e: anyhow::Error| {
        Cli::command().error(clap::error::ErrorKind::InvalidValue, format!("{e:#}"))
    };
    let entries = load_config(&path).map_err(fail)?;
    let merged = merge(&argv, first.command.name(), &entries).map_err(fail)?;
    let cli = Cli::try_parse_from(&merged)?;
    Ok(Resolved {
        cli,
        argv: lossy(&merged),
        config_entries: entries,
    })
}

fn lossy(argv: &[OsString]) -> Vec<String> {
    argv.iter().map(|a| a.to_string_lossy().into_owned()).collect()
}

fn merge(argv: &[OsString], subcommand: &str, entries: &[ConfigEntry]) -> Result<Vec<OsString>> {
    let root = Cli::command();
    let sub = root
        .find_subcommand(subcommand)
        .ok_or_else(|| anyhow!("unknown subcommand {subcommand}"))?;

    let mut injected: Vec<OsString> = Vec::new();
    for e in entries {
        if e.key == "config" {
            bail!("config line {}: a config file cannot name another config file", e.line);
        }
        let arg = sub
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(e.key.as_str()))
            .ok_or_else(|| anyhow!("config line {}: unknown key `{}` for {subcommand}", e.line, e.key))?;
        match arg.get_action() {
            ArgAction::SetTrue => match e.value.as_str() {
                "true" => injected.push(format!("--{}", e.key).into()),
                "false" => {}
                v => bail!("config line {}: `{}` takes true or false, got `{v}`", e.line, e.key),
            },
            _ => {
                injected.push(format!("--{}", e.key).into());
                injected.push(e.value.clone().into());
            }
        }
    }

    // Drop the subcommand token from the user's arguments; values of
    // root-level options are skipped so `--out-dir dist` is not mistaken
    // for it.
    let takes_value = |tok: &str| {
        root.get_arguments().any(|a| {
            a.get_action().takes_values() && a.get_long().is_some_and(|l| tok == format!("--{l}"))
        })
    };
    let mut rest: Vec<OsString> = Vec::new();
    let mut found = false;
    let mut skip_next = false;
    let mut drop_value = false;
    for tok in argv.iter().skip(1) {
        let s = tok.to_string_lossy();
        // the file's contents are inlined above, so the path itself goes
        if drop_value {
            drop_value = false;
            skip_next = false;
            continue;
        }
        if s == "--config" {
            drop_value = true;
            continue;
        }
        if s.starts_with("--config=") {
            continue;
        }
        if !found && !skip_next && s == subcommand {
            found = true;
            continue;
        }
        skip_next = !found && !skip_next && takes_value(&s);
        rest.push(tok.clone());
    }
    if !found {
        bail!("could not locate subcommand {subcommand} in the arguments");
    }

    let mut out = vec![argv[0].clone(), subcommand.into()];
    out.extend(injected);
    out.extend(rest);
    Ok(out)
}
