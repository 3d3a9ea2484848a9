//! Config-file defaults.
//!
//! A TOML file whose keys mirror long flag names, e.g.
//!
//! ```toml
//! topics = 50          # applies to every command that has --topics
//! seed = 3
//!
//! [cv]
//! folds = 5            # applies to `cv` only
//! models = ["dmr", "lda"]
//! ```
//!
//! Settings become ordinary flags inserted directly after the subcommand
//! name, so anything given on the command line (which comes later and
//! overrides earlier occurrences) wins.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::CommandFactory;
use toml::{Table, Value};

use crate::args::Cli;

/// Global options that take a value and may precede the subcommand.
const GLOBAL_VALUE_FLAGS: [&str; 2] = ["--config", "--log-level"];

/// Returns `argv` with config-file settings expanded into flags and the
/// `--config` option removed.
pub fn resolve_argv(argv: &[String]) -> Result<Vec<String>> {
    let (config, mut argv) = extract_config(argv)?;
    let Some(path) = config else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let table: Table = text
        .parse()
        .with_context(|| format!("parsing config file {}", path.display()))?;
    let Some(position) = subcommand_position(&argv) else {
        return Ok(argv);
    };
    let flags = expand(&table, &argv[position])?;
    argv.splice(position + 1..position + 1, flags);
    Ok(argv)
}

fn extract_config(argv: &[String]) -> Result<(Option<PathBuf>, Vec<String>)> {
    let mut config = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut iter = argv.iter();
    while let Some(arg) = iter.next() {
        if arg == "--config" {
            let value = iter.next().context("--config needs a file name")?;
            config = Some(PathBuf::from(value));
        } else if let Some(value) = arg.strip_prefix("--config=") {
            config = Some(PathBuf::from(value));
        } else {
            rest.push(arg.clone());
        }
    }
    Ok((config, rest))
}

fn subcommand_position(argv: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let arg = &argv[i];
        if GLOBAL_VALUE_FLAGS.contains(&arg.as_str()) {
            i += 2;
        } else if arg.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

/// The flags a table contributes to `subcommand`.
fn expand(table: &Table, subcommand: &str) -> Result<Vec<String>> {
    let root = Cli::command();
    let Some(command) = root.find_subcommand(subcommand) else {
        return Ok(Vec::new());
    };
    let lookup = |key: &str| {
        command
            .get_arguments()
            .find(|a| a.get_long() == Some(key))
            .map(|a| a.get_action().takes_values())
    };
    let known_anywhere = |key: &str| {
        root.get_subcommands()
            .any(|c| c.get_arguments().any(|a| a.get_long() == Some(key)))
    };

    let mut flags = Vec::new();
    for (key, value) in table {
        if let Value::Table(section) = value {
            let Some(section_command) = root.find_subcommand(key) else {
                bail!("config section [{key}] does not name a command");
            };
            for k in section.keys() {
                if !section_command
                    .get_arguments()
                    .any(|a| a.get_long() == Some(k.as_str()))
                {
                    bail!("config key {k} in [{key}] is not a flag of `{key}`");
                }
            }
            if key != subcommand {
                continue;
            }
            for (k, v) in section {
                let takes_value = lookup(k).expect("checked above");
                push_flag(&mut flags, k, v, takes_value)?;
            }
        } else if let Some(takes_value) = lookup(key) {
            push_flag(&mut flags, key, value, takes_value)?;
        } else if !known_anywhere(key) {
            bail!("config key {key} does not match any flag");
        }
    }
    Ok(flags)
}

fn push_flag(flags: &mut Vec<String>, key: &str, value: &Value, takes_value: bool) -> Result<()> {
    if !takes_value {
        match value {
            Value::Boolean(true) => flags.push(format!("--{key}")),
            Value::Boolean(false) => {}
            other => bail!("config key {key} is a switch and needs true or false, got {other}"),
        }
        return Ok(());
    }
    let text = match value {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Boolean(b) => b.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                Value::Integer(i) => Ok(i.to_string()),
                Value::Float(f) => Ok(f.to_string()),
                other => bail!("config key {key}: unsupported list item {other}"),
            })
            .collect::<Result<Vec<_>>>()?
            .join(","),
        other => bail!("config key {key}: unsupported value {other}"),
    };
    flags.push(format!("--{key}={text}"));
    Ok(())
}
