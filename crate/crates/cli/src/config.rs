//! Flat `key=value` configuration files.
//!
//! Keys are long flag names without the leading dashes. Values from the
//! file are spliced into the argument list in front of the user's own
//! flags, so flags given on the command line win.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;

use crate::{usage, CliResult};

pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key=value", n + 1)))?;
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() {
            return Err(usage(format!("config line {}: empty key", n + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text)
}

/// Finds `--config FILE` or `--config=FILE` in raw arguments.
pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Inserts config entries right after the subcommand name. `accepts`
/// tells which keys the subcommand knows; keys known to no subcommand are
/// rejected, keys for other subcommands are skipped. Boolean switches take
/// `true`/`false`.
pub fn splice_config(
    args: &[String],
    subcommand_pos: usize,
    config: &BTreeMap<String, String>,
    accepts: impl Fn(&str) -> Option<bool>,
    known_anywhere: impl Fn(&str) -> bool,
) -> CliResult<Vec<String>> {
    let mut extra = Vec::new();
    for (k, v) in config {
        match accepts(k) {
            Some(true) => extra.push(format!("--{k}={v}")),
            Some(false) => match v.as_str() {
                "true" | "1" | "yes" => extra.push(format!("--{k}")),
                "false" | "0" | "no" => {}
                other => return Err(usage(format!("config key {k} is a switch, got {other:?}"))),
            },
            None if known_anywhere(k) => {}
            None => return Err(usage(format!("unknown config key {k:?}"))),
        }
    }
    let mut out = args[..=subcommand_pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[subcommand_pos + 1..]);
    Ok(out)
}
