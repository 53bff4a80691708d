use std::fs;
use std::path::Path;

use crate::error::{config, CliError};

/// Turns a `key = value` file into an argument vector.
///
/// `command` picks the subcommand; `out` maps to the output directory; every
/// other key becomes `--key value`, with underscores read as dashes. Blank
/// lines and lines starting with `#` are skipped.
pub fn argv(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Vec<String>, CliError> {
    let mut command = None;
    let mut rest = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config(format!("line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(config(format!("line {}: empty key", i + 1)));
        }
        if k == "command" {
            if command.replace(v.to_string()).is_some() {
                return Err(config("command given twice"));
            }
            continue;
        }
        rest.push(format!("--{}", k.replace('_', "-")));
        if !v.is_empty() {
            rest.push(v.to_string());
        }
    }
    let command = command.ok_or_else(|| config("missing key: command"))?;
    let mut out = vec!["slipflow".to_string(), command];
    out.extend(rest);
    Ok(out)
}
