//! Flat `key = value` configuration files.
//!
//! Every entry becomes the long flag `--key value`, spliced in front of the
//! command-line flags so that later (command-line) occurrences win. Keys may
//! use `_` or `-`; `true`/`false` toggle boolean flags.

use std::path::Path;

use crate::Failure;

/// Names of flags that take no value.
const SWITCHES: [&str; 1] = ["no-cache"];

pub fn parse(text: &str) -> Result<Vec<String>, Failure> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Failure::Usage(format!("config line {}: expected key = value", i + 1))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(Failure::Usage(format!(
                "config line {}: invalid key '{key}'",
                i + 1
            )));
        }
        if SWITCHES.contains(&key.as_str()) {
            match value {
                "true" => args.push(format!("--{key}")),
                "false" => {}
                _ => {
                    return Err(Failure::Usage(format!(
                        "config line {}: {key} takes true or false",
                        i + 1
                    )))
                }
            }
        } else {
            args.push(format!("--{key}={value}"));
        }
    }
    Ok(args)
}

/// Returns `argv` with the entries of any `--config <file>` inserted right
/// after the subcommand.
pub fn expand(argv: Vec<String>) -> Result<Vec<String>, Failure> {
    let mut path = None;
    let mut it = argv.iter().skip(2);
    while let Some(a) = it.next() {
        if a == "--config" {
            path = it.next().cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| Failure::Usage(format!("cannot read config file {path}: {e}")))?;
    let mut out: Vec<String> = argv[..2].to_vec();
    out.extend(parse(&text)?);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}
