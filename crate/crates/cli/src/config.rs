//! `--config FILE`: a flat JSON object whose keys name long options
//! (`max_iters` or `max-iters`). Keys not given on the command line are
//! spliced in as flags right after the subcommand.

use std::path::Path;

use anyhow::{bail, Context};
use clap::Parser;
use serde_json::Value;

use crate::Cli;

pub enum ParseError {
    Clap(clap::Error),
    Config(anyhow::Error),
}

/// Global options taking a value; their values are never the subcommand.
const VALUED_GLOBALS: [&str; 4] = ["--format", "--threads", "--config", "--kernel-tol"];

pub fn parse_with_config(argv: &[String]) -> Result<Cli, ParseError> {
    let Some(path) = config_path(argv) else {
        return Cli::try_parse_from(argv).map_err(ParseError::Clap);
    };
    let extra: Vec<String> = config_tokens(Path::new(&path))
        .map_err(ParseError::Config)?
        .into_iter()
        .filter(|(flag, _)| !argv.iter().any(|a| a == flag || a.starts_with(&format!("{flag}="))))
        .map(|(flag, value)| match value {
            Some(v) => format!("{flag}={v}"),
            None => flag,
        })
        .collect();
    let at = subcommand_position(argv).ok_or_else(|| {
        ParseError::Config(anyhow::anyhow!("could not locate the subcommand in the arguments"))
    })?;
    let mut spliced = argv[..=at].to_vec();
    spliced.extend(extra);
    spliced.extend_from_slice(&argv[at + 1..]);
    Cli::try_parse_from(spliced).map_err(ParseError::Clap)
}

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--" {
            return None;
        }
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn subcommand_position(argv: &[String]) -> Option<usize> {
    let mut k = 1;
    while k < argv.len() {
        let a = &argv[k];
        if VALUED_GLOBALS.contains(&a.as_str()) {
            k += 2;
        } else if a.starts_with('-') {
            k += 1;
        } else {
            return Some(k);
        }
    }
    None
}

/// `(flag, value)` pairs; switches carry no value.
fn config_tokens(path: &Path) -> anyhow::Result<Vec<(String, Option<String>)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let Value::Object(map) = value else {
        bail!("{}: expected a JSON object", path.display());
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            bail!("{}: nested config files are not supported", path.display());
        }
        match v {
            Value::Bool(true) => out.push((flag, None)),
            Value::Bool(false) | Value::Null => {}
            Value::Number(n) => out.push((flag, Some(n.to_string()))),
            Value::String(s) => out.push((flag, Some(s))),
            Value::Array(items) => {
                let parts: anyhow::Result<Vec<String>> = items
                    .iter()
                    .map(|x| match x {
                        Value::Number(n) => Ok(n.to_string()),
                        Value::String(s) => Ok(s.clone()),
                        _ => bail!("{key}: array entries must be numbers or strings"),
                    })
                    .collect();
                out.push((flag, Some(parts?.join(","))));
            }
            Value::Object(_) => bail!("{key}: nested objects are not supported"),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn finds_subcommand_after_globals() {
        assert_eq!(subcommand_position(&args("vring --threads 4 --direct-kernel hill --a 1")), Some(4));
        assert_eq!(subcommand_position(&args("vring --format csv")), None);
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"lambda": 2.0, "a": 3, "c": -1.5}"#).unwrap();
        let argv = args(&format!("vring --config {} hill --a 0.5", path.display()));
        let Ok(cli) = parse_with_config(&argv) else { panic!("parse failed") };
        let crate::Command::Hill(h) = cli.command else { panic!("wrong subcommand") };
        assert_eq!((h.lambda, h.a, h.c), (2.0, 0.5, -1.5));
    }
}
