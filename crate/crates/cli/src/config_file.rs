//! Overlays `key = value` pairs from a TOML file onto the command line.
//!
//! Keys are flag names with dashes written as underscores. A key is turned
//! into `--flag=value` and appended to the arguments unless the flag was
//! already given on the command line, so the file only fills gaps and the
//! merged arguments go through the same parser and validation as typed ones.

use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

use crate::Failure;

fn scalar(key: &str, value: &toml::Value) -> Result<String, Failure> {
    match value {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        toml::Value::Array(items) => Ok(items
            .iter()
            .map(|v| scalar(key, v))
            .collect::<Result<Vec<_>, _>>()?
            .join(",")),
        _ => Err(Failure::Usage(format!("config key `{key}` must be a string, number, boolean or list"))),
    }
}

/// Returns `args` with flags from `path` appended.
pub fn overlay(root: &Command, matches: &ArgMatches, path: &Path, mut args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Failure::Usage(format!("config file {}: {e}", path.display())))?;
    let (sub_name, sub_matches) = matches.subcommand().expect("a subcommand is required");
    let sub = root.find_subcommand(sub_name).expect("parsed subcommand exists");

    for (key, value) in &table {
        let long = key.replace('_', "-");
        let arg = sub
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(long.as_str()) && a.get_id() != "config")
            .ok_or_else(|| Failure::Usage(format!("unknown config key `{key}` for `{sub_name}`")))?;
        if sub_matches.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
            continue;
        }
        if arg.get_action().takes_values() {
            args.push(format!("--{long}={}", scalar(key, value)?).into());
        } else {
            match value {
                toml::Value::Boolean(true) => args.push(format!("--{long}").into()),
                toml::Value::Boolean(false) => {}
                _ => return Err(Failure::Usage(format!("config key `{key}` must be true or false"))),
            }
        }
    }
    Ok(args)
}
