//! `--config <file>`: flat `key = value` lines named after the long flags of
//! the subcommand. The file is spliced in front of the command-line flags, so
//! the command line wins.

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};

use crate::Cli;

const SWITCHES: &[&str] = &["serial", "no-vtk"];

pub fn parse_with_file(argv: Vec<String>) -> Result<Cli, clap::Error> {
    let first = parse(&argv)?;
    let Some(path) = config_path(&argv) else {
        return Ok(first);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| {
        Cli::command().error(ErrorKind::Io, format!("cannot read config file '{path}': {e}"))
    })?;
    let extra = file_args(&text).map_err(|msg| {
        Cli::command().error(ErrorKind::InvalidValue, format!("{path}: {msg}"))
    })?;
    // argv[1] is the subcommand; its flags follow it.
    let mut merged = argv[..2].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[2..]);
    parse(&merged)
}

fn parse(argv: &[String]) -> Result<Cli, clap::Error> {
    let cmd = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    Cli::from_arg_matches(&cmd.try_get_matches_from(argv)?)
}

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    let mut found = None;
    while let Some(a) = it.next() {
        if a == "--config" {
            found = it.next().cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            found = Some(p.to_string());
        }
    }
    found
}

fn file_args(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected 'key = value'", i + 1));
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key == "config" {
            return Err(format!("line {}: nested config files are not supported", i + 1));
        }
        if SWITCHES.contains(&key.as_str()) {
            match value {
                "true" => out.push(format!("--{key}")),
                "false" => {}
                _ => return Err(format!("line {}: '{key}' takes true or false", i + 1)),
            }
        } else {
            out.push(format!("--{key}"));
            out.push(value.to_string());
        }
    }
    Ok(out)
}
