use std::fmt::Display;
use std::path::Path;

use nvmprobe::{fsutil, Error, Result};

use crate::args::{GLOBAL_VALUE_FLAGS, SUBCOMMANDS};

/// Parse flat `key = value` text. `#` starts a comment line; keys are
/// normalized to flag spelling (`chips_per_class` -> `chips-per-class`).
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i as u64 + 1, format!("expected key=value, got {line:?}")))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(Error::parse(i as u64 + 1, "empty key"));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Index of the subcommand in argv, skipping global options and their values.
fn subcommand_pos(args: &[String]) -> (Option<usize>, usize) {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].as_str();
        if GLOBAL_VALUE_FLAGS.contains(&a) {
            i += 2;
            continue;
        }
        if a.starts_with('-') {
            i += 1;
            continue;
        }
        return (SUBCOMMANDS.contains(&a).then_some(i), i);
    }
    (None, args.len())
}

fn passed(args: &[String], flag: &str) -> bool {
    args.iter().any(|a| a == flag || a.strip_prefix(flag).is_some_and(|r| r.starts_with('=')))
}

/// Splice the `--config` file's entries into argv as flags. Flags already on
/// the command line are left alone; `true` becomes a bare switch and `false`
/// drops it. A `command` key selects the subcommand, or must agree with it.
pub fn expand_args(mut args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let pairs = parse_pairs(&fsutil::read_to_string(Path::new(&path))?)?;
    let (mut sub, end) = subcommand_pos(&args);
    for (k, v) in &pairs {
        if k != "command" {
            continue;
        }
        match sub {
            Some(i) if args[i] != *v => {
                return Err(Error::validation(format!(
                    "config {path} is for `{v}`, not `{}`",
                    args[i]
                )))
            }
            Some(_) => {}
            None => {
                args.insert(end, v.clone());
                sub = Some(end);
            }
        }
    }
    let Some(at) = sub else {
        return Ok(args);
    };
    let mut extra = Vec::new();
    for (k, v) in pairs {
        if k == "command" || k == "config" {
            continue;
        }
        let flag = format!("--{k}");
        if passed(&args, &flag) {
            continue;
        }
        match v.as_str() {
            "false" => {}
            "true" => extra.push(flag),
            _ => {
                extra.push(flag);
                extra.push(v);
            }
        }
    }
    args.splice(at + 1..at + 1, extra);
    Ok(args)
}

/// Everything needed to rerun a generation command, in config-file syntax.
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            lines: vec![("command".into(), command.into())],
        }
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn set_path(&mut self, key: &str, path: &Path) {
        self.set(key, path.display());
    }

    pub fn set_list<T: Display>(&mut self, key: &str, values: &[T]) {
        let joined: Vec<String> = values.iter().map(T::to_string).collect();
        self.set(key, joined.join(","));
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# nvmprobe {} manifest\n", env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.lines {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }
}
