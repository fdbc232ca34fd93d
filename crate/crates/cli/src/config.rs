//! Run configuration: an optional TOML file, overridden by command-line
//! flags, resolved into a typed settings struct and persisted next to the
//! outputs.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

/// Marks an error as a usage or configuration problem (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Name of the resolved configuration written into every output directory.
pub const RESOLVED_NAME: &str = "config.resolved.toml";

/// Merges the `section` table of `file` (a dotted path such as
/// `verify.crypto`) with the flags that were given, flags winning, and
/// deserializes the result. Unknown keys are an error.
pub fn resolve<T: DeserializeOwned>(
    file: Option<&Path>,
    section: &str,
    flags: &impl Serialize,
) -> Result<T> {
    let mut table = match file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            let root: Table = text
                .parse()
                .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?;
            section_of(root, section)?
        }
        None => Table::new(),
    };
    let overrides = match Value::try_from(flags).context("serializing flags")? {
        Value::Table(t) => t,
        _ => unreachable!("flag structs serialize to tables"),
    };
    table.extend(overrides);
    T::deserialize(Value::Table(table))
        .map_err(|e| usage(format!("invalid `{section}` settings: {}", e.message())))
}

fn section_of(mut root: Table, section: &str) -> Result<Table> {
    for key in section.split('.') {
        root = match root.remove(key) {
            None => return Ok(Table::new()),
            Some(Value::Table(t)) => t,
            Some(_) => return Err(usage(format!("config key `{key}` must be a table"))),
        };
    }
    Ok(root)
}

/// Writes `settings` under `section` as `out/config.resolved.toml`;
/// feeding that file back with `--config` reproduces the run.
pub fn persist(out: &Path, section: &str, settings: &impl Serialize) -> Result<PathBuf> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut value = Value::try_from(settings).context("serializing settings")?;
    for key in section.rsplit('.') {
        let mut t = Table::new();
        t.insert(key.to_string(), value);
        value = Value::Table(t);
    }
    let path = out.join(RESOLVED_NAME);
    fs::write(&path, toml::to_string(&value)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
