//! Config layering: built-in defaults, then the config file, then flags.
//!
//! The file is TOML. Top-level keys `outdir` and `workers` apply to every
//! subcommand; each subcommand reads its own table, keyed like the long flags:
//!
//! ```toml
//! outdir = "runs/fig4"
//!
//! [ising-sweep]
//! l = 10
//! j = 0.4
//! j2 = 0.1
//! hz-grid = "0:0.4:0.005"
//! ```
//!
//! A `manifest.json` written by an earlier run is accepted in place of a TOML
//! file; its `config` object has the same layout.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub const WORKERS_ENV: &str = "MQC_WORKERS";

pub fn load(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value = if path.extension().is_some_and(|e| e == "json") {
        let manifest: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        manifest.get("config").cloned().context("manifest has no config object")?
    } else {
        let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        serde_json::to_value(table)?
    };
    match value {
        Value::Object(m) => Ok(m),
        _ => bail!("config must be a table"),
    }
}

/// Top-level scalar keys of the file.
pub fn common_layer(file: &Map<String, Value>) -> Value {
    Value::Object(file.iter().filter(|(_, v)| !v.is_object()).map(|(k, v)| (k.clone(), v.clone())).collect())
}

/// The file's table for `subcommand`; errors on unknown top-level tables.
pub fn command_layer(file: &Map<String, Value>, subcommand: &str, known: &[&str]) -> Result<Value> {
    for (k, v) in file {
        if v.is_object() && !known.contains(&k.as_str()) {
            bail!("unknown config table [{k}]");
        }
    }
    Ok(file.get(subcommand).cloned().unwrap_or(Value::Object(Map::new())))
}

fn overlay(base: &mut Map<String, Value>, top: &Value) {
    if let Value::Object(m) = top {
        for (k, v) in m {
            if !v.is_null() {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

/// Merges layers left to right; later non-null keys win.
pub fn layered<T: Serialize + DeserializeOwned>(layers: &[Value]) -> Result<T> {
    let mut merged = Map::new();
    for layer in layers {
        overlay(&mut merged, layer);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| anyhow::anyhow!("invalid config: {e}"))
}

pub fn to_layer<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("config structs serialize")
}

/// Worker count from the environment, when set.
pub fn env_workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) => {
            let n: usize = s.trim().parse().with_context(|| format!("{WORKERS_ENV}={s:?} is not a count"))?;
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Deserialize, Debug, PartialEq, Default)]
    #[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
    struct Demo {
        j: Option<f64>,
        hz_grid: Option<String>,
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let defaults = to_layer(&Demo { j: Some(1.0), hz_grid: None });
        let file = serde_json::json!({"j": 0.4, "hz-grid": "0:1:0.5"});
        let flags = to_layer(&Demo { j: Some(2.0), hz_grid: None });
        let d: Demo = layered(&[defaults, file, flags]).unwrap();
        assert_eq!(d, Demo { j: Some(2.0), hz_grid: Some("0:1:0.5".into()) });
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let file = serde_json::json!({"jj": 0.4});
        assert!(layered::<Demo>(&[file]).is_err());
        let mut m = Map::new();
        m.insert("bogus".into(), serde_json::json!({}));
        assert!(command_layer(&m, "two-level", &["two-level"]).is_err());
    }
}
