//! Flag resolution: command-line flag, then config file, then built-in default.
//!
//! The config file is flat TOML whose keys are the long flag names:
//!
//! ```toml
//! seed = 7
//! np = 60
//! strategy = "best1"
//! regressors = ["Q3", "Q4"]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

pub const CONFIG_ENV: &str = "PEERDE_CONFIG";

const KEYS: &[&str] = &[
    "seed",
    "out",
    "fn",
    "dim",
    "np",
    "f",
    "cr",
    "strategy",
    "gens",
    "target",
    "stagnation",
    "input",
    "group",
    "model",
    "criterion",
    "threshold",
    "response",
    "regressors",
    "coef-bound",
    "subjects",
    "peers",
    "item-noise",
    "noise",
    "self-under",
    "parent-under",
    "parent-over",
    "shift-steps",
    "truth-weights",
    "bias-zero",
    "reps",
];

/// Values from the config file plus a record of everything resolved so far.
#[derive(Debug, Default)]
pub struct Settings {
    table: toml::Table,
    source: Option<PathBuf>,
    resolved: Map<String, Value>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        if let Some(k) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::usage(format!(
                "config {}: unknown key '{k}'",
                path.display()
            )));
        }
        Ok(Self {
            table,
            source: Some(path.to_path_buf()),
            resolved: Map::new(),
        })
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    /// Flag value if given, else the config file's, else `None`.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: DeserializeOwned + Serialize,
    {
        debug_assert!(KEYS.contains(&key), "unregistered key {key}");
        let value = match flag {
            Some(v) => Some(v),
            None => match self.table.get(key) {
                Some(raw) => Some(
                    raw.clone()
                        .try_into()
                        .map_err(|e| CliError::usage(format!("config key '{key}': {e}")))?,
                ),
                None => None,
            },
        };
        self.record(key, &value);
        Ok(value)
    }

    /// Like [`Settings::optional`], falling back to `default`.
    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: DeserializeOwned + Serialize,
    {
        let v = self.optional(key, flag)?.unwrap_or(default);
        self.record(key, &Some(&v));
        Ok(v)
    }

    pub fn required<T>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T: DeserializeOwned + Serialize,
    {
        self.optional(key, flag)?
            .ok_or_else(|| CliError::usage(format!("--{key} is required (flag or config file)")))
    }

    /// Overrides the echoed value of `key`, e.g. after a derived default is applied.
    pub fn record<T: Serialize>(&mut self, key: &str, value: &Option<T>) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.resolved.insert(key.to_string(), v);
    }

    /// The fully resolved configuration, for the manifest.
    pub fn echo(&self) -> Value {
        Value::Object(self.resolved.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with(text: &str) -> Settings {
        Settings {
            table: text.parse().unwrap(),
            ..Settings::default()
        }
    }

    #[test]
    fn flag_beats_config_beats_default() {
        let mut s = with("np = 60\nf = 1\n");
        assert_eq!(s.value("np", Some(30usize), 40).unwrap(), 30);
        assert_eq!(s.value("np", None::<usize>, 40).unwrap(), 60);
        assert_eq!(s.value("cr", None::<f64>, 0.9).unwrap(), 0.9);
        assert_eq!(s.value("f", None::<f64>, 0.5).unwrap(), 1.0);
        assert_eq!(s.echo()["np"], 60);
    }

    #[test]
    fn wrong_type_is_a_usage_error() {
        let mut s = with("np = \"many\"\n");
        assert!(matches!(
            s.value("np", None::<usize>, 1),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn lists_come_from_arrays() {
        let mut s = with("regressors = [\"Q3\", \"Q4\"]\n");
        let r: Vec<String> = s.required("regressors", None).unwrap();
        assert_eq!(r, ["Q3", "Q4"]);
    }
}
