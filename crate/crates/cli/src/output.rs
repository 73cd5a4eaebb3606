use std::fs;
use std::path::PathBuf;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub timestamp: String,
    pub version: String,
}

impl Manifest {
    pub fn new(command: &str, config: Value, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config,
            seed,
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    manifest: &'a Manifest,
    result: &'a T,
}

/// Output directory for one command; created on first write.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: PathBuf) -> Self {
        Self { root }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.root).map_err(|e| CliError::io(self.root.display(), e))?;
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(path.display(), e))?;
        Ok(path)
    }

    /// Writes `{manifest, result}` as `name` and returns the JSON text.
    pub fn write_json<T: Serialize>(
        &self,
        name: &str,
        manifest: &Manifest,
        result: &T,
    ) -> Result<String, CliError> {
        let text = serde_json::to_string_pretty(&Document { manifest, result })
            .map_err(|e| CliError::Io(format!("serializing {name}: {e}")))?;
        self.write(name, format!("{text}\n").as_bytes())?;
        Ok(text)
    }
}
