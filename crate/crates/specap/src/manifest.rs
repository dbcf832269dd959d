use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use specap_core::training::ExperimentConfig;

use crate::error::Result;
use crate::files::{file_sha256, read_json, write_json};

pub const MANIFEST: &str = "manifest.json";

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Record of one command invocation, written once when it ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<ExperimentConfig>,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    /// Input path → SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output file name → SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub status: String,
}

impl RunManifest {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.to_string(),
            config: None,
            config_hash: None,
            seed: None,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            started_unix: unix_now(),
            finished_unix: 0,
            status: String::new(),
        }
    }

    pub fn with_config(mut self, cfg: &ExperimentConfig, hash: &str) -> Self {
        self.seed = Some(cfg.seed);
        self.config = Some(cfg.clone());
        self.config_hash = Some(hash.to_string());
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_sha256(path)?);
        Ok(())
    }

    /// Hashes the named outputs in `dir` and writes the manifest there.
    pub fn finish(mut self, dir: &Path, outputs: &[&str], status: &str) -> Result<Self> {
        for name in outputs {
            self.outputs.insert(name.to_string(), file_sha256(&dir.join(name))?);
        }
        self.status = status.to_string();
        self.finished_unix = unix_now();
        write_json(&dir.join(MANIFEST), &self)?;
        Ok(self)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        read_json(&dir.join(MANIFEST))
    }
}
