//! Run manifests: a JSON record of what a command did, written next to
//! its outputs. Deterministic content only (no timestamps), so reruns of
//! the same config are byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: BTreeMap<String, String>,
    /// sha256 of input files the run consumed (dataset manifests,
    /// checkpoints), keyed by role.
    pub inputs: BTreeMap<String, String>,
    /// Output files produced, relative to the run directory.
    pub outputs: Vec<String>,
    /// Headline numbers, when the command produces any.
    pub metrics: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &RunConfig, seed: u64) -> Self {
        let config: BTreeMap<String, String> = cfg
            .effective_text()
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self {
            command: command.to_string(),
            seed,
            config_hash: cfg.hash(),
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, role: &str, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(CliError::io(path))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.insert(role.to_string(), hex);
        Ok(())
    }

    pub fn record_output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn record_metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Data(format!("manifest serialization: {e}")))?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
        }
        std::fs::write(path, json + "\n").map_err(CliError::io(path))?;
        Ok(())
    }
}
