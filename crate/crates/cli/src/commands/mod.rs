//! Subcommand implementations.

pub mod ablate;
pub mod evalcmd;
pub mod featdump;
pub mod pretrain;
pub mod synth;
pub mod transfer;

use std::path::{Path, PathBuf};

use cogload_core::data::Recording;
use cogload_core::evalharness::LabeledDataset;
use cogload_core::pipeline;

use crate::config::RunConfig;
use crate::csvio;
use crate::error::{CliError, Result};

/// Resolve the dataset manifest named by `key`, load its recordings.
pub(crate) fn recordings_from_key(cfg: &RunConfig, key: &str) -> Result<(Vec<Recording>, PathBuf)> {
    let path = cfg
        .path(key)
        .ok_or_else(|| CliError::Config(format!("{key} is required for this command")))?;
    let recordings = csvio::load_recordings(&path)?;
    Ok((recordings, path))
}

/// Labeled dataset built from `data.manifest`.
pub(crate) fn labeled_dataset_from_config(cfg: &RunConfig) -> Result<(LabeledDataset, PathBuf)> {
    let (recordings, path) = recordings_from_key(cfg, "data.manifest")?;
    let dataset =
        pipeline::labeled_dataset(&recordings, &cfg.preproc_config()?, &cfg.feature_config()?)?;
    Ok((dataset, path))
}

pub(crate) fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(cfg.get("io.out_dir"));
    std::fs::create_dir_all(&dir).map_err(CliError::io(dir.clone()))?;
    Ok(dir)
}

pub(crate) fn join(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
