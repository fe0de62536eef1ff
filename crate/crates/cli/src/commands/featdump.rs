//! `cogload featdump`: recordings -> normalized feature CSV + statistics.

use cogload_core::features::zscore_normalize;
use cogload_core::pipeline;

use crate::config::RunConfig;
use crate::csvio;
use crate::error::Result;
use crate::manifest::RunManifest;

use super::{join, out_dir, recordings_from_key};

pub fn run(cfg: &RunConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let (recordings, manifest_path) = recordings_from_key(cfg, "data.manifest")?;
    let preproc = cfg.preproc_config()?;
    let feat = cfg.feature_config()?;

    let mut tokens = Vec::new();
    for rec in &recordings {
        tokens.extend(pipeline::extract_tokens(rec, &preproc, &feat)?);
    }
    // apply previously saved statistics when provided (held-out data);
    // otherwise compute them over this population
    let saved = match cfg.path("features.norm_stats") {
        Some(path) => Some(csvio::read_norm_stats(&path)?),
        None => None,
    };
    let (normalized, stats) = zscore_normalize(&tokens, saved.as_ref())?;

    csvio::write_features_csv(&normalized, &join(&dir, "features.csv"))?;
    csvio::write_norm_stats(&stats, &join(&dir, "norm_stats.csv"))?;

    let mut manifest = RunManifest::new("featdump", cfg, cfg.u64("train.seed")?);
    manifest.record_input("data.manifest", &manifest_path)?;
    manifest.record_output("features.csv");
    manifest.record_output("norm_stats.csv");
    manifest.record_metric("tokens", normalized.len() as f64);
    manifest.write(&join(&dir, "manifest.json"))?;
    println!("featdump: {} tokens -> {}", normalized.len(), dir.display());
    Ok(())
}
