//! `cogload pretrain`: masked-autoencoder pre-training to a checkpoint.

use cogload_core::model::{pretrain, HeadConfig};
use cogload_core::pipeline;

use crate::config::RunConfig;
use crate::csvio;
use crate::error::Result;
use crate::manifest::RunManifest;
use crate::{checkpoint, commands};

use super::{join, out_dir};

pub fn run(cfg: &RunConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let key = if cfg.path("data.pretrain_manifest").is_some() {
        "data.pretrain_manifest"
    } else {
        "data.manifest"
    };
    let (recordings, manifest_path) = commands::recordings_from_key(cfg, key)?;
    let (corpus, stats) =
        pipeline::pretraining_corpus(&recordings, &cfg.preproc_config()?, &cfg.feature_config()?)?;

    let enc = cfg.encoder_config()?;
    let train = cfg.train_config()?;
    let head = HeadConfig::pretrain(enc.token_dim);
    let (params, curve) = pretrain::<f32>(&corpus, &train, &enc, &head)?;

    checkpoint::save(&params, &join(&dir, "pretrained.ckpt"))?;
    csvio::write_loss_curve(&curve, &join(&dir, "loss_curve.csv"))?;
    csvio::write_norm_stats(&stats, &join(&dir, "norm_stats.csv"))?;

    let mut manifest = RunManifest::new("pretrain", cfg, train.seed);
    manifest.record_input(key, &manifest_path)?;
    manifest.record_output("pretrained.ckpt");
    manifest.record_output("loss_curve.csv");
    manifest.record_output("norm_stats.csv");
    manifest.record_metric("sequences", corpus.len() as f64);
    if let Some(first) = curve.first() {
        manifest.record_metric("loss_first_epoch", *first);
    }
    if let Some(last) = curve.last() {
        manifest.record_metric("loss_last_epoch", *last);
    }
    manifest.write(&join(&dir, "manifest.json"))?;

    match (curve.first(), curve.last()) {
        (Some(first), Some(last)) => println!(
            "pretrain: {} sequences, {} epochs, loss {first:.4} -> {last:.4} -> {}",
            corpus.len(),
            train.epochs,
            dir.display()
        ),
        _ => println!(
            "pretrain: {} sequences, 0 epochs (init checkpoint) -> {}",
            corpus.len(),
            dir.display()
        ),
    }
    Ok(())
}
