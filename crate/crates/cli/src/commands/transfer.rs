//! `cogload transfer`: k-fold downstream evaluation, either transferring
//! a pre-trained checkpoint (frozen or fine-tuned) or fully supervised
//! from fresh initialization.

use std::collections::BTreeMap;
use std::path::Path;

use cogload_core::evalharness::{assemble_outcomes, plan_folds, RunMetrics};
use cogload_core::tensor_nn::ParamGroup;
use serde::Serialize;

use crate::config::RunConfig;
use crate::csvio;
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::parallel::run_folds;
use crate::{checkpoint, commands};

use super::{join, out_dir};

#[derive(Serialize)]
struct Summary {
    arm: String,
    k: usize,
    group_by: String,
    mean_accuracy: f64,
    std_accuracy: f64,
    mean_macro_f1: f64,
    std_macro_f1: f64,
    folds: Vec<BTreeMap<String, f64>>,
}

fn summary_of(metrics: &RunMetrics, arm: &str, cfg: &RunConfig) -> Result<Summary> {
    Ok(Summary {
        arm: arm.to_string(),
        k: cfg.usize("eval.k")?,
        group_by: cfg.get("eval.group_by").to_string(),
        mean_accuracy: metrics.mean_accuracy,
        std_accuracy: metrics.std_accuracy,
        mean_macro_f1: metrics.mean_macro_f1,
        std_macro_f1: metrics.std_macro_f1,
        folds: metrics
            .folds
            .iter()
            .map(|f| {
                let mut m = BTreeMap::new();
                m.insert("fold".to_string(), f.fold as f64);
                m.insert("accuracy".to_string(), f.accuracy);
                m.insert("macro_f1".to_string(), f.macro_f1);
                m
            })
            .collect(),
    })
}

/// Checkpoint must agree with the configured encoder before training.
fn validate_checkpoint(params: &ParamGroup<f32>, cfg: &RunConfig) -> Result<()> {
    let enc = cfg.encoder_config()?;
    let in_proj = params
        .get("enc.in_proj.w")
        .ok_or_else(|| CliError::Data(String::from("checkpoint has no encoder tensors")))?;
    if in_proj.shape != vec![enc.token_dim, enc.d_model] {
        return Err(CliError::Config(format!(
            "checkpoint d_model {:?} does not match model.d_model {}",
            in_proj.shape, enc.d_model
        )));
    }
    let depth = (0..).take_while(|i| params.get(&format!("enc.block{i}.ln1.gamma")).is_some()).count();
    if depth != enc.n_blocks {
        return Err(CliError::Config(format!(
            "checkpoint has {depth} blocks, model.blocks = {}",
            enc.n_blocks
        )));
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let supervised = cfg.bool("transfer.supervised")?;
    let harness = cfg.harness_config()?;
    if supervised && harness.train.freeze_encoder {
        return Err(CliError::Config(String::from(
            "a fully supervised run cannot freeze its fresh encoder; set train.freeze_encoder = false",
        )));
    }

    let mut manifest = RunManifest::new("transfer", cfg, harness.train.seed);

    let pretrained: Option<ParamGroup<f32>> = if supervised {
        None
    } else {
        let path = cfg.path("transfer.checkpoint").ok_or_else(|| {
            CliError::Config(String::from(
                "transfer.checkpoint is required unless transfer.supervised = true",
            ))
        })?;
        let params = checkpoint::load(&path)?;
        validate_checkpoint(&params, cfg)?;
        manifest.record_input("transfer.checkpoint", &path)?;
        Some(params)
    };

    let (dataset, manifest_path) = commands::labeled_dataset_from_config(cfg)?;
    manifest.record_input("data.manifest", &manifest_path)?;

    let jobs = cfg.usize("io.jobs")?.max(1);
    let plans = plan_folds(&dataset, &harness)?;
    let outcomes = run_folds(&dataset, &plans, pretrained.as_ref(), &harness, jobs)?;
    let (metrics, predictions) = assemble_outcomes(outcomes)?;

    let arm = if supervised {
        "supervised"
    } else if harness.train.freeze_encoder {
        "frozen"
    } else {
        "fine_tuned"
    };
    csvio::write_metrics_csv(&metrics, &join(&dir, "metrics.csv"))?;
    csvio::write_predictions_csv(&predictions, &join(&dir, "predictions.csv"))?;
    write_summary(&summary_of(&metrics, arm, cfg)?, &join(&dir, "summary.json"))?;

    manifest.record_output("metrics.csv");
    manifest.record_output("predictions.csv");
    manifest.record_output("summary.json");
    manifest.record_metric("mean_accuracy", metrics.mean_accuracy);
    manifest.record_metric("std_accuracy", metrics.std_accuracy);
    manifest.record_metric("mean_macro_f1", metrics.mean_macro_f1);
    manifest.record_metric("std_macro_f1", metrics.std_macro_f1);
    manifest.write(&join(&dir, "manifest.json"))?;

    println!(
        "transfer ({arm}): accuracy {:.2} ({:.3}), macro F1 {:.2} ({:.3}) over {} folds -> {}",
        100.0 * metrics.mean_accuracy,
        metrics.std_accuracy,
        100.0 * metrics.mean_macro_f1,
        metrics.std_macro_f1,
        metrics.folds.len(),
        dir.display()
    );
    Ok(())
}

fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| CliError::Data(format!("summary serialization: {e}")))?;
    std::fs::write(path, json + "\n").map_err(CliError::io(path))?;
    Ok(())
}
