//! `cogload ablate`: sweep one axis (transformer depth, downstream head,
//! or scheduler grid) and emit a metrics matrix.

use cogload_core::evalharness::HarnessConfig;
use cogload_core::model::{pretrain, EncoderConfig, HeadConfig, TrainRunConfig};
use cogload_core::pipeline;
use cogload_core::tensor_nn::ParamGroup;

use crate::config::RunConfig;
use crate::csvio::{self, AblationRow};
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::parallel::run_folds;
use crate::{checkpoint, commands};

use super::{join, out_dir};

/// Scheduler grid swept by the sensitivity analysis, as
/// (initial lr, step size in epochs, gamma).
const SCHEDULER_GRID: &[(f64, usize, f64)] =
    &[(1e-4, 250, 0.75), (1e-5, 250, 0.75), (1e-4, 100, 0.5), (1e-4, 150, 0.5)];

fn pretrain_for(
    cfg: &RunConfig,
    enc: &EncoderConfig,
    manifest: &mut RunManifest,
    role: &str,
) -> Result<ParamGroup<f32>> {
    let key = if cfg.path("data.pretrain_manifest").is_some() {
        "data.pretrain_manifest"
    } else {
        "data.manifest"
    };
    let (recordings, path) = commands::recordings_from_key(cfg, key)?;
    manifest.record_input(role, &path)?;
    let (corpus, _) =
        pipeline::pretraining_corpus(&recordings, &cfg.preproc_config()?, &cfg.feature_config()?)?;
    let train = TrainRunConfig {
        epochs: cfg.usize("ablate.pretrain_epochs")?,
        freeze_encoder: false,
        ..cfg.train_config()?
    };
    let (params, _) = pretrain::<f32>(&corpus, &train, enc, &HeadConfig::pretrain(enc.token_dim))?;
    Ok(params)
}

fn evaluate(
    dataset: &cogload_core::evalharness::LabeledDataset,
    pretrained: &ParamGroup<f32>,
    harness: &HarnessConfig,
    jobs: usize,
) -> Result<(f64, f64, f64, f64)> {
    let plans = cogload_core::evalharness::plan_folds(dataset, harness)?;
    let outcomes = run_folds(dataset, &plans, Some(pretrained), harness, jobs)?;
    let (metrics, _) = cogload_core::evalharness::assemble_outcomes(outcomes)?;
    Ok((metrics.mean_accuracy, metrics.std_accuracy, metrics.mean_macro_f1, metrics.std_macro_f1))
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let axis = cfg.get("ablate.axis").to_string();
    let (dataset, data_path) = commands::labeled_dataset_from_config(cfg)?;
    let base = cfg.harness_config()?;
    let jobs = cfg.usize("io.jobs")?.max(1);

    let mut manifest = RunManifest::new("ablate", cfg, base.train.seed);
    manifest.record_input("data.manifest", &data_path)?;

    let mut rows: Vec<AblationRow> = Vec::new();
    match axis.as_str() {
        "blocks" => {
            // depth changes the encoder, so each variant pre-trains its own
            for n_blocks in [3usize, 4, 5] {
                let enc = EncoderConfig { n_blocks, ..base.enc.clone() };
                let pretrained = pretrain_for(cfg, &enc, &mut manifest, "pretrain.manifest")?;
                let harness = HarnessConfig { enc: enc.clone(), ..base.clone() };
                let (acc, acc_std, f1, f1_std) = evaluate(&dataset, &pretrained, &harness, jobs)?;
                rows.push(AblationRow {
                    variant: format!("blocks={n_blocks}"),
                    accuracy: acc,
                    accuracy_std: acc_std,
                    macro_f1: f1,
                    macro_f1_std: f1_std,
                });
                println!("ablate blocks={n_blocks}: acc {:.2} f1 {:.2}", 100.0 * acc, 100.0 * f1);
            }
        }
        "head" => {
            let pretrained = shared_pretrained(cfg, &base.enc, &mut manifest)?;
            for preset in ["A1", "A2", "A3"] {
                let head = HeadConfig::downstream_preset(preset).expect("named presets exist");
                let harness = HarnessConfig { head, ..base.clone() };
                let (acc, acc_std, f1, f1_std) = evaluate(&dataset, &pretrained, &harness, jobs)?;
                rows.push(AblationRow {
                    variant: format!("head={preset}"),
                    accuracy: acc,
                    accuracy_std: acc_std,
                    macro_f1: f1,
                    macro_f1_std: f1_std,
                });
                println!("ablate head={preset}: acc {:.2} f1 {:.2}", 100.0 * acc, 100.0 * f1);
            }
        }
        "scheduler" => {
            let pretrained = shared_pretrained(cfg, &base.enc, &mut manifest)?;
            for &(lr, step, gamma) in SCHEDULER_GRID {
                let train = TrainRunConfig {
                    lr,
                    scheduler: Some((step, gamma)),
                    ..base.train.clone()
                };
                let harness = HarnessConfig { train, ..base.clone() };
                let (acc, acc_std, f1, f1_std) = evaluate(&dataset, &pretrained, &harness, jobs)?;
                rows.push(AblationRow {
                    variant: format!("lr={lr},step={step},gamma={gamma}"),
                    accuracy: acc,
                    accuracy_std: acc_std,
                    macro_f1: f1,
                    macro_f1_std: f1_std,
                });
                println!(
                    "ablate lr={lr} step={step} gamma={gamma}: acc {:.2} f1 {:.2}",
                    100.0 * acc,
                    100.0 * f1
                );
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "ablate.axis '{other}' (expected blocks, head, or scheduler)"
            )))
        }
    }

    csvio::write_ablation_csv(&rows, &join(&dir, "ablation.csv"))?;
    manifest.record_output("ablation.csv");
    manifest.record_metric("variants", rows.len() as f64);
    manifest.write(&join(&dir, "manifest.json"))?;
    println!("ablate ({axis}): {} variants -> {}", rows.len(), dir.display());
    Ok(())
}

/// Head and scheduler sweeps share one encoder: reuse a provided
/// checkpoint or pre-train once.
fn shared_pretrained(
    cfg: &RunConfig,
    enc: &EncoderConfig,
    manifest: &mut RunManifest,
) -> Result<ParamGroup<f32>> {
    match cfg.path("transfer.checkpoint") {
        Some(path) => {
            let params = checkpoint::load(&path)?;
            manifest.record_input("transfer.checkpoint", &path)?;
            Ok(params)
        }
        None => pretrain_for(cfg, enc, manifest, "pretrain.manifest"),
    }
}
