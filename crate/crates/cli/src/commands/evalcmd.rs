//! `cogload eval`: recompute metrics from a predictions export.

use std::collections::BTreeMap;
use std::path::Path;

use cogload_core::evalharness::{accuracy, macro_f1, FoldMetrics, RunMetrics};

use crate::csvio;
use crate::error::Result;

pub fn run(predictions: &Path, out: Option<&Path>) -> Result<()> {
    let rows = csvio::read_predictions_csv(predictions)?;
    let mut by_fold: BTreeMap<usize, (Vec<u8>, Vec<u8>)> = BTreeMap::new();
    for r in &rows {
        let entry = by_fold.entry(r.fold).or_default();
        entry.0.push(r.final_label);
        entry.1.push(r.ground_truth);
    }
    let mut folds = Vec::new();
    for (fold, (pred, truth)) in &by_fold {
        folds.push(FoldMetrics {
            fold: *fold,
            accuracy: accuracy(pred, truth)?,
            macro_f1: macro_f1(pred, truth)?,
        });
    }
    let metrics = RunMetrics::from_folds(folds)?;
    for f in &metrics.folds {
        println!("fold {}: accuracy {:.4}, macro F1 {:.4}", f.fold, f.accuracy, f.macro_f1);
    }
    println!(
        "overall: accuracy {:.2} ({:.3}), macro F1 {:.2} ({:.3}) over {} segments",
        100.0 * metrics.mean_accuracy,
        metrics.std_accuracy,
        100.0 * metrics.mean_macro_f1,
        metrics.std_macro_f1,
        rows.len()
    );
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(crate::error::CliError::io(dir))?;
        csvio::write_metrics_csv(&metrics, &dir.join("metrics.csv"))?;
        println!("eval: metrics written to {}", dir.display());
    }
    Ok(())
}
