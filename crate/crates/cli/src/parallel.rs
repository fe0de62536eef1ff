//! Fold-level parallelism. Folds derive independent seed streams, so the
//! assembled result is identical for any job count; `--jobs 1` stays the
//! default for single-core reproducibility of wall-clock behavior.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use cogload_core::evalharness::{run_fold, FoldOutcome, FoldPlan, HarnessConfig, LabeledDataset};
use cogload_core::tensor_nn::ParamGroup;

use crate::error::Result;

pub fn run_folds(
    dataset: &LabeledDataset,
    plans: &[FoldPlan],
    pretrained: Option<&ParamGroup<f32>>,
    cfg: &HarnessConfig,
    jobs: usize,
) -> Result<Vec<FoldOutcome>> {
    if jobs <= 1 {
        return plans
            .iter()
            .map(|p| run_fold(dataset, p, pretrained, cfg).map_err(Into::into))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<cogload_core::error::Result<FoldOutcome>>> =
        Mutex::new(Vec::with_capacity(plans.len()));
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(plans.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= plans.len() {
                    break;
                }
                let outcome = run_fold(dataset, &plans[i], pretrained, cfg);
                results.lock().unwrap().push(outcome);
            });
        }
    });
    let mut outcomes = Vec::with_capacity(plans.len());
    for r in results.into_inner().unwrap() {
        outcomes.push(r?);
    }
    outcomes.sort_by_key(|o| o.metrics.fold);
    Ok(outcomes)
}
