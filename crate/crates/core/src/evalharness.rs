//! k-fold cross-validation driver with accuracy and macro F1 over
//! vote-aggregated segments.
//!
//! Folds partition groups (participants by default) so subject data never
//! leaks across the train/test boundary; normalization statistics are
//! recomputed per fold from the training side only. Folds are fully
//! independent given the run seed, so callers may execute them serially
//! or in parallel with identical results.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;

use crate::aggregate::VoteTable;
use crate::error::{CoreError, Result};
use crate::features::{zscore_normalize, FeatureToken, NormStats};
use crate::model::{
    build_model, predict_batch, train_downstream, transfer, EncoderConfig, HeadConfig,
    TrainRunConfig,
};
use crate::seeding;
use crate::tensor_nn::{ParamGroup, Scalar};
use crate::tokenizer::{build_sequences, TokenSequence, SEQ_LEN};

/// Fold-unit choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    /// Subject-disjoint folds (default; prevents participant leakage).
    #[default]
    Participant,
    Recording,
    Sequence,
}

/// Assignment of group ids to folds.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldSplit {
    pub k: usize,
    pub assignment: Vec<(String, usize)>,
}

impl FoldSplit {
    pub fn fold_of(&self, group: &str) -> Option<usize> {
        self.assignment.iter().find(|(g, _)| g == group).map(|(_, f)| *f)
    }
}

/// Seeded shuffle then round-robin: fold sizes differ by at most one.
pub fn kfold_split(groups: &[String], k: usize, seed: u64) -> Result<FoldSplit> {
    if k == 0 {
        return Err(CoreError::Config(String::from("k must be positive")));
    }
    if groups.len() < k {
        return Err(CoreError::TooFewGroups { groups: groups.len(), k });
    }
    let mut shuffled: Vec<String> = groups.to_vec();
    use rand::seq::SliceRandom;
    shuffled.shuffle(&mut seeding::stream_rng(seed, 10));
    let assignment =
        shuffled.into_iter().enumerate().map(|(i, g)| (g, i % k)).collect();
    Ok(FoldSplit { k, assignment })
}

fn check_lengths(pred: &[u8], truth: &[u8]) -> Result<()> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(CoreError::LengthMismatch { pred: pred.len(), truth: truth.len() });
    }
    Ok(())
}

/// Fraction of matching labels.
pub fn accuracy(pred: &[u8], truth: &[u8]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Unweighted mean of per-class F1.
///
/// A class absent from both vectors scores 1; a zero denominator
/// otherwise scores 0.
pub fn macro_f1(pred: &[u8], truth: &[u8]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let mut sum = 0.0;
    for class in [0u8, 1u8] {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (&p, &t) in pred.iter().zip(truth) {
            match (p == class, t == class) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let denom = 2 * tp + fp + fn_;
        sum += if tp + fp + fn_ == 0 {
            1.0
        } else if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        };
    }
    Ok(sum / 2.0)
}

/// One recording's un-normalized tokens and binary segment labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecording {
    pub recording_id: String,
    pub participant_id: String,
    pub tokens: Vec<FeatureToken>,
    pub labels: Vec<u8>,
}

/// Tokenized, labeled corpus ready for cross-validation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub recordings: Vec<LabeledRecording>,
}

/// Per-fold scores.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldMetrics {
    pub fold: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
}

/// Per-fold scores plus their mean and (population) standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub folds: Vec<FoldMetrics>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_macro_f1: f64,
    pub std_macro_f1: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl RunMetrics {
    pub fn from_folds(folds: Vec<FoldMetrics>) -> Result<Self> {
        if folds.is_empty() {
            return Err(CoreError::Config(String::from("no fold metrics")));
        }
        let acc: Vec<f64> = folds.iter().map(|f| f.accuracy).collect();
        let f1: Vec<f64> = folds.iter().map(|f| f.macro_f1).collect();
        let (mean_accuracy, std_accuracy) = mean_std(&acc);
        let (mean_macro_f1, std_macro_f1) = mean_std(&f1);
        Ok(Self { folds, mean_accuracy, std_accuracy, mean_macro_f1, std_macro_f1 })
    }
}

/// One scored segment of a finished fold.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub fold: usize,
    pub recording_id: String,
    pub segment_index: usize,
    pub votes: [u8; SEQ_LEN],
    pub final_label: u8,
    pub ground_truth: u8,
}

/// Everything a finished fold produced.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub metrics: FoldMetrics,
    pub predictions: Vec<PredictionRow>,
    /// Normalization statistics the fold trained with (train side only).
    pub norm_stats: NormStats,
}

/// Harness configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub k: usize,
    pub group_by: GroupBy,
    pub enc: EncoderConfig,
    pub head: HeadConfig,
    pub train: TrainRunConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            k: 10,
            group_by: GroupBy::Participant,
            enc: EncoderConfig::default(),
            head: HeadConfig::downstream(),
            train: TrainRunConfig::default(),
        }
    }
}

/// One sequence item in the fold plan.
#[derive(Debug, Clone, PartialEq)]
struct SeqRef {
    recording: usize,
    start: usize,
    labels: [u8; SEQ_LEN],
}

/// A planned fold: which sequences train, which evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub fold: usize,
    train: Vec<SeqRef>,
    test: Vec<SeqRef>,
}

fn sequence_items(dataset: &LabeledDataset) -> Result<Vec<SeqRef>> {
    let mut items = Vec::new();
    for (ri, rec) in dataset.recordings.iter().enumerate() {
        if rec.tokens.len() != rec.labels.len() {
            return Err(CoreError::LabelCountMismatch {
                labels: rec.labels.len(),
                segments: rec.tokens.len(),
            });
        }
        if rec.labels.iter().any(|&l| l > 1) {
            return Err(CoreError::LabelOutOfRange {
                value: *rec.labels.iter().find(|&&l| l > 1).unwrap() as i64,
            });
        }
        if rec.tokens.len() < SEQ_LEN {
            continue;
        }
        for j in 0..=rec.tokens.len() - SEQ_LEN {
            items.push(SeqRef {
                recording: ri,
                start: j,
                labels: [rec.labels[j], rec.labels[j + 1], rec.labels[j + 2]],
            });
        }
    }
    if items.is_empty() {
        return Err(CoreError::Config(String::from("dataset yields no sequences")));
    }
    Ok(items)
}

fn group_id(dataset: &LabeledDataset, item: &SeqRef, group_by: GroupBy) -> String {
    let rec = &dataset.recordings[item.recording];
    match group_by {
        GroupBy::Participant => rec.participant_id.clone(),
        GroupBy::Recording => rec.recording_id.clone(),
        GroupBy::Sequence => format!("{}#{}", rec.recording_id, item.start),
    }
}

/// Split the dataset's sequences into k folds of whole groups.
pub fn plan_folds(dataset: &LabeledDataset, cfg: &HarnessConfig) -> Result<Vec<FoldPlan>> {
    let items = sequence_items(dataset)?;
    let group_set: BTreeSet<String> =
        items.iter().map(|it| group_id(dataset, it, cfg.group_by)).collect();
    let groups: Vec<String> = group_set.into_iter().collect();
    let split = kfold_split(&groups, cfg.k, cfg.train.seed)?;
    let mut plans: Vec<FoldPlan> = (0..cfg.k)
        .map(|fold| FoldPlan { fold, train: Vec::new(), test: Vec::new() })
        .collect();
    for item in items {
        let fold = split
            .fold_of(&group_id(dataset, &item, cfg.group_by))
            .expect("every item's group was split");
        for plan in plans.iter_mut() {
            if plan.fold == fold {
                plan.test.push(item.clone());
            } else {
                plan.train.push(item.clone());
            }
        }
    }
    Ok(plans)
}

fn normalize_dataset(
    dataset: &LabeledDataset,
    stats: &NormStats,
) -> Result<Vec<Vec<FeatureToken>>> {
    dataset
        .recordings
        .iter()
        .map(|rec| Ok(zscore_normalize(&rec.tokens, Some(stats))?.0))
        .collect()
}

fn make_sequence(tokens: &[FeatureToken], item: &SeqRef) -> TokenSequence {
    build_sequences(&tokens[item.start..item.start + SEQ_LEN])
        .into_iter()
        .next()
        .expect("three tokens build one sequence")
}

/// Train and evaluate one fold.
///
/// `pretrained = None` is the fully supervised arm (fresh initialization,
/// nothing frozen); `Some` transfers the encoder and freezes it when the
/// run config says so. The fold derives its own seed stream, so outcomes
/// do not depend on fold execution order.
pub fn run_fold<T: Scalar>(
    dataset: &LabeledDataset,
    plan: &FoldPlan,
    pretrained: Option<&ParamGroup<T>>,
    cfg: &HarnessConfig,
) -> Result<FoldOutcome> {
    let fold_seed = seeding::derive_seed(cfg.train.seed, 1000 + plan.fold as u64);

    // Normalization statistics from the training side only, over unique
    // (recording, segment) tokens.
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut train_tokens: Vec<FeatureToken> = Vec::new();
    for item in &plan.train {
        for offset in 0..SEQ_LEN {
            if seen.insert((item.recording, item.start + offset)) {
                train_tokens
                    .push(dataset.recordings[item.recording].tokens[item.start + offset].clone());
            }
        }
    }
    if train_tokens.is_empty() {
        return Err(CoreError::Config(format!("fold {} has no training tokens", plan.fold)));
    }
    let stats = NormStats::from_tokens(&train_tokens)?;
    let normalized = normalize_dataset(dataset, &stats)?;

    let train_data: Vec<(TokenSequence, [u8; SEQ_LEN])> = plan
        .train
        .iter()
        .map(|item| (make_sequence(&normalized[item.recording], item), item.labels))
        .collect();

    let train_cfg = TrainRunConfig { seed: fold_seed, ..cfg.train.clone() };
    let params = match pretrained {
        Some(p) => transfer(p, &cfg.head, cfg.train.freeze_encoder, fold_seed)?,
        None => {
            let mut rng = seeding::stream_rng(fold_seed, 0);
            build_model::<T, _>(&cfg.enc, &cfg.head, &mut rng)?
        }
    };
    let (trained, _curve) =
        train_downstream(&train_data, &train_cfg, &cfg.enc, &cfg.head, params)?;

    // Predict the held-out sequences and vote per segment.
    let test_seqs: Vec<TokenSequence> = plan
        .test
        .iter()
        .map(|item| make_sequence(&normalized[item.recording], item))
        .collect();
    let preds = predict_batch(&trained, &cfg.enc, &cfg.head, &test_seqs)?;
    let mut table = VoteTable::new();
    for (item, pred) in plan.test.iter().zip(&preds) {
        table.accumulate(&dataset.recordings[item.recording].recording_id, item.start, *pred)?;
    }
    let finalized = table.finalize();
    if finalized.is_empty() {
        return Err(CoreError::Config(format!(
            "fold {} has no segments with full vote coverage",
            plan.fold
        )));
    }

    let mut pred_labels = Vec::with_capacity(finalized.len());
    let mut true_labels = Vec::with_capacity(finalized.len());
    let mut predictions = Vec::with_capacity(finalized.len());
    for ((recording_id, segment_index), final_label) in &finalized {
        let rec = dataset
            .recordings
            .iter()
            .find(|r| &r.recording_id == recording_id)
            .expect("finalized segment belongs to the dataset");
        let votes = table.votes_for(recording_id, *segment_index).expect("finalized has votes");
        let ground_truth = rec.labels[*segment_index];
        pred_labels.push(*final_label);
        true_labels.push(ground_truth);
        predictions.push(PredictionRow {
            fold: plan.fold,
            recording_id: recording_id.clone(),
            segment_index: *segment_index,
            votes: [votes[0], votes[1], votes[2]],
            final_label: *final_label,
            ground_truth,
        });
    }

    Ok(FoldOutcome {
        metrics: FoldMetrics {
            fold: plan.fold,
            accuracy: accuracy(&pred_labels, &true_labels)?,
            macro_f1: macro_f1(&pred_labels, &true_labels)?,
        },
        predictions,
        norm_stats: stats,
    })
}

/// Combine fold outcomes (any order) into run-level metrics and the
/// prediction export, both sorted by fold.
pub fn assemble_outcomes(mut outcomes: Vec<FoldOutcome>) -> Result<(RunMetrics, Vec<PredictionRow>)> {
    outcomes.sort_by_key(|o| o.metrics.fold);
    let folds: Vec<FoldMetrics> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    let predictions: Vec<PredictionRow> =
        outcomes.into_iter().flat_map(|o| o.predictions).collect();
    Ok((RunMetrics::from_folds(folds)?, predictions))
}

/// Full serial cross-validation run.
pub fn run_experiment<T: Scalar>(
    dataset: &LabeledDataset,
    pretrained: Option<&ParamGroup<T>>,
    cfg: &HarnessConfig,
) -> Result<(RunMetrics, Vec<PredictionRow>)> {
    let plans = plan_folds(dataset, cfg)?;
    let outcomes: Vec<FoldOutcome> = plans
        .iter()
        .map(|plan| run_fold(dataset, plan, pretrained, cfg))
        .collect::<Result<_>>()?;
    assemble_outcomes(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kfold_counts_and_determinism() {
        let groups: Vec<String> = (0..20).map(|i| format!("g{i:02}")).collect();
        let split = kfold_split(&groups, 10, 7).unwrap();
        let mut counts = [0usize; 10];
        for (_, f) in &split.assignment {
            counts[*f] += 1;
        }
        assert!(counts.iter().all(|&c| c == 2));
        assert_eq!(split, kfold_split(&groups, 10, 7).unwrap());
        assert!(matches!(
            kfold_split(&groups[..5], 10, 7),
            Err(CoreError::TooFewGroups { groups: 5, k: 10 })
        ));
    }

    #[test]
    fn accuracy_basics() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0, 1, 0], &[1, 0, 0, 1]).unwrap(), 0.5);
        assert!(matches!(
            accuracy(&[1], &[1, 0]),
            Err(CoreError::LengthMismatch { pred: 1, truth: 2 })
        ));
    }

    #[test]
    fn majority_baseline_on_62_38_split() {
        let truth: Vec<u8> = core::iter::repeat_n(0u8, 62).chain(core::iter::repeat_n(1u8, 38)).collect();
        let pred = alloc::vec![0u8; 100];
        assert!((accuracy(&pred, &truth).unwrap() - 0.62).abs() < 1e-15);
        let f1 = macro_f1(&pred, &truth).unwrap();
        let f1_class0 = 2.0 * 0.62 / (2.0 * 0.62 + 0.38);
        assert!((f1 - f1_class0 / 2.0).abs() < 1e-15);
        assert!((f1 - 0.383).abs() < 1e-3);
    }

    #[test]
    fn macro_f1_edges() {
        assert_eq!(macro_f1(&[1, 0], &[1, 0]).unwrap(), 1.0);
        assert_eq!(macro_f1(&[1, 0], &[0, 1]).unwrap(), 0.0);
        // class 1 absent everywhere scores 1 by convention
        assert_eq!(macro_f1(&[0, 0], &[0, 0]).unwrap(), 1.0);
    }
}
