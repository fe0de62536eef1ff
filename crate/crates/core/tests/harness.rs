//! Harness-level checks: vote aggregation against a brute-force oracle,
//! metrics against an independent confusion-matrix implementation, fold
//! leakage, and run determinism on a small synthetic dataset.

use std::collections::BTreeMap;

use cogload_core::aggregate::VoteTable;
use cogload_core::data::{synth_generate, SynthSpec};
use cogload_core::evalharness::{
    accuracy, kfold_split, macro_f1, plan_folds, run_experiment, run_fold, GroupBy,
    HarnessConfig,
};
use cogload_core::features::{FeatureConfig, NormStats};
use cogload_core::model::{EncoderConfig, HeadConfig, TrainRunConfig};
use cogload_core::pipeline::{labeled_dataset, PreprocConfig};
use cogload_core::seeding::stream_rng;
use rand::Rng;

/// Brute-force per-segment majority, written independently of VoteTable.
fn oracle_majority(n_segments: usize, preds: &[(usize, [u8; 3])]) -> BTreeMap<usize, u8> {
    let mut out = BTreeMap::new();
    for segment in 0..n_segments {
        let mut votes = Vec::new();
        for &(j, p) in preds {
            for k in 0..3 {
                if j + k == segment {
                    votes.push(p[k]);
                }
            }
        }
        if votes.len() == 3 {
            let ones: usize = votes.iter().map(|&v| v as usize).sum();
            out.insert(segment, u8::from(ones >= 2));
        }
    }
    out
}

#[test]
fn vote_table_matches_brute_force_on_1000_random_tables() {
    let mut rng = stream_rng(2024, 0);
    for case in 0..1000 {
        let n = rng.gen_range(3..24usize);
        let preds: Vec<(usize, [u8; 3])> = (0..=n - 3)
            .map(|j| (j, [rng.gen_range(0..2u8), rng.gen_range(0..2u8), rng.gen_range(0..2u8)]))
            .collect();
        // accumulate in shuffled order to confirm order irrelevance
        let mut order: Vec<usize> = (0..preds.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let mut table = VoteTable::new();
        for &i in &order {
            table.accumulate("rec", preds[i].0, preds[i].1).unwrap();
        }
        let finalized: BTreeMap<usize, u8> =
            table.finalize().into_iter().map(|((_, s), v)| (s, v)).collect();
        let expected = oracle_majority(n, &preds);
        assert_eq!(finalized, expected, "case {case} with n {n}");
        if n >= 5 {
            assert_eq!(finalized.len(), n - 4, "case {case}: size law");
        } else {
            assert!(finalized.is_empty());
        }
    }
}

/// Independent confusion-matrix metrics used as the oracle.
fn oracle_metrics(pred: &[u8], truth: &[u8]) -> (f64, f64) {
    let n = pred.len() as f64;
    let mut cm = [[0usize; 2]; 2]; // cm[truth][pred]
    for (&p, &t) in pred.iter().zip(truth) {
        cm[t as usize][p as usize] += 1;
    }
    let acc = (cm[0][0] + cm[1][1]) as f64 / n;
    let f1_for = |class: usize| {
        let tp = cm[class][class];
        let fp = cm[1 - class][class];
        let fn_ = cm[class][1 - class];
        if tp + fp + fn_ == 0 {
            1.0
        } else if 2 * tp + fp + fn_ == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        }
    };
    (acc, (f1_for(0) + f1_for(1)) / 2.0)
}

#[test]
fn metrics_match_oracle_on_200_random_cases() {
    let mut rng = stream_rng(2025, 0);
    for case in 0..200 {
        let n = rng.gen_range(1..300usize);
        let bias: f64 = rng.gen_range(0.05..0.95);
        let truth: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<f64>() < bias)).collect();
        let pred: Vec<u8> = truth
            .iter()
            .map(|&t| if rng.gen::<f64>() < 0.7 { t } else { rng.gen_range(0..2u8) })
            .collect();
        let (acc_oracle, f1_oracle) = oracle_metrics(&pred, &truth);
        assert!((accuracy(&pred, &truth).unwrap() - acc_oracle).abs() < 1e-12, "case {case}");
        assert!((macro_f1(&pred, &truth).unwrap() - f1_oracle).abs() < 1e-12, "case {case}");
    }
}

#[test]
fn majority_baseline_numbers() {
    let truth: Vec<u8> = std::iter::repeat_n(0u8, 62).chain(std::iter::repeat_n(1u8, 38)).collect();
    let pred = vec![0u8; 100];
    let (acc_oracle, f1_oracle) = oracle_metrics(&pred, &truth);
    assert!((accuracy(&pred, &truth).unwrap() - 0.62).abs() < 1e-12);
    assert!((accuracy(&pred, &truth).unwrap() - acc_oracle).abs() < 1e-12);
    assert!((macro_f1(&pred, &truth).unwrap() - f1_oracle).abs() < 1e-12);
    assert!((macro_f1(&pred, &truth).unwrap() - 0.383).abs() < 1e-3);
}

fn tiny_dataset(seed: u64) -> cogload_core::evalharness::LabeledDataset {
    let spec = SynthSpec {
        n_participants: 6,
        duration_s: 80.0,
        seed,
        ..SynthSpec::default()
    };
    let recordings = synth_generate(&spec).unwrap();
    labeled_dataset(&recordings, &PreprocConfig::default(), &FeatureConfig::default()).unwrap()
}

fn tiny_config() -> HarnessConfig {
    HarnessConfig {
        k: 3,
        group_by: GroupBy::Participant,
        enc: EncoderConfig {
            n_blocks: 1,
            d_model: 8,
            n_heads: 2,
            dropout_p: 0.0,
            ..EncoderConfig::default()
        },
        head: HeadConfig::downstream(),
        train: TrainRunConfig {
            epochs: 3,
            batch_size: 16,
            lr: 1e-3,
            seed: 42,
            ..TrainRunConfig::default()
        },
    }
}

#[test]
fn fold_stats_use_training_side_only() {
    let dataset = tiny_dataset(60);
    let cfg = tiny_config();
    let plans = plan_folds(&dataset, &cfg).unwrap();
    let outcome = run_fold::<f32>(&dataset, &plans[0], None, &cfg).unwrap();

    // Recompute the stats from scratch: all tokens of recordings whose
    // participants are NOT in fold 0's test set.
    let test_recs: std::collections::BTreeSet<String> = outcome
        .predictions
        .iter()
        .map(|p| p.recording_id.clone())
        .collect();
    let train_tokens: Vec<_> = dataset
        .recordings
        .iter()
        .filter(|r| !test_recs.contains(&r.recording_id))
        .flat_map(|r| r.tokens.iter().cloned())
        .collect();
    let recomputed = NormStats::from_tokens(&train_tokens).unwrap();
    for (a, b) in outcome.norm_stats.mean.iter().zip(&recomputed.mean) {
        assert!((a - b).abs() < 1e-12, "fold stats leaked test data");
    }
    for (a, b) in outcome.norm_stats.std.iter().zip(&recomputed.std) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn run_experiment_is_deterministic_and_fold_order_free() {
    let dataset = tiny_dataset(61);
    let cfg = tiny_config();
    let (a, preds_a) = run_experiment::<f32>(&dataset, None, &cfg).unwrap();
    let (b, preds_b) = run_experiment::<f32>(&dataset, None, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(preds_a, preds_b);

    // folds executed in reverse order must assemble to the same result
    let plans = plan_folds(&dataset, &cfg).unwrap();
    let outcomes: Vec<_> = plans
        .iter()
        .rev()
        .map(|p| run_fold::<f32>(&dataset, p, None, &cfg).unwrap())
        .collect();
    let (c, preds_c) = cogload_core::evalharness::assemble_outcomes(outcomes).unwrap();
    assert_eq!(a, c);
    assert_eq!(preds_a, preds_c);
}

#[test]
fn scores_are_bounded_and_fold_count_matches() {
    let dataset = tiny_dataset(62);
    let cfg = tiny_config();
    let (metrics, preds) = run_experiment::<f32>(&dataset, None, &cfg).unwrap();
    assert_eq!(metrics.folds.len(), 3);
    assert!(metrics.folds.iter().all(|f| (0.0..=1.0).contains(&f.accuracy)));
    assert!(metrics.folds.iter().all(|f| (0.0..=1.0).contains(&f.macro_f1)));
    assert!(metrics.std_accuracy >= 0.0 && metrics.std_macro_f1 >= 0.0);
    // every prediction row carries exactly three votes whose majority is
    // the final label
    for row in &preds {
        let ones: usize = row.votes.iter().map(|&v| v as usize).sum();
        assert_eq!(row.final_label, u8::from(ones >= 2));
    }
}

#[test]
fn kfold_rejects_too_few_groups() {
    let groups: Vec<String> = (0..5).map(|i| format!("p{i}")).collect();
    assert!(kfold_split(&groups, 10, 0).is_err());
}
