//! End-to-end training behavior on synthetic corpora: reconstruction
//! loss decreases, separable data is learnable through a frozen encoder,
//! and degenerate label sets drive BCE toward zero.

use cogload_core::data::{synth_generate, ClassProfiles, SynthSpec};
use cogload_core::evalharness::accuracy;
use cogload_core::features::FeatureConfig;
use cogload_core::model::{
    predict_batch, pretrain, train_downstream, transfer, EncoderConfig, HeadConfig,
    TrainRunConfig,
};
use cogload_core::pipeline::{labeled_dataset, pretraining_corpus, PreprocConfig};
use cogload_core::tokenizer::TokenSequence;

fn small_encoder() -> EncoderConfig {
    EncoderConfig { n_blocks: 2, d_model: 16, n_heads: 2, ..EncoderConfig::default() }
}

fn unlabeled_recordings(n: usize, duration_s: f64, seed: u64) -> Vec<cogload_core::data::Recording> {
    let spec = SynthSpec {
        n_participants: n,
        duration_s,
        seed,
        // varied per-recording spectra give masking something to learn
        recording_gain_jitter: 0.8,
        ..SynthSpec::default()
    };
    let mut recs = synth_generate(&spec).unwrap();
    for r in recs.iter_mut() {
        r.task_label_stream = None;
    }
    recs
}

#[test]
fn pretraining_loss_decreases() {
    let recs = unlabeled_recordings(4, 120.0, 5);
    let (corpus, _) =
        pretraining_corpus(&recs, &PreprocConfig::default(), &FeatureConfig::default()).unwrap();
    assert!(corpus.len() >= 40);
    let cfg = TrainRunConfig {
        epochs: 30,
        batch_size: 16,
        lr: 1e-3,
        seed: 7,
        ..TrainRunConfig::default()
    };
    let enc = small_encoder();
    let (_, curve) = pretrain::<f32>(&corpus, &cfg, &enc, &HeadConfig::pretrain(40)).unwrap();
    let head_mean: f64 = curve[..5].iter().sum::<f64>() / 5.0;
    let tail_mean: f64 = curve[curve.len() - 5..].iter().sum::<f64>() / 5.0;
    assert!(
        tail_mean < 0.8 * head_mean,
        "loss did not improve: first {head_mean}, last {tail_mean}"
    );
}

#[test]
fn frozen_transfer_learns_separable_data() {
    // strong class signature so the task is nearly separable
    let spec = SynthSpec {
        n_participants: 6,
        duration_s: 120.0,
        profiles: ClassProfiles::beta_gamma_boost(5, 4.0),
        recording_gain_jitter: 0.0,
        noise_floor: 0.1,
        seed: 11,
        ..SynthSpec::default()
    };
    let recordings = synth_generate(&spec).unwrap();
    let dataset =
        labeled_dataset(&recordings, &PreprocConfig::default(), &FeatureConfig::default())
            .unwrap();

    // pretrain on a matching unlabeled corpus
    let pre_recs = unlabeled_recordings(6, 120.0, 12);
    let (corpus, _) =
        pretraining_corpus(&pre_recs, &PreprocConfig::default(), &FeatureConfig::default())
            .unwrap();
    let enc = small_encoder();
    let pre_cfg = TrainRunConfig {
        epochs: 40,
        batch_size: 32,
        lr: 1e-3,
        seed: 13,
        ..TrainRunConfig::default()
    };
    let (pretrained, _) =
        pretrain::<f32>(&corpus, &pre_cfg, &enc, &HeadConfig::pretrain(40)).unwrap();

    // normalize the labeled data over itself (train accuracy check only)
    let all_tokens: Vec<_> =
        dataset.recordings.iter().flat_map(|r| r.tokens.iter().cloned()).collect();
    let stats = cogload_core::features::NormStats::from_tokens(&all_tokens).unwrap();
    let mut train_data: Vec<(TokenSequence, [u8; 3])> = Vec::new();
    for rec in &dataset.recordings {
        let (normalized, _) =
            cogload_core::features::zscore_normalize(&rec.tokens, Some(&stats)).unwrap();
        for seq in cogload_core::tokenizer::build_sequences(&normalized) {
            let j = seq.start_index;
            train_data.push((seq, [rec.labels[j], rec.labels[j + 1], rec.labels[j + 2]]));
        }
    }

    let head = HeadConfig::downstream();
    let params = transfer(&pretrained, &head, true, 17).unwrap();
    let train_cfg = TrainRunConfig {
        epochs: 200,
        batch_size: 32,
        lr: 1e-3,
        seed: 17,
        freeze_encoder: true,
        ..TrainRunConfig::default()
    };
    let (trained, _) = train_downstream(&train_data, &train_cfg, &enc, &head, params).unwrap();

    let seqs: Vec<TokenSequence> = train_data.iter().map(|(s, _)| s.clone()).collect();
    let preds = predict_batch(&trained, &enc, &head, &seqs).unwrap();
    let mut flat_pred = Vec::new();
    let mut flat_true = Vec::new();
    for (p, (_, labels)) in preds.iter().zip(&train_data) {
        flat_pred.extend_from_slice(p);
        flat_true.extend_from_slice(labels);
    }
    let train_acc = accuracy(&flat_pred, &flat_true).unwrap();
    assert!(train_acc > 0.9, "train accuracy {train_acc}");
}

#[test]
fn constant_labels_drive_bce_down() {
    let spec = SynthSpec { n_participants: 3, duration_s: 90.0, seed: 21, ..SynthSpec::default() };
    let recordings = synth_generate(&spec).unwrap();
    let dataset =
        labeled_dataset(&recordings, &PreprocConfig::default(), &FeatureConfig::default())
            .unwrap();
    let all_tokens: Vec<_> =
        dataset.recordings.iter().flat_map(|r| r.tokens.iter().cloned()).collect();
    let stats = cogload_core::features::NormStats::from_tokens(&all_tokens).unwrap();
    let mut train_data: Vec<(TokenSequence, [u8; 3])> = Vec::new();
    for rec in &dataset.recordings {
        let (normalized, _) =
            cogload_core::features::zscore_normalize(&rec.tokens, Some(&stats)).unwrap();
        for seq in cogload_core::tokenizer::build_sequences(&normalized) {
            train_data.push((seq, [1, 1, 1])); // all labels identical
        }
    }
    let enc = small_encoder();
    let head = HeadConfig::downstream();
    let mut rng = cogload_core::seeding::stream_rng(23, 0);
    let params = cogload_core::model::build_model::<f32, _>(&enc, &head, &mut rng).unwrap();
    let cfg = TrainRunConfig {
        epochs: 60,
        batch_size: 16,
        lr: 1e-3,
        seed: 23,
        ..TrainRunConfig::default()
    };
    let (_, curve) = train_downstream(&train_data, &cfg, &enc, &head, params).unwrap();
    let last = *curve.last().unwrap();
    assert!(last < 0.1, "BCE stuck at {last}");
}
