use cogload_core::data::{synth_generate, ClassProfiles, SynthSpec};
use cogload_core::evalharness::{run_experiment, GroupBy, HarnessConfig};
use cogload_core::features::FeatureConfig;
use cogload_core::model::{pretrain, EncoderConfig, HeadConfig, TrainRunConfig};
use cogload_core::pipeline::{labeled_dataset, pretraining_corpus, PreprocConfig};

const FLOOR: f64 = 2.5;

fn downstream_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        n_participants: 20,
        duration_s: 140.0,
        profiles: ClassProfiles::beta_gamma_boost(5, 2.0),
        high_fraction: 0.38,
        recording_gain_jitter: 0.5,
        band_gain_jitter: 1.0,
        noise_floor: FLOOR,
        label_noise: 0.15,
        seed,
        ..SynthSpec::default()
    }
}

fn pretrain_spec() -> SynthSpec {
    SynthSpec {
        n_participants: 30,
        duration_s: 540.0,
        recording_gain_jitter: 0.8,
        band_gain_jitter: 1.0,
        noise_floor: FLOOR,
        seed: 4242,
        ..SynthSpec::default()
    }
}

#[test]
fn transfer_gap_probe() {
    let mut pre_recs = synth_generate(&pretrain_spec()).unwrap();
    for r in pre_recs.iter_mut() { r.task_label_stream = None; }
    let (corpus, _) = pretraining_corpus(&pre_recs, &PreprocConfig::default(), &FeatureConfig::default()).unwrap();
    let enc = EncoderConfig::default();
    let pre_cfg = TrainRunConfig { epochs: 400, batch_size: 64, lr: 1e-4, seed: 4242, ..Default::default() };
    let t = std::time::Instant::now();
    let (pretrained, curve) = pretrain::<f32>(&corpus, &pre_cfg, &enc, &HeadConfig::pretrain(40)).unwrap();
    println!("pretrained on {} seqs in {:.0}s, loss {:.3} -> {:.3}", corpus.len(), t.elapsed().as_secs_f64(), curve[0], curve.last().unwrap());

    for seed in [1000u64, 2000] {
        let ds_recs = synth_generate(&downstream_spec(seed)).unwrap();
        let dataset = labeled_dataset(&ds_recs, &PreprocConfig::default(), &FeatureConfig::default()).unwrap();
        let (epochs, lr) = (300usize, 1e-3f64);
        let train = TrainRunConfig {
            epochs, batch_size: 64, lr,
            scheduler: Some((250, 0.75)),
            seed, freeze_encoder: true, ..Default::default()
        };
        let cfg = HarnessConfig { k: 10, group_by: GroupBy::Participant, enc: enc.clone(), head: HeadConfig::downstream(), train };
        let tf = std::time::Instant::now();
        let (frozen, _) = run_experiment::<f32>(&dataset, Some(&pretrained), &cfg).unwrap();
        let tfs = tf.elapsed().as_secs_f64();
        let sup_cfg = HarnessConfig { train: TrainRunConfig { freeze_encoder: false, ..cfg.train.clone() }, ..cfg.clone() };
        let ts = std::time::Instant::now();
        let (supervised, _) = run_experiment::<f32>(&dataset, None, &sup_cfg).unwrap();
        println!(
            "seed={seed}: frozen acc {:.3} f1 {:.3} ({:.0}s) | supervised acc {:.3} f1 {:.3} ({:.0}s) | gap acc {:+.1} f1 {:+.1}",
            frozen.mean_accuracy, frozen.mean_macro_f1, tfs,
            supervised.mean_accuracy, supervised.mean_macro_f1, ts.elapsed().as_secs_f64(),
            100.0 * (frozen.mean_accuracy - supervised.mean_accuracy),
            100.0 * (frozen.mean_macro_f1 - supervised.mean_macro_f1),
        );
    }
}
