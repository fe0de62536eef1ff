//! End-to-end tests of the `cogload` binary: synth -> featdump ->
//! pretrain -> transfer -> eval on a tiny dataset, plus the documented
//! error families and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cogload")
}

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin()).args(args).current_dir(cwd).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn tiny_model_keys() -> &'static str {
    "model.blocks = 1\n\
     model.d_model = 8\n\
     model.heads = 2\n\
     model.dropout = 0.0\n\
     train.batch_size = 16\n\
     train.lr = 0.001\n"
}

#[test]
fn full_pipeline_runs_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();

    // 1. synth a labeled dataset
    let synth_cfg = write_config(
        root,
        "synth.cfg",
        "synth.participants = 4\n\
         synth.duration_s = 60\n\
         synth.profile_factor = 3.0\n\
         io.out_dir = data\n",
    );
    let out = run(&["synth", "--config", synth_cfg.to_str().unwrap(), "--seed", "5"], root);
    assert!(out.status.success(), "synth failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(root.join("data/dataset.csv").exists());
    assert!(root.join("data/recordings/p00_r00.csv").exists());
    assert!(root.join("data/recordings/p00_r00.labels").exists());
    assert!(root.join("data/manifest.json").exists());

    // 2. featdump twice -> identical bytes
    let feat_cfg = write_config(
        root,
        "feat.cfg",
        "data.manifest = data/dataset.csv\nio.out_dir = feats\n",
    );
    let out = run(&["featdump", "--config", feat_cfg.to_str().unwrap()], root);
    assert!(out.status.success(), "featdump failed: {}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(root.join("feats/features.csv")).unwrap();
    let out = run(&["featdump", "--config", feat_cfg.to_str().unwrap()], root);
    assert!(out.status.success());
    assert_eq!(first, std::fs::read(root.join("feats/features.csv")).unwrap());
    // header: recording_id,segment_index + 40 feature columns
    let header = String::from_utf8(first).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header.split(',').count(), 42);

    // 3. pretrain a small checkpoint
    let pre_cfg = write_config(
        root,
        "pre.cfg",
        &format!(
            "data.manifest = data/dataset.csv\n{}train.epochs = 3\nio.out_dir = pre\n",
            tiny_model_keys()
        ),
    );
    let out = run(&["pretrain", "--config", pre_cfg.to_str().unwrap(), "--seed", "5"], root);
    assert!(out.status.success(), "pretrain failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(root.join("pre/pretrained.ckpt").exists());
    let curve = std::fs::read_to_string(root.join("pre/loss_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 4); // header + 3 epochs

    // 4. frozen transfer with scheduler keys consumed
    let tr_cfg = write_config(
        root,
        "tr.cfg",
        &format!(
            "data.manifest = data/dataset.csv\n\
             transfer.checkpoint = pre/pretrained.ckpt\n\
             {}train.epochs = 4\n\
             train.freeze_encoder = true\n\
             train.scheduler_step = 2\n\
             train.scheduler_gamma = 0.5\n\
             eval.k = 2\n\
             io.out_dir = frozen\n",
            tiny_model_keys()
        ),
    );
    let out = run(&["transfer", "--config", tr_cfg.to_str().unwrap(), "--seed", "5"], root);
    assert!(out.status.success(), "transfer failed: {}", String::from_utf8_lossy(&out.stderr));
    let metrics = std::fs::read_to_string(root.join("frozen/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3); // header + 2 folds
    assert!(root.join("frozen/summary.json").exists());

    // identical rerun into a second directory -> byte-identical outputs
    let tr_cfg2 = write_config(
        root,
        "tr2.cfg",
        &std::fs::read_to_string(&tr_cfg).unwrap().replace("io.out_dir = frozen", "io.out_dir = frozen2"),
    );
    let out = run(&["transfer", "--config", tr_cfg2.to_str().unwrap(), "--seed", "5"], root);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(root.join("frozen/metrics.csv")).unwrap(),
        std::fs::read(root.join("frozen2/metrics.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(root.join("frozen/predictions.csv")).unwrap(),
        std::fs::read(root.join("frozen2/predictions.csv")).unwrap()
    );

    // 5. fine-tuned arm (freeze off) also runs
    let ft_cfg = write_config(
        root,
        "ft.cfg",
        &std::fs::read_to_string(&tr_cfg)
            .unwrap()
            .replace("train.freeze_encoder = true", "train.freeze_encoder = false")
            .replace("io.out_dir = frozen", "io.out_dir = finetuned"),
    );
    let out = run(&["transfer", "--config", ft_cfg.to_str().unwrap(), "--seed", "5"], root);
    assert!(out.status.success(), "fine-tuned failed: {}", String::from_utf8_lossy(&out.stderr));

    // 6. supervised arm needs no checkpoint
    let sup_cfg = write_config(
        root,
        "sup.cfg",
        &std::fs::read_to_string(&tr_cfg)
            .unwrap()
            .replace("transfer.checkpoint = pre/pretrained.ckpt", "transfer.supervised = true")
            .replace("train.freeze_encoder = true", "train.freeze_encoder = false")
            .replace("io.out_dir = frozen", "io.out_dir = supervised"),
    );
    let out = run(&["transfer", "--config", sup_cfg.to_str().unwrap(), "--seed", "5"], root);
    assert!(out.status.success(), "supervised failed: {}", String::from_utf8_lossy(&out.stderr));

    // 7. eval recomputes the same means from the predictions export
    let out = run(
        &["eval", "--predictions", "frozen/predictions.csv"],
        root,
    );
    assert!(out.status.success(), "eval failed: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("overall: accuracy"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("frozen/summary.json")).unwrap())
            .unwrap();
    let mean_acc = summary["mean_accuracy"].as_f64().unwrap();
    let printed: f64 = stdout
        .lines()
        .find(|l| l.starts_with("overall"))
        .and_then(|l| l.split_whitespace().nth(2))
        .and_then(|s| s.parse().ok())
        .unwrap();
    assert!((printed / 100.0 - mean_acc).abs() < 5e-5);
}

#[test]
fn exit_codes_per_error_family() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();

    // unknown config key -> 2
    let bad_key = write_config(root, "bad_key.cfg", "frobnicate = 1\n");
    let out = run(&["featdump", "--config", bad_key.to_str().unwrap()], root);
    assert_eq!(out.status.code(), Some(2));

    // missing corpus path -> 2
    let no_data = write_config(root, "no_data.cfg", "io.out_dir = x\n");
    let out = run(&["pretrain", "--config", no_data.to_str().unwrap()], root);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("data"));

    // corrupt recording CSV -> 3 with a malformed message
    std::fs::create_dir_all(root.join("d")).unwrap();
    std::fs::write(root.join("d/rec.csv"), "t,c1,c2,c3,c4\n0,1,2,oops,4\n").unwrap();
    std::fs::write(
        root.join("d/dataset.csv"),
        "recording_id,participant_id,fs,csv_path,labels_path\nr0,p0,256,rec.csv,\n",
    )
    .unwrap();
    let corrupt = write_config(root, "corrupt.cfg", "data.manifest = d/dataset.csv\nio.out_dir = y\n");
    let out = run(&["featdump", "--config", corrupt.to_str().unwrap()], root);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed"));

    // absent checkpoint with supervised=false -> 2
    let no_ckpt = write_config(
        root,
        "no_ckpt.cfg",
        "data.manifest = d/dataset.csv\ntrain.freeze_encoder = false\nio.out_dir = z\n",
    );
    let out = run(&["transfer", "--config", no_ckpt.to_str().unwrap()], root);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checkpoint"));

    // supervised run that tries to freeze -> 2
    let frozen_sup = write_config(
        root,
        "frozen_sup.cfg",
        "data.manifest = d/dataset.csv\ntransfer.supervised = true\nio.out_dir = w\n",
    );
    let out = run(&["transfer", "--config", frozen_sup.to_str().unwrap()], root);
    assert_eq!(out.status.code(), Some(2));

    // unreadable path -> 5
    let missing = write_config(root, "missing.cfg", "data.manifest = nope/nothing.csv\nio.out_dir = v\n");
    let out = run(&["featdump", "--config", missing.to_str().unwrap()], root);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn jobs_flag_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let synth_cfg = write_config(
        root,
        "synth.cfg",
        "synth.participants = 4\nsynth.duration_s = 60\nio.out_dir = data\n",
    );
    assert!(run(&["synth", "--config", synth_cfg.to_str().unwrap(), "--seed", "3"], root)
        .status
        .success());
    let tr = write_config(
        root,
        "tr.cfg",
        &format!(
            "data.manifest = data/dataset.csv\n\
             transfer.supervised = true\n\
             train.freeze_encoder = false\n\
             {}train.epochs = 3\n\
             eval.k = 2\n\
             io.out_dir = serial\n",
            tiny_model_keys()
        ),
    );
    assert!(run(&["transfer", "--config", tr.to_str().unwrap(), "--seed", "3"], root)
        .status
        .success());
    let tr2 = write_config(
        root,
        "tr2.cfg",
        &std::fs::read_to_string(&tr).unwrap().replace("io.out_dir = serial", "io.out_dir = par"),
    );
    assert!(run(
        &["transfer", "--config", tr2.to_str().unwrap(), "--seed", "3", "--jobs", "2"],
        root
    )
    .status
    .success());
    assert_eq!(
        std::fs::read(root.join("serial/metrics.csv")).unwrap(),
        std::fs::read(root.join("par/metrics.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(root.join("serial/predictions.csv")).unwrap(),
        std::fs::read(root.join("par/predictions.csv")).unwrap()
    );
}
