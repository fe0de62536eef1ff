//! `cogload synth`: generate a synthetic dataset on disk.

use cogload_core::data::synth_generate;

use crate::config::RunConfig;
use crate::csvio::{self, ManifestRow};
use crate::error::Result;
use crate::manifest::RunManifest;

use super::{join, out_dir};

pub fn run(cfg: &RunConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let spec = cfg.synth_spec()?;
    let labeled = cfg.bool("synth.labeled")?;
    let mut recordings = synth_generate(&spec)?;
    if !labeled {
        for r in recordings.iter_mut() {
            r.task_label_stream = None;
        }
    }

    let mut manifest = RunManifest::new("synth", cfg, spec.seed);
    let mut rows = Vec::with_capacity(recordings.len());
    for rec in &recordings {
        let csv_rel = format!("recordings/{}.csv", rec.recording_id);
        csvio::write_recording_csv(rec, &join(&dir, &csv_rel))?;
        manifest.record_output(&csv_rel);
        let labels_rel = match &rec.task_label_stream {
            Some(labels) => {
                let rel = format!("recordings/{}.labels", rec.recording_id);
                csvio::write_labels(labels, &join(&dir, &rel))?;
                manifest.record_output(&rel);
                Some(rel.into())
            }
            None => None,
        };
        rows.push(ManifestRow {
            recording_id: rec.recording_id.clone(),
            participant_id: rec.participant_id.clone(),
            fs: rec.fs,
            csv_path: csv_rel.into(),
            labels_path: labels_rel,
        });
    }
    csvio::write_dataset_manifest(&rows, &join(&dir, "dataset.csv"))?;
    manifest.record_output("dataset.csv");
    manifest.record_metric("recordings", recordings.len() as f64);
    manifest.write(&join(&dir, "manifest.json"))?;
    println!(
        "synth: {} recordings ({} participants) -> {}",
        recordings.len(),
        spec.n_participants,
        dir.display()
    );
    Ok(())
}
