//! CSV readers and writers for every on-disk format.
//!
//! All floats are written with Rust's shortest round-trip formatting, so
//! rewriting the same data yields byte-identical files and reloading
//! recovers the exact values.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use cogload_core::data::Recording;
use cogload_core::evalharness::{PredictionRow, RunMetrics};
use cogload_core::features::{FeatureToken, NormStats, FEAT_DE, FEAT_PSD};

use crate::error::{CliError, Result};

fn malformed(path: &Path, line: usize, msg: impl Into<String>) -> CliError {
    CliError::Malformed { path: path.to_path_buf(), line, msg: msg.into() }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    let mut f = std::fs::File::create(path).map_err(CliError::io(path))?;
    f.write_all(content.as_bytes()).map_err(CliError::io(path))?;
    Ok(())
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| malformed(path, line, format!("non-numeric value '{field}'")))
}

/// Recording CSV: header `t,<ch1>,...,<chN>`, one sample per row.
pub fn write_recording_csv(rec: &Recording, path: &Path) -> Result<()> {
    let mut out = String::from("t");
    for name in &rec.channel_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..rec.len() {
        let _ = write!(out, "{}", i as f64 / rec.fs);
        for ch in &rec.samples {
            let _ = write!(out, ",{}", ch[i]);
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// Parse a recording CSV; metadata comes from the dataset manifest.
pub fn read_recording_csv(
    path: &Path,
    recording_id: &str,
    participant_id: &str,
    fs: f64,
    labels: Option<Vec<u8>>,
) -> Result<Recording> {
    let file = std::fs::File::open(path).map_err(CliError::io(path))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(path, 1, "empty file"))?;
    let header = header.map_err(CliError::io(path))?;
    let mut cols = header.split(',');
    if cols.next() != Some("t") {
        return Err(malformed(path, 1, "header must start with 't'"));
    }
    let channel_names: Vec<String> = cols.map(str::to_string).collect();
    if channel_names.is_empty() {
        return Err(malformed(path, 1, "no channel columns"));
    }
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); channel_names.len()];
    for (idx, line) in lines {
        let line = line.map_err(CliError::io(path))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != channel_names.len() + 1 {
            return Err(malformed(
                path,
                idx + 1,
                format!("expected {} fields, got {}", channel_names.len() + 1, fields.len()),
            ));
        }
        for (ch, field) in fields[1..].iter().enumerate() {
            samples[ch].push(parse_f64(path, idx + 1, field)?);
        }
    }
    Ok(Recording::new(
        recording_id.to_string(),
        participant_id.to_string(),
        fs,
        channel_names,
        samples,
        labels,
    )?)
}

/// Label sidecar: one integer (1..9) per line.
pub fn write_labels(labels: &[u8], path: &Path) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    write_file(path, &out)
}

pub fn read_labels(path: &Path) -> Result<Vec<u8>> {
    let file = std::fs::File::open(path).map_err(CliError::io(path))?;
    let mut labels = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(CliError::io(path))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        labels.push(
            trimmed
                .parse()
                .map_err(|_| malformed(path, idx + 1, format!("bad label '{trimmed}'")))?,
        );
    }
    Ok(labels)
}

/// One dataset-manifest row: where a recording lives.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub recording_id: String,
    pub participant_id: String,
    pub fs: f64,
    pub csv_path: PathBuf,
    pub labels_path: Option<PathBuf>,
}

/// Dataset manifest CSV:
/// `recording_id,participant_id,fs,csv_path,labels_path` (labels optional).
pub fn write_dataset_manifest(rows: &[ManifestRow], path: &Path) -> Result<()> {
    let mut out = String::from("recording_id,participant_id,fs,csv_path,labels_path\n");
    for r in rows {
        let labels = r.labels_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{labels}",
            r.recording_id,
            r.participant_id,
            r.fs,
            r.csv_path.display()
        );
    }
    write_file(path, &out)
}

pub fn read_dataset_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let file = std::fs::File::open(path).map_err(CliError::io(path))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(CliError::io(path))?;
        if idx == 0 || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(malformed(path, idx + 1, format!("expected 5 fields, got {}", fields.len())));
        }
        rows.push(ManifestRow {
            recording_id: fields[0].to_string(),
            participant_id: fields[1].to_string(),
            fs: parse_f64(path, idx + 1, fields[2])?,
            csv_path: PathBuf::from(fields[3]),
            labels_path: if fields[4].is_empty() { None } else { Some(PathBuf::from(fields[4])) },
        });
    }
    if rows.is_empty() {
        return Err(malformed(path, 1, "manifest lists no recordings"));
    }
    Ok(rows)
}

/// Load every recording named by a dataset manifest. Relative paths are
/// resolved against the manifest's directory.
pub fn load_recordings(manifest_path: &Path) -> Result<Vec<Recording>> {
    let rows = read_dataset_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    rows.iter()
        .map(|row| {
            let labels = match &row.labels_path {
                Some(p) => Some(read_labels(&resolve(p))?),
                None => None,
            };
            read_recording_csv(
                &resolve(&row.csv_path),
                &row.recording_id,
                &row.participant_id,
                row.fs,
                labels,
            )
        })
        .collect()
}

/// Column names of the 40 feature values: PSD-major, then band-major,
/// then channel-major.
pub fn feature_column_names() -> Vec<String> {
    let bands = ["delta", "theta", "alpha", "beta", "gamma"];
    let mut names = Vec::with_capacity(40);
    for feat in ["psd", "de"] {
        for band in bands {
            for ch in 0..4 {
                names.push(format!("{feat}_{band}_c{ch}"));
            }
        }
    }
    names
}

/// Feature dump CSV: one row per token.
pub fn write_features_csv(tokens: &[FeatureToken], path: &Path) -> Result<()> {
    let mut out = String::from("recording_id,segment_index");
    for name in feature_column_names() {
        out.push(',');
        out.push_str(&name);
    }
    out.push('\n');
    for t in tokens {
        let _ = write!(out, "{},{}", t.recording_id, t.segment_index);
        let (_, b, c) = t.shape();
        for feat in [FEAT_PSD, FEAT_DE] {
            for band in 0..b {
                for ch in 0..c {
                    let _ = write!(out, ",{}", t.get(feat, band, ch));
                }
            }
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// Normalization statistics CSV: `feature,mean,std`.
pub fn write_norm_stats(stats: &NormStats, path: &Path) -> Result<()> {
    let names = feature_column_names();
    let mut out = String::from("feature,mean,std\n");
    for (i, name) in names.iter().enumerate() {
        let _ = writeln!(out, "{name},{},{}", stats.mean[i], stats.std[i]);
    }
    write_file(path, &out)
}

pub fn read_norm_stats(path: &Path) -> Result<NormStats> {
    let file = std::fs::File::open(path).map_err(CliError::io(path))?;
    let mut mean = Vec::new();
    let mut std = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(CliError::io(path))?;
        if idx == 0 || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(malformed(path, idx + 1, "expected feature,mean,std"));
        }
        mean.push(parse_f64(path, idx + 1, fields[1])?);
        std.push(parse_f64(path, idx + 1, fields[2])?);
    }
    Ok(NormStats { mean, std })
}

/// Loss curve CSV: `epoch,loss`.
pub fn write_loss_curve(curve: &[f64], path: &Path) -> Result<()> {
    let mut out = String::from("epoch,loss\n");
    for (i, loss) in curve.iter().enumerate() {
        let _ = writeln!(out, "{},{loss}", i + 1);
    }
    write_file(path, &out)
}

/// Per-fold metrics CSV: `fold,accuracy,macro_f1`.
pub fn write_metrics_csv(metrics: &RunMetrics, path: &Path) -> Result<()> {
    let mut out = String::from("fold,accuracy,macro_f1\n");
    for f in &metrics.folds {
        let _ = writeln!(out, "{},{},{}", f.fold, f.accuracy, f.macro_f1);
    }
    write_file(path, &out)
}

/// Predictions export CSV.
pub fn write_predictions_csv(rows: &[PredictionRow], path: &Path) -> Result<()> {
    let mut out =
        String::from("fold,recording_id,segment_index,vote0,vote1,vote2,final_label,ground_truth\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.fold,
            r.recording_id,
            r.segment_index,
            r.votes[0],
            r.votes[1],
            r.votes[2],
            r.final_label,
            r.ground_truth
        );
    }
    write_file(path, &out)
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<PredictionRow>> {
    let file = std::fs::File::open(path).map_err(CliError::io(path))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(CliError::io(path))?;
        if idx == 0 || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(malformed(path, idx + 1, format!("expected 8 fields, got {}", fields.len())));
        }
        let parse_u8 = |f: &str| -> Result<u8> {
            f.parse().map_err(|_| malformed(path, idx + 1, format!("bad value '{f}'")))
        };
        rows.push(PredictionRow {
            fold: fields[0]
                .parse()
                .map_err(|_| malformed(path, idx + 1, "bad fold"))?,
            recording_id: fields[1].to_string(),
            segment_index: fields[2]
                .parse()
                .map_err(|_| malformed(path, idx + 1, "bad segment index"))?,
            votes: [parse_u8(fields[3])?, parse_u8(fields[4])?, parse_u8(fields[5])?],
            final_label: parse_u8(fields[6])?,
            ground_truth: parse_u8(fields[7])?,
        });
    }
    Ok(rows)
}

/// One swept variant's mean scores with fold spread.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: String,
    pub accuracy: f64,
    pub accuracy_std: f64,
    pub macro_f1: f64,
    pub macro_f1_std: f64,
}

/// Ablation matrix CSV: one row per swept variant.
pub fn write_ablation_csv(rows: &[AblationRow], path: &Path) -> Result<()> {
    let mut out = String::from("variant,accuracy,accuracy_std,macro_f1,macro_f1_std\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.variant, r.accuracy, r.accuracy_std, r.macro_f1, r.macro_f1_std
        );
    }
    write_file(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recording_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        let rec = Recording::new(
            "r0".into(),
            "p0".into(),
            256.0,
            vec!["TP9".into(), "AF7".into(), "AF8".into(), "TP10".into()],
            (0..4)
                .map(|c| (0..2560).map(|i| ((i * 7 + c * 13) as f64).sin() * 1e-3).collect())
                .collect(),
            Some(vec![4]),
        )
        .unwrap();
        write_recording_csv(&rec, &path).unwrap();
        let back = read_recording_csv(&path, "r0", "p0", 256.0, Some(vec![4])).unwrap();
        assert_eq!(rec, back);
    }

    #[test]
    fn non_numeric_cell_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,c1\n0,oops\n").unwrap();
        match read_recording_csv(&path, "r", "p", 256.0, None) {
            Err(CliError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed, got {other:?}"),
        }
    }

    #[test]
    fn feature_columns_are_psd_major() {
        let names = feature_column_names();
        assert_eq!(names.len(), 40);
        assert_eq!(names[0], "psd_delta_c0");
        assert_eq!(names[3], "psd_delta_c3");
        assert_eq!(names[4], "psd_theta_c0");
        assert_eq!(names[20], "de_delta_c0");
        assert_eq!(names[39], "de_gamma_c3");
    }

    #[test]
    fn norm_stats_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.csv");
        let stats = NormStats {
            mean: (0..40).map(|i| i as f64 * 0.31).collect(),
            std: (0..40).map(|i| 1.0 + i as f64 * 0.07).collect(),
        };
        write_norm_stats(&stats, &path).unwrap();
        assert_eq!(read_norm_stats(&path).unwrap(), stats);
    }

    #[test]
    fn predictions_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pred.csv");
        let rows = vec![PredictionRow {
            fold: 2,
            recording_id: "p03_r00".into(),
            segment_index: 7,
            votes: [1, 0, 1],
            final_label: 1,
            ground_truth: 0,
        }];
        write_predictions_csv(&rows, &path).unwrap();
        assert_eq!(read_predictions_csv(&path).unwrap(), rows);
    }
}
