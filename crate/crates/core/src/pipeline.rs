//! Recording-to-token glue: preprocessing, segmentation, extraction.

use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;

use crate::data::{binarize_labels, select_channels, ChannelMap, Recording};
use crate::error::{CoreError, Result};
use crate::evalharness::{LabeledDataset, LabeledRecording};
use crate::features::{
    zscore_normalize, FeatureConfig, FeatureExtractor, FeatureToken, NormStats,
};
use crate::sigproc::{self, BiquadCascade};
use crate::tokenizer::{build_sequences, segment_recording, TokenSequence};

/// Preprocessing settings; defaults follow the pipeline conventions
/// (1-75 Hz bandpass, 60 Hz notch with Q = 30, forward-only filtering).
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocConfig {
    pub bandpass: Option<(f64, f64)>,
    pub bandpass_order: usize,
    /// Notch as (center_hz, q).
    pub notch: Option<(f64, f64)>,
    /// Forward-backward filtering for zero net phase; off by default.
    pub zero_phase: bool,
    /// Seconds to drop from the start of each recording after filtering,
    /// to shed the zero-state transient. Only valid for unlabeled
    /// recordings, since it shifts segment boundaries.
    pub discard_first_s: f64,
    /// Channel selection applied before filtering; None keeps the
    /// recording's channels as-is.
    pub channel_map: Option<ChannelMap>,
}

impl Default for PreprocConfig {
    fn default() -> Self {
        Self {
            bandpass: Some((1.0, 75.0)),
            bandpass_order: 2,
            notch: Some((60.0, 30.0)),
            zero_phase: false,
            discard_first_s: 0.0,
            channel_map: None,
        }
    }
}

impl PreprocConfig {
    fn build_cascade(&self, fs: f64) -> Result<Option<BiquadCascade>> {
        let mut cascade: Option<BiquadCascade> = None;
        if let Some((low, high)) = self.bandpass {
            cascade = Some(sigproc::design_butterworth_bandpass(
                low,
                high,
                self.bandpass_order,
                fs,
            )?);
        }
        if let Some((f0, q)) = self.notch {
            let notch = sigproc::design_notch(f0, q, fs)?;
            cascade = Some(match cascade {
                Some(c) => c.then(&notch)?,
                None => notch,
            });
        }
        Ok(cascade)
    }
}

/// Channel-select, filter, and optionally trim a recording.
pub fn preprocess(rec: &Recording, cfg: &PreprocConfig) -> Result<Recording> {
    let rec = match &cfg.channel_map {
        Some(map) => select_channels(rec, map)?,
        None => rec.clone(),
    };
    let cascade = cfg.build_cascade(rec.fs)?;
    let mut samples = Vec::with_capacity(rec.samples.len());
    for ch in &rec.samples {
        let filtered = match &cascade {
            Some(c) if cfg.zero_phase => sigproc::apply_zero_phase(c, ch)?,
            Some(c) => sigproc::apply_iir(c, ch)?,
            None => ch.clone(),
        };
        samples.push(filtered);
    }
    let mut task_label_stream = rec.task_label_stream.clone();
    if cfg.discard_first_s > 0.0 {
        if task_label_stream.is_some() {
            return Err(CoreError::Config(String::from(
                "discard_first_s would misalign labels; only valid for unlabeled recordings",
            )));
        }
        let drop = (cfg.discard_first_s * rec.fs).round() as usize;
        for ch in samples.iter_mut() {
            if drop >= ch.len() {
                ch.clear();
            } else {
                ch.drain(..drop);
            }
        }
        task_label_stream = None;
    }
    Recording::new(
        rec.recording_id.clone(),
        rec.participant_id.clone(),
        rec.fs,
        rec.channel_names.clone(),
        samples,
        task_label_stream,
    )
}

/// Preprocess and extract one un-normalized token per 10-second segment.
pub fn extract_tokens(
    rec: &Recording,
    preproc: &PreprocConfig,
    feat: &FeatureConfig,
) -> Result<Vec<FeatureToken>> {
    let clean = preprocess(rec, preproc)?;
    let extractor = FeatureExtractor::new(clean.fs, feat.clone())?;
    let segments = segment_recording(&clean)?;
    segments
        .iter()
        .enumerate()
        .map(|(si, seg)| extractor.extract(seg, &clean.recording_id, si))
        .collect()
}

/// Tokenize recordings into a normalized pre-training corpus.
///
/// Statistics are computed over the whole corpus (it is all training
/// data) and returned alongside the sequences.
pub fn pretraining_corpus(
    recordings: &[Recording],
    preproc: &PreprocConfig,
    feat: &FeatureConfig,
) -> Result<(Vec<TokenSequence>, NormStats)> {
    let mut per_recording: Vec<Vec<FeatureToken>> = Vec::with_capacity(recordings.len());
    let mut all: Vec<FeatureToken> = Vec::new();
    for rec in recordings {
        let tokens = extract_tokens(rec, preproc, feat)?;
        all.extend(tokens.iter().cloned());
        per_recording.push(tokens);
    }
    let stats = NormStats::from_tokens(&all)?;
    let mut sequences = Vec::new();
    for tokens in &per_recording {
        let (normalized, _) = zscore_normalize(tokens, Some(&stats))?;
        sequences.extend(build_sequences(&normalized));
    }
    Ok((sequences, stats))
}

/// Tokenize labeled recordings for the evaluation harness. Tokens stay
/// un-normalized; the harness computes per-fold statistics.
pub fn labeled_dataset(
    recordings: &[Recording],
    preproc: &PreprocConfig,
    feat: &FeatureConfig,
) -> Result<LabeledDataset> {
    let mut out = LabeledDataset::default();
    for rec in recordings {
        let raw = rec.task_label_stream.as_ref().ok_or_else(|| {
            CoreError::Config(alloc::format!(
                "recording {} has no labels",
                rec.recording_id
            ))
        })?;
        let labels = binarize_labels(raw)?;
        let tokens = extract_tokens(rec, preproc, feat)?;
        if labels.len() != tokens.len() {
            return Err(CoreError::LabelCountMismatch {
                labels: labels.len(),
                segments: tokens.len(),
            });
        }
        out.recordings.push(LabeledRecording {
            recording_id: rec.recording_id.clone(),
            participant_id: rec.participant_id.clone(),
            tokens,
            labels,
        });
    }
    Ok(out)
}
