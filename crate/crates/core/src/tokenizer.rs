//! Segmentation into 10-second windows, overlapping length-3 sequences,
//! and pre-training masks.

use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;

use crate::data::Recording;
use crate::error::{CoreError, Result};
use crate::features::{FeatureToken, SEGMENT_SECONDS};

/// Number of tokens per model input sequence.
pub const SEQ_LEN: usize = 3;

/// Three consecutive feature tokens from one recording.
///
/// `mask_index` is set only during pre-training; the masked token's
/// original values stay in `tokens` as the reconstruction target, and the
/// zero substitution happens in the model input path.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    pub tokens: [FeatureToken; 3],
    pub mask_index: Option<usize>,
    pub recording_id: String,
    /// Index of the first segment in this sequence.
    pub start_index: usize,
}

impl TokenSequence {
    /// The reconstruction target: the masked token's original values.
    pub fn ground_truth(&self) -> Option<&FeatureToken> {
        self.mask_index.map(|m| &self.tokens[m])
    }
}

/// Cut a recording into complete 10-second per-channel segments,
/// dropping trailing samples.
pub fn segment_recording(rec: &Recording) -> Result<Vec<Vec<Vec<f64>>>> {
    let seg_len = (SEGMENT_SECONDS * rec.fs).round() as usize;
    let n = rec.n_segments();
    if n == 0 {
        return Err(CoreError::RecordingTooShort { samples: rec.len(), needed: seg_len });
    }
    let mut segments = Vec::with_capacity(n);
    for si in 0..n {
        let seg: Vec<Vec<f64>> = rec
            .samples
            .iter()
            .map(|ch| ch[si * seg_len..(si + 1) * seg_len].to_vec())
            .collect();
        segments.push(seg);
    }
    Ok(segments)
}

/// Build all stride-1 length-3 sequences over one recording's tokens.
///
/// Tokens must be consecutive segments of a single recording; n tokens
/// yield max(n-2, 0) sequences, so sequences never span recordings.
pub fn build_sequences(tokens: &[FeatureToken]) -> Vec<TokenSequence> {
    debug_assert!(tokens.windows(2).all(|w| {
        w[0].recording_id == w[1].recording_id
            && w[1].segment_index == w[0].segment_index + 1
    }));
    if tokens.len() < SEQ_LEN {
        return Vec::new();
    }
    (0..=tokens.len() - SEQ_LEN)
        .map(|j| TokenSequence {
            tokens: [tokens[j].clone(), tokens[j + 1].clone(), tokens[j + 2].clone()],
            mask_index: None,
            recording_id: tokens[j].recording_id.clone(),
            start_index: tokens[j].segment_index,
        })
        .collect()
}

/// Draw a uniform mask position for one sequence.
pub fn mask_sequence<R: Rng + ?Sized>(seq: &TokenSequence, rng: &mut R) -> Result<TokenSequence> {
    if seq.mask_index.is_some() {
        return Err(CoreError::AlreadyMasked);
    }
    let mut out = seq.clone();
    out.mask_index = Some(rng.gen_range(0..SEQ_LEN));
    Ok(out)
}
