//! Majority-vote aggregation of per-sequence predictions.
//!
//! Every interior segment of a recording appears in exactly three
//! overlapping sequences and therefore collects three predictions; the
//! first two and last two segments collect fewer and are excluded from
//! evaluation. Three binary votes cannot tie, so no tie-break is needed.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::tokenizer::SEQ_LEN;

/// Accumulates per-segment votes keyed by (recording, segment).
#[derive(Debug, Clone, Default)]
pub struct VoteTable {
    /// (recording_id, segment_index) -> [(sequence start j, prediction)].
    votes: BTreeMap<(String, usize), Vec<(usize, u8)>>,
    submitted: BTreeSet<(String, usize)>,
}

impl VoteTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record the three predictions of sequence `j`: prediction `k` votes
    /// for segment `j + k`.
    pub fn accumulate(
        &mut self,
        recording_id: &str,
        seq_index: usize,
        preds: [u8; SEQ_LEN],
    ) -> Result<()> {
        if let Some(&bad) = preds.iter().find(|&&p| p > 1) {
            return Err(CoreError::LabelOutOfRange { value: bad as i64 });
        }
        if !self.submitted.insert((String::from(recording_id), seq_index)) {
            return Err(CoreError::DuplicateSequence {
                recording_id: String::from(recording_id),
                seq_index,
            });
        }
        for (k, &p) in preds.iter().enumerate() {
            self.votes
                .entry((String::from(recording_id), seq_index + k))
                .or_default()
                .push((seq_index, p));
        }
        Ok(())
    }

    /// Votes for one segment, ordered by source sequence index.
    pub fn votes_for(&self, recording_id: &str, segment_index: usize) -> Option<Vec<u8>> {
        self.votes.get(&(String::from(recording_id), segment_index)).map(|v| {
            let mut sorted = v.clone();
            sorted.sort_unstable_by_key(|&(j, _)| j);
            sorted.into_iter().map(|(_, p)| p).collect()
        })
    }

    /// Majority label per fully voted segment; segments with fewer than
    /// three votes are omitted.
    pub fn finalize(&self) -> BTreeMap<(String, usize), u8> {
        self.votes
            .iter()
            .filter(|(_, v)| v.len() == SEQ_LEN)
            .map(|(key, v)| {
                let ones = v.iter().filter(|&&(_, p)| p == 1).count();
                (key.clone(), u8::from(ones * 2 > SEQ_LEN))
            })
            .collect()
    }
}
