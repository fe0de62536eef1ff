//! Error type shared across the core pipeline.

use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Filter band edges are out of order or at/above Nyquist.
    InvalidBand { low_hz: f64, high_hz: f64, nyquist_hz: f64 },
    /// A sample vector contained NaN or infinity.
    NonFiniteInput,
    /// Input shorter than one Welch segment.
    SegmentTooShort { len: usize, nperseg: usize },
    /// No spectral bins fall inside the requested band.
    EmptyBand { low_hz: f64, high_hz: f64 },
    /// Recording shorter than one 10-second segment.
    RecordingTooShort { samples: usize, needed: usize },
    /// mask_sequence called on a sequence that already carries a mask.
    AlreadyMasked,
    /// Tensor operands have incompatible shapes.
    ShapeMismatch(String),
    /// A trainable tensor had no gradient at optimizer-step time.
    MissingGrad(String),
    /// Invalid model or run configuration.
    Config(String),
    /// Pre-training corpus is empty.
    EmptyCorpus,
    /// Transfer source lacks encoder tensors.
    MissingEncoder,
    /// Label outside its documented range.
    LabelOutOfRange { value: i64 },
    /// The same (recording, sequence) pair was accumulated twice.
    DuplicateSequence { recording_id: String, seq_index: usize },
    /// Fewer groups than folds.
    TooFewGroups { groups: usize, k: usize },
    /// Prediction and truth vectors differ in length.
    LengthMismatch { pred: usize, truth: usize },
    /// A named channel is missing from the recording.
    UnknownChannel(String),
    /// Recording has a different channel count than expected.
    ChannelCountMismatch { expected: usize, found: usize },
    /// Label sidecar length disagrees with the segment count.
    LabelCountMismatch { labels: usize, segments: usize },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidBand { low_hz, high_hz, nyquist_hz } => write!(
                f,
                "invalid band {low_hz}-{high_hz} Hz (Nyquist {nyquist_hz} Hz)"
            ),
            CoreError::NonFiniteInput => write!(f, "input contains NaN or infinite samples"),
            CoreError::SegmentTooShort { len, nperseg } => {
                write!(f, "input of {len} samples shorter than nperseg {nperseg}")
            }
            CoreError::EmptyBand { low_hz, high_hz } => {
                write!(f, "no spectral bins inside band {low_hz}-{high_hz} Hz")
            }
            CoreError::RecordingTooShort { samples, needed } => {
                write!(f, "recording of {samples} samples shorter than one segment ({needed})")
            }
            CoreError::AlreadyMasked => write!(f, "sequence already carries a mask"),
            CoreError::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            CoreError::MissingGrad(name) => write!(f, "trainable tensor '{name}' has no gradient"),
            CoreError::Config(msg) => write!(f, "configuration error: {msg}"),
            CoreError::EmptyCorpus => write!(f, "pre-training corpus is empty"),
            CoreError::MissingEncoder => write!(f, "parameter group has no encoder tensors"),
            CoreError::LabelOutOfRange { value } => write!(f, "label {value} out of range"),
            CoreError::DuplicateSequence { recording_id, seq_index } => {
                write!(f, "sequence ({recording_id}, {seq_index}) accumulated twice")
            }
            CoreError::TooFewGroups { groups, k } => {
                write!(f, "{groups} groups cannot fill {k} folds")
            }
            CoreError::LengthMismatch { pred, truth } => {
                write!(f, "prediction length {pred} != truth length {truth}")
            }
            CoreError::UnknownChannel(name) => write!(f, "channel '{name}' not in recording"),
            CoreError::ChannelCountMismatch { expected, found } => {
                write!(f, "expected {expected} channels, found {found}")
            }
            CoreError::LabelCountMismatch { labels, segments } => {
                write!(f, "{labels} labels for {segments} segments")
            }
        }
    }
}

impl core::error::Error for CoreError {}

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, CoreError>;
