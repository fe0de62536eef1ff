//! Recordings, channel mapping, label binarization and the synthetic
//! EEG generator used for desk-scale verification.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{CoreError, Result};
use crate::features::{BandSet, SEGMENT_SECONDS, TOKEN_CHANNELS};
use crate::seeding;
use crate::sigproc;

/// Multichannel raw EEG with optional per-segment raw labels (1..9).
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub recording_id: String,
    pub participant_id: String,
    pub fs: f64,
    pub channel_names: Vec<String>,
    /// One sample vector per channel, equal lengths.
    pub samples: Vec<Vec<f64>>,
    /// Raw subjective labels, one per full 10-second segment.
    pub task_label_stream: Option<Vec<u8>>,
}

impl Recording {
    pub fn new(
        recording_id: String,
        participant_id: String,
        fs: f64,
        channel_names: Vec<String>,
        samples: Vec<Vec<f64>>,
        task_label_stream: Option<Vec<u8>>,
    ) -> Result<Self> {
        if channel_names.len() != samples.len() {
            return Err(CoreError::ChannelCountMismatch {
                expected: channel_names.len(),
                found: samples.len(),
            });
        }
        let t = samples.first().map(Vec::len).unwrap_or(0);
        if samples.iter().any(|ch| ch.len() != t) {
            return Err(CoreError::ShapeMismatch(String::from(
                "channels differ in sample count",
            )));
        }
        if let Some(labels) = &task_label_stream {
            let segments = (t as f64 / (SEGMENT_SECONDS * fs)).floor() as usize;
            if labels.len() != segments {
                return Err(CoreError::LabelCountMismatch {
                    labels: labels.len(),
                    segments,
                });
            }
            if let Some(&bad) = labels.iter().find(|&&v| !(1..=9).contains(&v)) {
                return Err(CoreError::LabelOutOfRange { value: bad as i64 });
            }
        }
        Ok(Self { recording_id, participant_id, fs, channel_names, samples, task_label_stream })
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.samples.first().map(Vec::len).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Complete 10-second segments available.
    pub fn n_segments(&self) -> usize {
        (self.len() as f64 / (SEGMENT_SECONDS * self.fs)).floor() as usize
    }
}

/// Ordered source-channel names mapped onto the four canonical slots
/// (temporo-parietal left, frontal left, frontal right,
/// temporo-parietal right).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMap {
    sources: Vec<String>,
}

impl ChannelMap {
    pub fn new(sources: Vec<String>) -> Result<Self> {
        if sources.len() != TOKEN_CHANNELS {
            return Err(CoreError::ChannelCountMismatch {
                expected: TOKEN_CHANNELS,
                found: sources.len(),
            });
        }
        Ok(Self { sources })
    }

    /// The four 62-channel-montage electrodes closest to the headband
    /// positions: TP7, F7, F8, TP8.
    pub fn dense_montage() -> Self {
        Self {
            sources: ["TP7", "F7", "F8", "TP8"].iter().map(|s| String::from(*s)).collect(),
        }
    }

    /// The 4-channel headband montage: TP9, AF7, AF8, TP10.
    pub fn headband() -> Self {
        Self {
            sources: ["TP9", "AF7", "AF8", "TP10"].iter().map(|s| String::from(*s)).collect(),
        }
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }
}

/// Reduce a recording to the four canonical channels in map order.
/// Sample values are copied unchanged.
pub fn select_channels(rec: &Recording, map: &ChannelMap) -> Result<Recording> {
    let mut samples = Vec::with_capacity(TOKEN_CHANNELS);
    let mut names = Vec::with_capacity(TOKEN_CHANNELS);
    for src in &map.sources {
        let idx = rec
            .channel_names
            .iter()
            .position(|n| n == src)
            .ok_or_else(|| CoreError::UnknownChannel(src.clone()))?;
        samples.push(rec.samples[idx].clone());
        names.push(src.clone());
    }
    Recording::new(
        rec.recording_id.clone(),
        rec.participant_id.clone(),
        rec.fs,
        names,
        samples,
        rec.task_label_stream.clone(),
    )
}

/// Map raw 1..9 labels onto binary cognitive load: 1..5 -> 0, 6..9 -> 1.
pub fn binarize_labels(raw: &[u8]) -> Result<Vec<u8>> {
    raw.iter()
        .map(|&v| match v {
            1..=5 => Ok(0),
            6..=9 => Ok(1),
            _ => Err(CoreError::LabelOutOfRange { value: v as i64 }),
        })
        .collect()
}

/// Standard normal draw via Box-Muller.
pub fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let mut u1: f64 = rng.gen();
    while u1 <= f64::MIN_POSITIVE {
        u1 = rng.gen();
    }
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * core::f64::consts::PI * u2).cos()
}

/// Per-class per-band power gains for the synthetic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfiles {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl ClassProfiles {
    /// High-load profile boosts the two fastest bands by `factor`
    /// (in power); the low-load profile is flat.
    pub fn beta_gamma_boost(n_bands: usize, factor: f64) -> Self {
        let low = vec![1.0; n_bands];
        let mut high = vec![1.0; n_bands];
        for g in high.iter_mut().skip(n_bands.saturating_sub(2)) {
            *g = factor;
        }
        Self { low, high }
    }
}

/// Settings for [`synth_generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_participants: usize,
    pub recordings_per_participant: usize,
    pub fs: f64,
    pub duration_s: f64,
    pub bands: BandSet,
    pub profiles: ClassProfiles,
    /// Target fraction of high-load segments; per-recording counts are
    /// rounded, so the realized fraction is within one segment of target.
    pub high_fraction: f64,
    /// Per-recording amplitude jitter: gain = exp(U(-j, j)).
    pub recording_gain_jitter: f64,
    /// Per-recording, per-band baseline jitter: each band's power is
    /// scaled by exp(U(-j, j)), independently per recording. Confounds
    /// absolute band power across participants.
    pub band_gain_jitter: f64,
    /// Broadband white-noise amplitude added on top of band components.
    pub noise_floor: f64,
    /// Probability that a segment's emitted label contradicts the class
    /// its signal was generated from (subjective-rating noise).
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_participants: 4,
            recordings_per_participant: 1,
            fs: 256.0,
            duration_s: 180.0,
            bands: BandSet::default_eeg(),
            profiles: ClassProfiles::beta_gamma_boost(5, 2.0),
            high_fraction: 0.38,
            recording_gain_jitter: 0.5,
            band_gain_jitter: 0.0,
            noise_floor: 0.3,
            label_noise: 0.0,
            seed: 0,
        }
    }
}

/// Generate synthetic recordings.
///
/// Each channel is a sum of band-limited Gaussian noise components (white
/// noise filtered to each band), with per-band amplitude following the
/// segment's class profile, plus a white-noise floor, all scaled by a
/// per-recording gain. Raw labels are emitted per 10-second segment: low
/// segments draw 1..5, high segments draw 6..9. Deterministic per seed and
/// independent of generation order.
pub fn synth_generate(spec: &SynthSpec) -> Result<Vec<Recording>> {
    if spec.n_participants == 0 || spec.recordings_per_participant == 0 {
        return Err(CoreError::Config(String::from("empty synthetic spec")));
    }
    if !(0.0..=1.0).contains(&spec.high_fraction) {
        return Err(CoreError::Config(format!(
            "high_fraction {} outside [0,1]",
            spec.high_fraction
        )));
    }
    let n_bands = spec.bands.len();
    if spec.profiles.low.len() != n_bands || spec.profiles.high.len() != n_bands {
        return Err(CoreError::Config(String::from("profile length != band count")));
    }
    let seg_len = (SEGMENT_SECONDS * spec.fs).round() as usize;
    let n_segments = (spec.duration_s / SEGMENT_SECONDS).floor() as usize;
    if n_segments == 0 {
        return Err(CoreError::Config(String::from("duration shorter than one segment")));
    }
    let t_total = n_segments * seg_len;

    let filters = spec
        .bands
        .bands()
        .iter()
        .map(|b| sigproc::design_butterworth_bandpass(b.low_hz, b.high_hz, 2, spec.fs))
        .collect::<Result<Vec<_>>>()?;

    let mut recordings = Vec::new();
    for pi in 0..spec.n_participants {
        for ri in 0..spec.recordings_per_participant {
            let rec_index = (pi * spec.recordings_per_participant + ri) as u64;
            let mut rng = seeding::stream_rng(spec.seed, rec_index);

            let n_high = (n_segments as f64 * spec.high_fraction).round() as usize;
            let mut classes = vec![1u8; n_high.min(n_segments)];
            classes.resize(n_segments, 0);
            classes.shuffle(&mut rng);
            let raw_labels: Vec<u8> = classes
                .iter()
                .map(|&c| {
                    let observed = if spec.label_noise > 0.0 && rng.gen::<f64>() < spec.label_noise
                    {
                        1 - c
                    } else {
                        c
                    };
                    if observed == 1 { rng.gen_range(6..=9u8) } else { rng.gen_range(1..=5u8) }
                })
                .collect();

            let gain = if spec.recording_gain_jitter > 0.0 {
                rng.gen_range(-spec.recording_gain_jitter..=spec.recording_gain_jitter).exp()
            } else {
                1.0
            };
            let band_gains: Vec<f64> = (0..n_bands)
                .map(|_| {
                    if spec.band_gain_jitter > 0.0 {
                        rng.gen_range(-spec.band_gain_jitter..=spec.band_gain_jitter).exp()
                    } else {
                        1.0
                    }
                })
                .collect();

            let mut samples = Vec::with_capacity(TOKEN_CHANNELS);
            for _ch in 0..TOKEN_CHANNELS {
                let mut total = vec![0.0f64; t_total];
                for (bi, filter) in filters.iter().enumerate() {
                    let white: Vec<f64> =
                        (0..t_total).map(|_| sample_standard_normal(&mut rng)).collect();
                    let band_limited = sigproc::apply_iir(filter, &white)?;
                    for (si, &class) in classes.iter().enumerate() {
                        let profile =
                            if class == 1 { &spec.profiles.high } else { &spec.profiles.low };
                        let amp = (profile[bi] * band_gains[bi]).sqrt();
                        for i in si * seg_len..(si + 1) * seg_len {
                            total[i] += band_limited[i] * amp;
                        }
                    }
                }
                for v in total.iter_mut() {
                    *v = (*v + spec.noise_floor * sample_standard_normal(&mut rng)) * gain;
                }
                samples.push(total);
            }

            recordings.push(Recording::new(
                format!("p{pi:02}_r{ri:02}"),
                format!("p{pi:02}"),
                spec.fs,
                ["TP9", "AF7", "AF8", "TP10"].iter().map(|s| String::from(*s)).collect(),
                samples,
                Some(raw_labels),
            )?);
        }
    }
    Ok(recordings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{welch_psd, band_power};

    #[test]
    fn binarize_boundaries() {
        assert_eq!(binarize_labels(&[5]).unwrap(), vec![0]);
        assert_eq!(binarize_labels(&[6]).unwrap(), vec![1]);
        assert_eq!(binarize_labels(&[1, 9, 5, 6]).unwrap(), vec![0, 1, 0, 1]);
        assert!(matches!(binarize_labels(&[0]), Err(CoreError::LabelOutOfRange { value: 0 })));
    }

    #[test]
    fn select_channels_reorders_exactly() {
        let rec = Recording::new(
            String::from("r"),
            String::from("p"),
            256.0,
            ["A", "TP7", "F8", "F7", "TP8"].iter().map(|s| String::from(*s)).collect(),
            (0..5).map(|c| vec![c as f64; 16]).collect(),
            None,
        )
        .unwrap();
        let out = select_channels(&rec, &ChannelMap::dense_montage()).unwrap();
        assert_eq!(out.channel_names, vec!["TP7", "F7", "F8", "TP8"]);
        assert_eq!(out.samples[0][0], 1.0);
        assert_eq!(out.samples[1][0], 3.0);
        assert_eq!(out.samples[2][0], 2.0);
        assert_eq!(out.samples[3][0], 4.0);
    }

    #[test]
    fn select_channels_unknown_name_errors() {
        let rec = Recording::new(
            String::from("r"),
            String::from("p"),
            256.0,
            vec![String::from("XX")],
            vec![vec![0.0; 8]],
            None,
        )
        .unwrap();
        let map = ChannelMap::new(
            ["XX", "YY", "XX", "XX"].iter().map(|s| String::from(*s)).collect(),
        )
        .unwrap();
        assert!(matches!(select_channels(&rec, &map), Err(CoreError::UnknownChannel(_))));
    }

    #[test]
    fn labels_must_match_segment_count() {
        let r = Recording::new(
            String::from("r"),
            String::from("p"),
            256.0,
            vec![String::from("c1")],
            vec![vec![0.0; 2560]],
            Some(vec![4, 7, 2]),
        );
        assert!(matches!(r, Err(CoreError::LabelCountMismatch { labels: 3, segments: 1 })));
    }

    #[test]
    fn synth_is_deterministic() {
        let spec = SynthSpec { n_participants: 1, duration_s: 30.0, ..SynthSpec::default() };
        let a = synth_generate(&spec).unwrap();
        let b = synth_generate(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn synth_label_fraction_within_one_segment() {
        let spec = SynthSpec { n_participants: 3, duration_s: 180.0, ..SynthSpec::default() };
        for rec in synth_generate(&spec).unwrap() {
            let bins = binarize_labels(rec.task_label_stream.as_ref().unwrap()).unwrap();
            let high = bins.iter().filter(|&&b| b == 1).count() as f64;
            let target = 18.0 * spec.high_fraction;
            assert!((high - target).abs() <= 1.0);
        }
    }

    #[test]
    fn boost_factor_shows_up_in_beta_power() {
        let factor = 3.0;
        let spec = SynthSpec {
            n_participants: 2,
            duration_s: 180.0,
            profiles: ClassProfiles::beta_gamma_boost(5, factor),
            recording_gain_jitter: 0.0,
            noise_floor: 0.1,
            seed: 5,
            ..SynthSpec::default()
        };
        let recs = synth_generate(&spec).unwrap();
        let seg_len = 2560usize;
        let mut high_beta = Vec::new();
        let mut low_beta = Vec::new();
        for rec in &recs {
            let bins = binarize_labels(rec.task_label_stream.as_ref().unwrap()).unwrap();
            for (si, &b) in bins.iter().enumerate() {
                let x = &rec.samples[0][si * seg_len..(si + 1) * seg_len];
                let (freqs, psd) = welch_psd(x, 256.0, 512, 0.5).unwrap();
                let p = band_power(&freqs, &psd, (12.0, 31.0)).unwrap();
                if b == 1 {
                    high_beta.push(p);
                } else {
                    low_beta.push(p);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let ratio = mean(&high_beta) / mean(&low_beta);
        assert!((ratio - factor).abs() / factor < 0.15, "beta ratio {ratio}");
    }
}
