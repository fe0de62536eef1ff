//! Welch PSD and differential-entropy feature extraction.
//!
//! Each 10-second, 4-channel segment yields one feature token of shape
//! (2 features x 5 bands x 4 channels): band-integrated Welch power and
//! per-band differential entropy under a Gaussian signal assumption.
//! Tokens are z-score normalized per feature position over a token
//! population, with the statistics returned so held-out data can be
//! normalized without leakage.
//!
//! Welch defaults: 2-second Hann segments, 50% overlap, density scaling,
//! per-segment mean removal. The PSD feature integrates the density over
//! the band (a mean-density variant is available), and the DE variance is
//! estimated on the band-filtered time series (a Welch-power variant is
//! available).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::fft::dft_real;
use crate::sigproc::{self, BiquadCascade};

/// 2*pi*e, the Gaussian differential-entropy constant.
const TWO_PI_E: f64 = 2.0 * PI * core::f64::consts::E;

/// Variance floor below which DE is clamped and flagged.
pub const DE_VARIANCE_FLOOR: f64 = 1e-12;

/// One named frequency band.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub name: String,
    pub low_hz: f64,
    pub high_hz: f64,
}

/// Ordered, contiguous set of frequency bands.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    bands: Vec<Band>,
}

impl BandSet {
    /// Validates ascending order and contiguity (bands share endpoints).
    pub fn new(bands: Vec<Band>) -> Result<Self> {
        if bands.is_empty() {
            return Err(CoreError::Config(String::from("band set is empty")));
        }
        for (i, b) in bands.iter().enumerate() {
            if !(b.low_hz < b.high_hz) {
                return Err(CoreError::Config(format!(
                    "band {} has low {} >= high {}",
                    b.name, b.low_hz, b.high_hz
                )));
            }
            if i > 0 && bands[i - 1].high_hz != b.low_hz {
                return Err(CoreError::Config(format!(
                    "band {} does not start where {} ends",
                    b.name,
                    bands[i - 1].name
                )));
            }
        }
        Ok(Self { bands })
    }

    /// The five standard EEG bands: Delta 1-4, Theta 4-8, Alpha 8-12,
    /// Beta 12-31, Gamma 31-75 Hz.
    pub fn default_eeg() -> Self {
        let named = [
            ("delta", 1.0, 4.0),
            ("theta", 4.0, 8.0),
            ("alpha", 8.0, 12.0),
            ("beta", 12.0, 31.0),
            ("gamma", 31.0, 75.0),
        ];
        Self {
            bands: named
                .iter()
                .map(|(n, lo, hi)| Band { name: String::from(*n), low_hz: *lo, high_hz: *hi })
                .collect(),
        }
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }
}

/// Number of channels every token carries.
pub const TOKEN_CHANNELS: usize = 4;

/// Seconds of signal per segment/token.
pub const SEGMENT_SECONDS: f64 = 10.0;

/// Per-segment feature block of shape (2, bands, channels), stored
/// feature-major, then band-major, then channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureToken {
    values: Vec<f64>,
    n_bands: usize,
    n_channels: usize,
    pub segment_index: usize,
    pub recording_id: String,
}

/// Index of the PSD plane on the feature axis.
pub const FEAT_PSD: usize = 0;
/// Index of the DE plane on the feature axis.
pub const FEAT_DE: usize = 1;

impl FeatureToken {
    pub fn new(
        values: Vec<f64>,
        n_bands: usize,
        n_channels: usize,
        segment_index: usize,
        recording_id: String,
    ) -> Result<Self> {
        if values.len() != 2 * n_bands * n_channels {
            return Err(CoreError::ShapeMismatch(format!(
                "token needs {} values, got {}",
                2 * n_bands * n_channels,
                values.len()
            )));
        }
        Ok(Self { values, n_bands, n_channels, segment_index, recording_id })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (2, self.n_bands, self.n_channels)
    }

    /// Flat length 2 * bands * channels (40 for the default layout).
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, feature: usize, band: usize, channel: usize) -> f64 {
        self.values[self.index(feature, band, channel)]
    }

    fn index(&self, feature: usize, band: usize, channel: usize) -> usize {
        debug_assert!(feature < 2 && band < self.n_bands && channel < self.n_channels);
        feature * self.n_bands * self.n_channels + band * self.n_channels + channel
    }
}

/// Welch power spectral density estimate.
///
/// Hann-windowed overlapping segments, per-segment mean removal, averaged
/// squared rDFT magnitudes with density scaling (units: signal^2/Hz,
/// one-sided). Returns frequencies and density values.
pub fn welch_psd(
    x: &[f64],
    fs: f64,
    nperseg: usize,
    overlap_frac: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if nperseg < 2 {
        return Err(CoreError::Config(format!("nperseg {nperseg} too small")));
    }
    if !(0.0..1.0).contains(&overlap_frac) {
        return Err(CoreError::Config(format!("overlap {overlap_frac} outside [0,1)")));
    }
    if x.len() < nperseg {
        return Err(CoreError::SegmentTooShort { len: x.len(), nperseg });
    }

    // Periodic Hann window.
    let window: Vec<f64> = (0..nperseg)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / nperseg as f64).cos())
        .collect();
    let win_power: f64 = window.iter().map(|w| w * w).sum();

    let hop = (nperseg - (nperseg as f64 * overlap_frac) as usize).max(1);
    let n_bins = nperseg / 2 + 1;
    let mut acc = vec![0.0f64; n_bins];
    let mut n_segments = 0usize;
    let mut buf = vec![0.0f64; nperseg];

    let mut start = 0usize;
    while start + nperseg <= x.len() {
        let seg = &x[start..start + nperseg];
        let mean = seg.iter().sum::<f64>() / nperseg as f64;
        for (b, (&v, &w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = (v - mean) * w;
        }
        let spec = dft_real(&buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += spec[k].norm_sqr();
        }
        n_segments += 1;
        start += hop;
    }

    let scale = 1.0 / (fs * win_power * n_segments as f64);
    let nyquist_bin = if nperseg % 2 == 0 { Some(nperseg / 2) } else { None };
    let psd: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let one_sided = if k == 0 || Some(k) == nyquist_bin { 1.0 } else { 2.0 };
            a * scale * one_sided
        })
        .collect();
    let freqs: Vec<f64> = (0..n_bins).map(|k| k as f64 * fs / nperseg as f64).collect();
    Ok((freqs, psd))
}

/// Integrate a PSD over `[low, high]` with the trapezoidal rule on the
/// bins inside the band. A single in-band bin degenerates to a rectangle
/// of one bin width.
pub fn band_power(freqs: &[f64], psd: &[f64], band: (f64, f64)) -> Result<f64> {
    let (low, high) = band;
    if freqs.len() != psd.len() {
        return Err(CoreError::ShapeMismatch(format!(
            "freqs {} vs psd {}",
            freqs.len(),
            psd.len()
        )));
    }
    if !(low < high) {
        return Err(CoreError::EmptyBand { low_hz: low, high_hz: high });
    }
    let first = freqs.iter().position(|&f| f >= low);
    let last = freqs.iter().rposition(|&f| f <= high);
    let (first, last) = match (first, last) {
        (Some(a), Some(b)) if a <= b => (a, b),
        _ => return Err(CoreError::EmptyBand { low_hz: low, high_hz: high }),
    };
    if first == last {
        let df = if freqs.len() > 1 { freqs[1] - freqs[0] } else { high - low };
        return Ok(psd[first] * df.min(high - low));
    }
    let mut total = 0.0;
    for i in first..last {
        total += 0.5 * (psd[i] + psd[i + 1]) * (freqs[i + 1] - freqs[i]);
    }
    Ok(total.max(0.0))
}

/// Differential entropy of a band, with the degenerate-variance flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffEntropy {
    /// 0.5 * ln(2*pi*e*var), in nats.
    pub nats: f64,
    /// True when the variance hit [`DE_VARIANCE_FLOOR`].
    pub degenerate: bool,
}

fn de_from_variance(variance: f64) -> DiffEntropy {
    if variance <= DE_VARIANCE_FLOOR {
        DiffEntropy { nats: 0.5 * (TWO_PI_E * DE_VARIANCE_FLOOR).ln(), degenerate: true }
    } else {
        DiffEntropy { nats: 0.5 * (TWO_PI_E * variance).ln(), degenerate: false }
    }
}

fn population_variance(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64
}

/// Band-filter then measure variance, short-circuiting degenerate inputs
/// so a constant signal hits the floor without picking up filter
/// transients.
fn banded_variance(x: &[f64], filter: &BiquadCascade) -> Result<f64> {
    if population_variance(x) <= DE_VARIANCE_FLOOR {
        return Ok(0.0);
    }
    let y = sigproc::apply_iir(filter, x)?;
    Ok(population_variance(&y))
}

/// Differential entropy of `x` restricted to `band`, assuming a Gaussian
/// signal: the band-filtered sample variance plugged into
/// `0.5 ln(2 pi e sigma^2)`.
pub fn differential_entropy(x: &[f64], band: (f64, f64), fs: f64) -> Result<DiffEntropy> {
    if x.len() < 2 {
        return Err(CoreError::Config(format!("need >= 2 samples, got {}", x.len())));
    }
    let filter = sigproc::design_butterworth_bandpass(band.0, band.1, 2, fs)?;
    Ok(de_from_variance(banded_variance(x, &filter)?))
}

/// Differential entropy with the variance taken from integrated Welch
/// band power instead of time-domain filtering.
pub fn differential_entropy_from_power(power: f64) -> DiffEntropy {
    de_from_variance(power.max(0.0))
}

/// How the per-band PSD feature is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsdMode {
    /// Integral of the density over the band (default).
    #[default]
    Integrated,
    /// Integral divided by the band width.
    MeanDensity,
}

/// Where the DE variance estimate comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeSource {
    /// Variance of the band-filtered time series (default).
    #[default]
    FilteredVariance,
    /// Integrated Welch band power.
    WelchPower,
}

/// Extraction settings; defaults follow the pipeline conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub bands: BandSet,
    /// Welch segment length in seconds (default 2.0).
    pub welch_seconds: f64,
    /// Welch overlap fraction (default 0.5).
    pub welch_overlap: f64,
    pub psd_mode: PsdMode,
    pub de_source: DeSource,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            bands: BandSet::default_eeg(),
            welch_seconds: 2.0,
            welch_overlap: 0.5,
            psd_mode: PsdMode::Integrated,
            de_source: DeSource::FilteredVariance,
        }
    }
}

/// Reusable extractor; designs the per-band DE filters once per sample rate.
pub struct FeatureExtractor {
    cfg: FeatureConfig,
    fs: f64,
    nperseg: usize,
    band_filters: Vec<BiquadCascade>,
}

impl FeatureExtractor {
    pub fn new(fs: f64, cfg: FeatureConfig) -> Result<Self> {
        if !(fs > 0.0) {
            return Err(CoreError::Config(format!("sample rate {fs} must be positive")));
        }
        let nperseg = (cfg.welch_seconds * fs).round() as usize;
        let band_filters = match cfg.de_source {
            DeSource::FilteredVariance => cfg
                .bands
                .bands()
                .iter()
                .map(|b| sigproc::design_butterworth_bandpass(b.low_hz, b.high_hz, 2, fs))
                .collect::<Result<Vec<_>>>()?,
            DeSource::WelchPower => Vec::new(),
        };
        Ok(Self { cfg, fs, nperseg, band_filters })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    /// Expected samples per channel for one segment.
    pub fn segment_len(&self) -> usize {
        (SEGMENT_SECONDS * self.fs).round() as usize
    }

    /// Extract the (2, bands, 4) token for one segment.
    ///
    /// `segment` holds one sample vector per channel, all of length
    /// `segment_len()`. Values are un-normalized; see [`zscore_normalize`].
    pub fn extract(
        &self,
        segment: &[Vec<f64>],
        recording_id: &str,
        segment_index: usize,
    ) -> Result<FeatureToken> {
        if segment.len() != TOKEN_CHANNELS {
            return Err(CoreError::ChannelCountMismatch {
                expected: TOKEN_CHANNELS,
                found: segment.len(),
            });
        }
        let expect = self.segment_len();
        let b = self.cfg.bands.len();
        let mut values = vec![0.0f64; 2 * b * TOKEN_CHANNELS];
        for (ch, x) in segment.iter().enumerate() {
            if x.len() != expect {
                return Err(CoreError::ShapeMismatch(format!(
                    "channel {ch} has {} samples, segment needs {expect}",
                    x.len()
                )));
            }
            let (freqs, psd) = welch_psd(x, self.fs, self.nperseg, self.cfg.welch_overlap)?;
            for (bi, band) in self.cfg.bands.bands().iter().enumerate() {
                let power = band_power(&freqs, &psd, (band.low_hz, band.high_hz))?;
                let psd_feat = match self.cfg.psd_mode {
                    PsdMode::Integrated => power,
                    PsdMode::MeanDensity => power / (band.high_hz - band.low_hz),
                };
                values[FEAT_PSD * b * TOKEN_CHANNELS + bi * TOKEN_CHANNELS + ch] = psd_feat;
                let de = match self.cfg.de_source {
                    DeSource::FilteredVariance => {
                        de_from_variance(banded_variance(x, &self.band_filters[bi])?)
                    }
                    DeSource::WelchPower => differential_entropy_from_power(power),
                };
                values[FEAT_DE * b * TOKEN_CHANNELS + bi * TOKEN_CHANNELS + ch] = de.nats;
            }
        }
        FeatureToken::new(values, b, TOKEN_CHANNELS, segment_index, String::from(recording_id))
    }
}

/// One-shot extraction with default Welch settings; spec-shaped surface
/// over [`FeatureExtractor`].
pub fn extract_segment_features(
    segment: &[Vec<f64>],
    fs: f64,
    bands: &BandSet,
) -> Result<FeatureToken> {
    let cfg = FeatureConfig { bands: bands.clone(), ..FeatureConfig::default() };
    FeatureExtractor::new(fs, cfg)?.extract(segment, "", 0)
}

/// Per-position normalization statistics (population mean and std).
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Compute population statistics over a token set.
    pub fn from_tokens(tokens: &[FeatureToken]) -> Result<Self> {
        let first = tokens.first().ok_or(CoreError::EmptyCorpus)?;
        let dim = first.dim();
        let n = tokens.len() as f64;
        let mut mean = vec![0.0f64; dim];
        for t in tokens {
            if t.dim() != dim {
                return Err(CoreError::ShapeMismatch(format!(
                    "token dim {} vs {}",
                    t.dim(),
                    dim
                )));
            }
            for (m, v) in mean.iter_mut().zip(t.values()) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut var = vec![0.0f64; dim];
        for t in tokens {
            for ((s, v), m) in var.iter_mut().zip(t.values()).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std = var.iter().map(|s| (s / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    /// Standardize one value at feature position `i`. Positions with zero
    /// spread map to 0.
    pub fn apply_at(&self, i: usize, v: f64) -> f64 {
        if self.std[i] > 0.0 {
            (v - self.mean[i]) / self.std[i]
        } else {
            0.0
        }
    }
}

/// Z-score a token population.
///
/// With `stats` absent the statistics are computed over `tokens` and
/// returned; with `stats` supplied (held-out data) they are applied
/// unchanged. Zero-spread positions normalize to 0.
pub fn zscore_normalize(
    tokens: &[FeatureToken],
    stats: Option<&NormStats>,
) -> Result<(Vec<FeatureToken>, NormStats)> {
    let computed;
    let stats = match stats {
        Some(s) => s,
        None => {
            computed = NormStats::from_tokens(tokens)?;
            &computed
        }
    };
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        if t.dim() != stats.mean.len() {
            return Err(CoreError::ShapeMismatch(format!(
                "token dim {} vs stats dim {}",
                t.dim(),
                stats.mean.len()
            )));
        }
        let values: Vec<f64> = t
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| stats.apply_at(i, v))
            .collect();
        let (_, b, c) = t.shape();
        out.push(FeatureToken::new(values, b, c, t.segment_index, t.recording_id.clone())?);
    }
    Ok((out, stats.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::sample_standard_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| sample_standard_normal(&mut rng)).collect()
    }

    #[test]
    fn welch_of_zeros_is_zero() {
        let x = vec![0.0; 2560];
        let (_, psd) = welch_psd(&x, 256.0, 512, 0.5).unwrap();
        assert!(psd.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn welch_rejects_short_input() {
        assert!(matches!(
            welch_psd(&[1.0; 100], 256.0, 512, 0.5),
            Err(CoreError::SegmentTooShort { .. })
        ));
    }

    #[test]
    fn welch_psd_is_non_negative() {
        let x = noise(2560, 3);
        let (_, psd) = welch_psd(&x, 256.0, 512, 0.5).unwrap();
        assert!(psd.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn welch_parseval_on_white_noise() {
        let x = noise(2560, 11);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64;
        let (freqs, psd) = welch_psd(&x, 256.0, 512, 0.5).unwrap();
        let df = freqs[1] - freqs[0];
        let total: f64 = psd.iter().map(|p| p * df).sum();
        assert!((total - var).abs() / var < 0.05, "total {total} vs var {var}");
    }

    #[test]
    fn sine_power_lands_in_alpha() {
        let fs = 256.0;
        let amp = 2.0;
        let x: Vec<f64> =
            (0..2560).map(|i| amp * (2.0 * PI * 10.0 * i as f64 / fs).sin()).collect();
        let (freqs, psd) = welch_psd(&x, fs, 512, 0.5).unwrap();
        let alpha = band_power(&freqs, &psd, (8.0, 12.0)).unwrap();
        let delta = band_power(&freqs, &psd, (1.0, 4.0)).unwrap();
        let expected = amp * amp / 2.0;
        assert!((alpha - expected).abs() / expected < 0.05, "alpha {alpha}");
        assert!(alpha / delta.max(1e-300) > 100.0);
    }

    #[test]
    fn band_power_of_uniform_density() {
        let freqs: Vec<f64> = (0..257).map(|k| k as f64 * 0.5).collect();
        let psd = vec![1.0; 257];
        let p = band_power(&freqs, &psd, (8.0, 12.0)).unwrap();
        assert!((p - 4.0).abs() < 1e-12);
    }

    #[test]
    fn band_power_beyond_grid_is_empty() {
        let freqs: Vec<f64> = (0..129).map(|k| k as f64).collect();
        let psd = vec![1.0; 129];
        assert!(matches!(
            band_power(&freqs, &psd, (200.0, 300.0)),
            Err(CoreError::EmptyBand { .. })
        ));
    }

    #[test]
    fn de_scale_law() {
        let fs = 256.0;
        let x = noise(2560, 21);
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = differential_entropy(&x, (1.0, 75.0), fs).unwrap();
        let b = differential_entropy(&x2, (1.0, 75.0), fs).unwrap();
        assert!((b.nats - a.nats - core::f64::consts::LN_2).abs() < 0.02);
    }

    #[test]
    fn de_constant_vector_hits_floor() {
        let de = differential_entropy(&vec![3.25; 512], (1.0, 75.0), 256.0).unwrap();
        assert!(de.degenerate);
        assert!((de.nats - 0.5 * (TWO_PI_E * DE_VARIANCE_FLOOR).ln()).abs() < 1e-12);
    }

    fn segment_of(ch: [Vec<f64>; 4]) -> Vec<Vec<f64>> {
        ch.into_iter().collect()
    }

    #[test]
    fn extraction_shape_and_alpha_peak() {
        let fs = 256.0;
        let n = 2560;
        let sine: Vec<f64> = (0..n).map(|i| (2.0 * PI * 10.0 * i as f64 / fs).sin()).collect();
        let seg = segment_of([noise(n, 1), sine, noise(n, 2), noise(n, 3)]);
        let tok = extract_segment_features(&seg, fs, &BandSet::default_eeg()).unwrap();
        assert_eq!(tok.shape(), (2, 5, 4));
        assert_eq!(tok.dim(), 40);
        // channel 1 carries the 10 Hz sine: alpha must dominate its PSD row
        let alpha_idx = 2;
        let best = (0..5)
            .max_by(|&a, &b| {
                tok.get(FEAT_PSD, a, 1).partial_cmp(&tok.get(FEAT_PSD, b, 1)).unwrap()
            })
            .unwrap();
        assert_eq!(best, alpha_idx);
    }

    #[test]
    fn identical_channels_get_identical_columns() {
        let x = noise(2560, 9);
        let seg = segment_of([x.clone(), x.clone(), noise(2560, 10), noise(2560, 12)]);
        let tok = extract_segment_features(&seg, 256.0, &BandSet::default_eeg()).unwrap();
        for f in 0..2 {
            for b in 0..5 {
                assert_eq!(tok.get(f, b, 0), tok.get(f, b, 1));
            }
        }
    }

    #[test]
    fn channel_permutation_permutes_columns() {
        let (a, b, c, d) = (noise(2560, 1), noise(2560, 2), noise(2560, 3), noise(2560, 4));
        let bands = BandSet::default_eeg();
        let t1 = extract_segment_features(
            &segment_of([a.clone(), b.clone(), c.clone(), d.clone()]),
            256.0,
            &bands,
        )
        .unwrap();
        let t2 = extract_segment_features(&segment_of([d, c, b, a]), 256.0, &bands).unwrap();
        for f in 0..2 {
            for bi in 0..5 {
                for ch in 0..4 {
                    assert_eq!(t1.get(f, bi, ch), t2.get(f, bi, 3 - ch));
                }
            }
        }
    }

    fn token_with(values: Vec<f64>) -> FeatureToken {
        FeatureToken::new(values, 5, 4, 0, String::from("r")).unwrap()
    }

    #[test]
    fn zscore_of_repeated_token_is_zero() {
        let t = token_with((0..40).map(|i| i as f64).collect());
        let (out, _) = zscore_normalize(&[t.clone(), t.clone(), t], None).unwrap();
        assert!(out.iter().all(|t| t.values().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn zscore_of_plus_minus_one_is_fixed_point() {
        let mut a = vec![0.0; 40];
        let mut b = vec![0.0; 40];
        a[7] = -1.0;
        b[7] = 1.0;
        let (out, stats) = zscore_normalize(&[token_with(a), token_with(b)], None).unwrap();
        assert!((out[0].values()[7] + 1.0).abs() < 1e-12);
        assert!((out[1].values()[7] - 1.0).abs() < 1e-12);
        assert!((stats.std[7] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zscore_applies_saved_stats() {
        let stats = NormStats { mean: vec![5.0; 40], std: vec![2.0; 40] };
        let t = token_with(vec![9.0; 40]);
        let (out, _) = zscore_normalize(&[t], Some(&stats)).unwrap();
        assert!(out[0].values().iter().all(|&v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn zscore_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let tokens: Vec<FeatureToken> = (0..20)
            .map(|_| token_with((0..40).map(|_| sample_standard_normal(&mut rng) * 3.0).collect()))
            .collect();
        let (once, _) = zscore_normalize(&tokens, None).unwrap();
        let (twice, _) = zscore_normalize(&once, None).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
