//! IIR filter design and application for EEG preprocessing.
//!
//! Filters are realized as cascades of normalized biquad sections
//! (`a0 = 1`). The bandpass design follows the classic recipe: analog
//! Butterworth lowpass prototype, lowpass-to-bandpass transform with
//! frequency pre-warping, then the bilinear transform into the z-plane.
//! An analog prototype of order 2 therefore yields a 4th-order digital
//! bandpass (two biquad sections), which is the convention this crate
//! uses for a "2nd order" bandpass. The notch is the standard
//! constant-Q second-order design with an exact null at the center
//! frequency.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{CoreError, Result};

/// One normalized biquad section:
/// `y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadSection {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadSection {
    /// Poles strictly inside the unit circle (Schur triangle test).
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    fn is_finite(&self) -> bool {
        [self.b0, self.b1, self.b2, self.a1, self.a2]
            .iter()
            .all(|c| c.is_finite())
    }

    /// Complex frequency response at normalized angular frequency `w`.
    fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = Complex64::from_polar(1.0, -2.0 * w);
        let num = Complex64::new(self.b0, 0.0) + z1 * self.b1 + z2 * self.b2;
        let den = Complex64::new(1.0, 0.0) + z1 * self.a1 + z2 * self.a2;
        num / den
    }
}

/// A cascade of biquad sections sharing one sample rate.
///
/// Construction verifies stability and finiteness of every section, so a
/// `BiquadCascade` value is always safe to run.
#[derive(Debug, Clone, PartialEq)]
pub struct BiquadCascade {
    sections: Vec<BiquadSection>,
    sample_rate_hz: f64,
}

impl BiquadCascade {
    /// Build a cascade from sections, rejecting unstable or non-finite ones.
    pub fn new(sections: Vec<BiquadSection>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(CoreError::Config(alloc::format!(
                "sample rate {sample_rate_hz} must be positive"
            )));
        }
        for s in &sections {
            if !s.is_finite() {
                return Err(CoreError::Config(alloc::string::String::from(
                    "non-finite filter coefficients",
                )));
            }
            if !s.is_stable() {
                return Err(CoreError::Config(alloc::format!(
                    "unstable section a1={} a2={}",
                    s.a1,
                    s.a2
                )));
            }
        }
        Ok(Self { sections, sample_rate_hz })
    }

    /// Pass-through filter at the given sample rate.
    pub fn identity(sample_rate_hz: f64) -> Self {
        Self {
            sections: vec![BiquadSection { b0: 1.0, b1: 0.0, b2: 0.0, a1: 0.0, a2: 0.0 }],
            sample_rate_hz,
        }
    }

    pub fn sections(&self) -> &[BiquadSection] {
        &self.sections
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Concatenate two cascades (same sample rate) into one.
    pub fn then(&self, other: &BiquadCascade) -> Result<BiquadCascade> {
        if self.sample_rate_hz != other.sample_rate_hz {
            return Err(CoreError::Config(alloc::format!(
                "cascade sample rates differ: {} vs {}",
                self.sample_rate_hz,
                other.sample_rate_hz
            )));
        }
        let mut sections = self.sections.clone();
        sections.extend_from_slice(&other.sections);
        BiquadCascade::new(sections, self.sample_rate_hz)
    }
}

fn check_band(low_hz: f64, high_hz: f64, fs: f64) -> Result<()> {
    let nyquist = fs / 2.0;
    if !(low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist) {
        return Err(CoreError::InvalidBand { low_hz, high_hz, nyquist_hz: nyquist });
    }
    Ok(())
}

/// Design a Butterworth bandpass filter.
///
/// `order` is the analog prototype order; only order 2 is supported, which
/// produces a 4th-order digital filter realized as two biquad sections.
/// Band edges are pre-warped so the digital filter hits the analog design
/// frequencies exactly.
pub fn design_butterworth_bandpass(
    low_hz: f64,
    high_hz: f64,
    order: usize,
    fs: f64,
) -> Result<BiquadCascade> {
    check_band(low_hz, high_hz, fs)?;
    if order != 2 {
        return Err(CoreError::Config(alloc::format!(
            "unsupported bandpass prototype order {order} (only 2)"
        )));
    }

    let k = 2.0 * fs; // bilinear constant
    let w1 = k * (PI * low_hz / fs).tan();
    let w2 = k * (PI * high_hz / fs).tan();
    let bw = w2 - w1;
    let w0 = (w1 * w2).sqrt();

    // Analog lowpass prototype poles for N = 2 (one conjugate pair).
    let proto = Complex64::from_polar(1.0, 3.0 * PI / 4.0);

    // Lowpass-to-bandpass: each prototype pole p yields the two roots of
    // s^2 - (bw p) s + w0^2 = 0.
    let half = proto * (bw / 2.0);
    let disc = (half * half - Complex64::new(w0 * w0, 0.0)).sqrt();
    let analog_poles = [half + disc, half - disc];

    // Bilinear transform; each analog pole and its conjugate form one
    // section with zeros at z = +1 and z = -1 (from s = 0 and s = inf).
    let mut sections = Vec::with_capacity(2);
    for s in analog_poles {
        let zp = (Complex64::new(k, 0.0) + s) / (Complex64::new(k, 0.0) - s);
        sections.push(BiquadSection {
            b0: 1.0,
            b1: 0.0,
            b2: -1.0,
            a1: -2.0 * zp.re,
            a2: zp.norm_sqr(),
        });
    }

    // Normalize unity gain at the digital image of the analog center.
    let fc_digital = fs / PI * (w0 / k).atan();
    let cascade = BiquadCascade::new(sections, fs)?;
    let gain = magnitude_response(&cascade, fc_digital);
    if !(gain.is_finite() && gain > 0.0) {
        return Err(CoreError::Config(alloc::string::String::from(
            "degenerate bandpass gain",
        )));
    }
    let mut sections = cascade.sections;
    let scale = 1.0 / gain;
    sections[0].b0 *= scale;
    sections[0].b1 *= scale;
    sections[0].b2 *= scale;
    BiquadCascade::new(sections, fs)
}

/// Design a second-order notch with an exact null at `f0_hz`.
///
/// The -3 dB bandwidth is `f0_hz / q`; the default powerline setting used
/// by the pipeline is 60 Hz with Q = 30.
pub fn design_notch(f0_hz: f64, q: f64, fs: f64) -> Result<BiquadCascade> {
    let nyquist = fs / 2.0;
    if !(f0_hz > 0.0 && f0_hz < nyquist) {
        return Err(CoreError::InvalidBand { low_hz: f0_hz, high_hz: f0_hz, nyquist_hz: nyquist });
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(CoreError::Config(alloc::format!("notch Q {q} must be positive")));
    }
    let w0 = 2.0 * PI * f0_hz / fs;
    let alpha = w0.sin() / (2.0 * q);
    let cosw = w0.cos();
    let a0 = 1.0 + alpha;
    BiquadCascade::new(
        vec![BiquadSection {
            b0: 1.0 / a0,
            b1: -2.0 * cosw / a0,
            b2: 1.0 / a0,
            a1: -2.0 * cosw / a0,
            a2: (1.0 - alpha) / a0,
        }],
        fs,
    )
}

/// Run the cascade forward over `x` (direct form II transposed, zero
/// initial state). Output has the same length as the input.
pub fn apply_iir(filter: &BiquadCascade, x: &[f64]) -> Result<Vec<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFiniteInput);
    }
    let mut y = x.to_vec();
    for s in &filter.sections {
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for v in y.iter_mut() {
            let xin = *v;
            let out = s.b0 * xin + s1;
            s1 = s.b1 * xin - s.a1 * out + s2;
            s2 = s.b2 * xin - s.a2 * out;
            *v = out;
        }
    }
    Ok(y)
}

/// Forward-backward application for zero net phase; doubles the
/// effective attenuation. Off by default in the pipeline.
pub fn apply_zero_phase(filter: &BiquadCascade, x: &[f64]) -> Result<Vec<f64>> {
    let mut y = apply_iir(filter, x)?;
    y.reverse();
    let mut z = apply_iir(filter, &y)?;
    z.reverse();
    Ok(z)
}

/// Magnitude of the cascade's frequency response at `f_hz`.
pub fn magnitude_response(filter: &BiquadCascade, f_hz: f64) -> f64 {
    let w = 2.0 * PI * f_hz / filter.sample_rate_hz;
    filter
        .sections
        .iter()
        .map(|s| s.response(w).norm())
        .product()
}
