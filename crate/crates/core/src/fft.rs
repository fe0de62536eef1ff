//! Small DFT backend for Welch estimation.
//!
//! Power-of-two lengths take the iterative radix-2 path; anything else
//! falls back to a direct DFT. Welch segments are short (a few hundred
//! samples), so the fallback stays cheap.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

/// Forward DFT of a real input.
pub(crate) fn dft_real(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    if n.is_power_of_two() {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_radix2(&mut buf);
        buf
    } else {
        dft_direct(x)
    }
}

fn fft_radix2(buf: &mut [Complex64]) {
    let n = buf.len();
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * PI / len as f64;
        let wlen = Complex64::from_polar(1.0, ang);
        let mut i = 0;
        while i < n {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = buf[i + k];
                let v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wlen;
            }
            i += len;
        }
        len <<= 1;
    }
}

fn dft_direct(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    // Precomputed twiddle table indexed by (i*k) mod n keeps this O(n^2)
    // without repeated trig calls.
    let table: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 / n as f64))
        .collect();
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &v) in x.iter().enumerate() {
            acc += table[(i * k) % n] * v;
        }
        *o = acc;
    }
    out
}
