use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::signal::BasebandSignal;
use crate::error::{PimError, Result};
use crate::fft;

/// Welch estimate. `power[i]` is the power in the bin at `freqs_hz[i]`
/// (frequency offsets from the TX centre, ascending); the bins sum to the
/// mean signal power.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Psd {
    pub freqs_hz: Vec<f64>,
    pub power: Vec<f64>,
    pub bin_width_hz: f64,
}

impl Psd {
    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }

    /// Power in `|f − center| ≤ half_bw`.
    pub fn band_power(&self, center: f64, half_bw: f64) -> f64 {
        self.freqs_hz
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| (**f - center).abs() <= half_bw)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.power.iter().enumerate() {
            if p > self.power[best] {
                best = i;
            }
        }
        best
    }
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Hann-windowed Welch periodogram with 50% overlap.
pub fn psd(sig: &BasebandSignal, nfft: usize) -> Result<Psd> {
    if nfft == 0 || nfft > sig.len() {
        return Err(PimError::dim(format!("nfft {nfft} exceeds signal length {}", sig.len())));
    }
    let w = hann(nfft);
    let wss: f64 = w.iter().map(|v| v * v).sum();
    let step = (nfft / 2).max(1);
    let n_seg = (sig.len() - nfft) / step + 1;
    let plan = fft::forward_plan(nfft);
    let mut acc = vec![0.0; nfft];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for s in 0..n_seg {
        let seg = &sig.samples[s * step..s * step + nfft];
        for (b, (x, wi)) in buf.iter_mut().zip(seg.iter().zip(&w)) {
            *b = x * wi;
        }
        plan.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let norm = 1.0 / (n_seg as f64 * nfft as f64 * wss);
    let rate = sig.sample_rate;
    let mut freqs = Vec::with_capacity(nfft);
    let mut power = Vec::with_capacity(nfft);
    for i in 0..nfft {
        let k = (i + nfft / 2 + nfft % 2) % nfft;
        freqs.push(sig.center_offset + fft::bin_freq(k, nfft, rate));
        power.push(acc[k] * norm);
    }
    Ok(Psd {
        freqs_hz: freqs,
        power,
        bin_width_hz: rate / nfft as f64,
    })
}
