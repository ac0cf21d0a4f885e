use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::signal::BasebandSignal;
use crate::consts::{
    BASE_RATE_HZ, CC_BANDWIDTH_HZ, HIGH_CC_HZ, IMD3_HZ, LOW_CC_HZ, OVERSAMPLE, TX_CENTER_HZ,
};
use crate::error::{PimError, Result};
use crate::fft;

/// Frequency layout of the TX carriers and the RX band, relative to the TX centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierPlan {
    pub cc_offsets_hz: Vec<f64>,
    pub cc_bandwidths_hz: Vec<f64>,
    pub base_rate_hz: f64,
    pub oversample_factor: usize,
    pub rx_offset_hz: f64,
    pub rx_bandwidth_hz: f64,
}

impl CarrierPlan {
    /// Two 5 MHz carriers at 1819 and 1866.5 MHz, RX on their low IMD-3 product.
    pub fn paper() -> Self {
        let plan = Self {
            cc_offsets_hz: vec![LOW_CC_HZ - TX_CENTER_HZ, HIGH_CC_HZ - TX_CENTER_HZ],
            cc_bandwidths_hz: vec![CC_BANDWIDTH_HZ; 2],
            base_rate_hz: BASE_RATE_HZ,
            oversample_factor: OVERSAMPLE,
            rx_offset_hz: IMD3_HZ - TX_CENTER_HZ,
            rx_bandwidth_hz: CC_BANDWIDTH_HZ,
        };
        debug_assert!((2.0 * LOW_CC_HZ - HIGH_CC_HZ - IMD3_HZ).abs() < 1e-3);
        debug_assert!((plan.rx_offset_hz + 71.25e6).abs() < 1e-3);
        plan
    }

    pub fn rf_rate(&self) -> f64 {
        self.base_rate_hz * self.oversample_factor as f64
    }

    pub fn n_ccs(&self) -> usize {
        self.cc_offsets_hz.len()
    }

    /// Absolute RX centre frequency, Hz.
    pub fn rx_center_hz(&self) -> f64 {
        TX_CENTER_HZ + self.rx_offset_hz
    }

    /// Offset of the `2·f_low − f_high` product for a two-carrier plan.
    pub fn imd3_low_offset(&self) -> Option<f64> {
        match self.cc_offsets_hz.as_slice() {
            [lo, hi] => Some(2.0 * lo - hi),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cc_offsets_hz.is_empty() || self.cc_offsets_hz.len() != self.cc_bandwidths_hz.len() {
            return Err(PimError::config("plan.cc_offsets_hz", "need one bandwidth per carrier"));
        }
        if !(self.base_rate_hz > 0.0) || self.oversample_factor == 0 {
            return Err(PimError::config("plan.base_rate_hz", "rate and oversampling must be positive"));
        }
        let nyq = self.rf_rate() / 2.0;
        for (i, (&off, &bw)) in self.cc_offsets_hz.iter().zip(&self.cc_bandwidths_hz).enumerate() {
            if !(bw > 0.0) || bw > self.base_rate_hz {
                return Err(PimError::config(
                    format!("plan.cc_bandwidths_hz[{i}]"),
                    "bandwidth must be positive and within the base rate",
                ));
            }
            if off.abs() + bw / 2.0 > nyq {
                return Err(PimError::Nyquist(format!(
                    "carrier {i} at {off} Hz with {bw} Hz bandwidth exceeds ±{nyq} Hz"
                )));
            }
        }
        if !(self.rx_bandwidth_hz > 0.0) || self.rx_bandwidth_hz > self.rf_rate() {
            return Err(PimError::config("plan.rx_bandwidth_hz", "must be positive and within the RF rate"));
        }
        // The RX band may lie beyond Nyquist (it aliases), but its alias must
        // not land on a TX carrier.
        let rate = self.rf_rate();
        let rx = fft::wrap_freq(self.rx_offset_hz, rate);
        for (&off, &bw) in self.cc_offsets_hz.iter().zip(&self.cc_bandwidths_hz) {
            let gap = fft::wrap_freq(rx - off, rate).abs();
            if gap < (bw + self.rx_bandwidth_hz) / 2.0 {
                return Err(PimError::Nyquist(format!(
                    "RX band alias at {rx} Hz overlaps the carrier at {off} Hz"
                )));
            }
        }
        Ok(())
    }
}

/// Multiplies by `exp(j2π·shift·n/rate)`.
pub fn freq_shift(x: &mut [Complex64], shift_hz: f64, rate: f64) {
    if shift_hz == 0.0 {
        return;
    }
    let cycles = shift_hz / rate;
    for (n, v) in x.iter_mut().enumerate() {
        // Reduce the phase before multiplying by 2π to keep precision over long records.
        let ph = (cycles * n as f64).rem_euclid(1.0);
        *v *= Complex64::from_polar(1.0, 2.0 * PI * ph);
    }
}

/// FFT-domain interpolation by `factor` with an ideal low-pass at `bw/2`.
pub fn upsample(x: &[Complex64], factor: usize, rate: f64, bw: f64) -> Vec<Complex64> {
    let n = x.len();
    let m = n * factor;
    let spec = fft::fft(x);
    let mut up = vec![Complex64::new(0.0, 0.0); m];
    for (k, &v) in spec.iter().enumerate() {
        let f = fft::bin_freq(k, n, rate);
        if f.abs() <= bw / 2.0 + 1e-9 * rate {
            let dst = if f < 0.0 { m - (n - k) } else { k };
            up[dst] = v;
        }
    }
    fft::ifft_in_place(&mut up);
    let g = factor as f64;
    up.iter_mut().for_each(|v| *v *= g);
    up
}

/// Upsamples every carrier of every chain to the RF rate, shifts it to its
/// offset and sums per chain. `cc_signals[cc][chain]`.
///
/// Downstream processing is circular, so records should be long enough that
/// the carrier offsets fall on their DFT grid (see [`on_grid`]).
pub fn compose_rf(cc_signals: &[Vec<BasebandSignal>], plan: &CarrierPlan) -> Result<Vec<BasebandSignal>> {
    plan.validate()?;
    if cc_signals.len() != plan.n_ccs() {
        return Err(PimError::dim(format!(
            "{} carriers supplied for a {}-carrier plan",
            cc_signals.len(),
            plan.n_ccs()
        )));
    }
    let n_chains = cc_signals[0].len();
    let len = cc_signals[0].first().map(|s| s.len()).unwrap_or(0);
    let rate = plan.rf_rate();
    let mut out: Vec<BasebandSignal> = (0..n_chains)
        .map(|_| BasebandSignal::zeros(len * plan.oversample_factor, rate, 0.0))
        .collect();
    for (cc, chains) in cc_signals.iter().enumerate() {
        if chains.len() != n_chains {
            return Err(PimError::dim("every carrier needs the same chain count"));
        }
        for (chain, s) in chains.iter().enumerate() {
            if s.sample_rate != plan.base_rate_hz || s.len() != len {
                return Err(PimError::dim(format!(
                    "carrier {cc} chain {chain}: expected {len} samples at {} Hz",
                    plan.base_rate_hz
                )));
            }
            let mut up = upsample(&s.samples, plan.oversample_factor, plan.base_rate_hz, plan.cc_bandwidths_hz[cc]);
            freq_shift(&mut up, plan.cc_offsets_hz[cc] - s.center_offset, rate);
            for (o, v) in out[chain].samples.iter_mut().zip(&up) {
                *o += v;
            }
        }
    }
    Ok(out)
}

/// True when `offset_hz` is an integer number of DFT bins for `len` samples at `rate`.
pub fn on_grid(offset_hz: f64, len: usize, rate: f64) -> bool {
    let bins = offset_hz * len as f64 / rate;
    (bins - bins.round()).abs() < 1e-6
}

/// Ideal band-pass: shift `offset` (relative to the TX centre) to DC, keep
/// `|f| ≤ bw/2`, and resample to `out_rate` by spectrum truncation/padding.
/// Offsets beyond Nyquist are folded, so aliased bands can be extracted.
pub fn extract_band(sig: &BasebandSignal, offset: f64, bw: f64, out_rate: f64) -> Result<BasebandSignal> {
    let in_rate = sig.sample_rate;
    if !(bw > 0.0) || bw > in_rate + 1e-6 || bw > out_rate + 1e-6 {
        return Err(PimError::Nyquist(format!(
            "bandwidth {bw} Hz does not fit input rate {in_rate} Hz / output rate {out_rate} Hz"
        )));
    }
    let n_in = sig.len();
    let n_out_f = n_in as f64 * out_rate / in_rate;
    let n_out = n_out_f.round() as usize;
    if (n_out as f64 - n_out_f).abs() > 1e-6 || n_out == 0 {
        return Err(PimError::dim(format!(
            "{n_in} samples at {in_rate} Hz do not resample to an integer length at {out_rate} Hz"
        )));
    }
    let mut x = sig.samples.clone();
    freq_shift(&mut x, -(offset - sig.center_offset), in_rate);
    fft::fft_in_place(&mut x);
    let mut y = vec![Complex64::new(0.0, 0.0); n_out];
    let limit = bw / 2.0 + 1e-9 * in_rate;
    for (k, slot) in y.iter_mut().enumerate() {
        // Output bin k sits at the same physical frequency as some input bin.
        let f = fft::bin_freq(k, n_out, out_rate);
        if f.abs() > limit {
            continue;
        }
        let src = if f < 0.0 {
            let d = n_out - k;
            if d > n_in {
                continue;
            }
            n_in - d
        } else {
            if k >= n_in {
                continue;
            }
            k
        };
        *slot = x[src];
    }
    fft::ifft_in_place(&mut y);
    let g = n_out as f64 / n_in as f64;
    y.iter_mut().for_each(|v| *v *= g);
    BasebandSignal::new(y, out_rate, offset)
}

/// Zeroes everything outside `|f − center| ≤ bw/2` without changing rate or offset.
pub fn bandlimit(sig: &mut BasebandSignal, center: f64, bw: f64) {
    let n = sig.len();
    let rate = sig.sample_rate;
    fft::fft_in_place(&mut sig.samples);
    let rel = center - sig.center_offset;
    for k in 0..n {
        let f = fft::bin_freq(k, n, rate);
        if fft::wrap_freq(f - rel, rate).abs() > bw / 2.0 + 1e-9 * rate {
            sig.samples[k] = Complex64::new(0.0, 0.0);
        }
    }
    fft::ifft_in_place(&mut sig.samples);
}
