use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::signal::BasebandSignal;
use crate::error::{PimError, Result};
use crate::fft;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Qpsk,
    Qam16,
}

impl Modulation {
    fn symbol<R: Rng>(self, rng: &mut R) -> Complex64 {
        match self {
            Modulation::Qpsk => {
                let re = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let im = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                Complex64::new(re, im) * FRAC_1_SQRT_2
            }
            Modulation::Qam16 => {
                const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
                let s = 1.0 / 10f64.sqrt();
                Complex64::new(LEVELS[rng.gen_range(0..4)], LEVELS[rng.gen_range(0..4)]) * s
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmConfig {
    pub fft_len: usize,
    pub used_subcarriers: usize,
    pub subcarrier_spacing_hz: f64,
    pub modulation: Modulation,
    pub n_symbols: usize,
}

impl OfdmConfig {
    /// 5 MHz grid: 512-point FFT, 300 used subcarriers at 15 kHz (7.68 Msps).
    pub fn five_mhz(n_symbols: usize) -> Self {
        Self {
            fft_len: 512,
            used_subcarriers: 300,
            subcarrier_spacing_hz: 15e3,
            modulation: Modulation::Qpsk,
            n_symbols,
        }
    }

    pub fn sample_rate(&self) -> f64 {
        self.fft_len as f64 * self.subcarrier_spacing_hz
    }

    pub fn len(&self) -> usize {
        self.fft_len * self.n_symbols
    }

    pub fn occupied_bandwidth(&self) -> f64 {
        self.used_subcarriers as f64 * self.subcarrier_spacing_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !self.fft_len.is_power_of_two() {
            return Err(PimError::config("ofdm.fft_len", "must be a power of two"));
        }
        if self.used_subcarriers == 0 || self.used_subcarriers >= self.fft_len || self.used_subcarriers % 2 != 0 {
            return Err(PimError::config(
                "ofdm.used_subcarriers",
                "must be even, positive and smaller than fft_len",
            ));
        }
        if !(self.subcarrier_spacing_hz > 0.0) {
            return Err(PimError::config("ofdm.subcarrier_spacing_hz", "must be positive"));
        }
        if self.n_symbols == 0 {
            return Err(PimError::config("ofdm.n_symbols", "must be positive"));
        }
        Ok(())
    }
}

/// CP-free OFDM stream with random data on the used subcarriers (DC empty),
/// scaled to unit mean power.
pub fn gen_ofdm(cfg: &OfdmConfig, seed: u64) -> Result<BasebandSignal> {
    gen_ofdm_keyed(cfg, seed, 0)
}

/// As [`gen_ofdm`], drawing from the stream `component` of `seed`.
pub fn gen_ofdm_keyed(cfg: &OfdmConfig, seed: u64, component: u64) -> Result<BasebandSignal> {
    cfg.validate()?;
    let mut rng = rng::keyed(seed, rng::stream::OFDM + component);
    let n = cfg.fft_len;
    let half = cfg.used_subcarriers / 2;
    let mut out = Vec::with_capacity(cfg.len());
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..cfg.n_symbols {
        bins.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for k in 1..=half {
            bins[k] = cfg.modulation.symbol(&mut rng);
            bins[n - k] = cfg.modulation.symbol(&mut rng);
        }
        let mut sym = bins.clone();
        fft::ifft_in_place(&mut sym);
        out.extend_from_slice(&sym);
    }
    let p = super::signal::mean_power(&out);
    let s = 1.0 / p.sqrt();
    out.iter_mut().for_each(|v| *v *= s);
    BasebandSignal::new(out, cfg.sample_rate(), 0.0)
}
