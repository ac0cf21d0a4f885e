use num_complex::Complex64;

use crate::error::{PimError, Result};
use crate::waveform::{extract_band, BasebandSignal, CarrierPlan};

/// Per-chain low- and high-carrier references at the canceller rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CcReferences {
    /// `low[chain][t]`
    pub low: Vec<Vec<Complex64>>,
    pub high: Vec<Vec<Complex64>>,
    pub rate: f64,
}

impl CcReferences {
    pub fn n_chains(&self) -> usize {
        self.low.len()
    }

    pub fn len(&self) -> usize {
        self.low.first().map(|v| v.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn carrier(&self, c: usize) -> &[Vec<Complex64>] {
        if c == 0 {
            &self.low
        } else {
            &self.high
        }
    }
}

/// Extracts the two carriers of every RF-rate TX chain. Extraction is
/// zero-phase, so references stay sample-aligned with the RX capture.
pub fn build_cc_references(tx: &[BasebandSignal], plan: &CarrierPlan, rate: f64) -> Result<CcReferences> {
    if plan.n_ccs() != 2 {
        return Err(PimError::config("plan", "the canceller needs exactly two carriers"));
    }
    let mut low = Vec::with_capacity(tx.len());
    let mut high = Vec::with_capacity(tx.len());
    for s in tx {
        if s.sample_rate != plan.rf_rate() {
            return Err(PimError::dim(format!("TX chain at {} Hz, plan RF rate {}", s.sample_rate, plan.rf_rate())));
        }
        low.push(extract_band(s, plan.cc_offsets_hz[0], plan.cc_bandwidths_hz[0], rate)?.samples);
        high.push(extract_band(s, plan.cc_offsets_hz[1], plan.cc_bandwidths_hz[1], rate)?.samples);
    }
    Ok(CcReferences { low, high, rate })
}

/// RX chain resampled to the canceller rate.
pub fn rx_at_rate(rx: &BasebandSignal, plan: &CarrierPlan, rate: f64) -> Result<Vec<Complex64>> {
    Ok(extract_band(rx, plan.rx_offset_hz, plan.rx_bandwidth_hz, rate)?.samples)
}
