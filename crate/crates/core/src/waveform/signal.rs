use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PimError, Result};

/// Complex baseband stream. `center_offset` is the frequency (Hz) that maps to
/// DC, measured from the TX-band centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasebandSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    pub center_offset: f64,
}

impl BasebandSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, center_offset: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(PimError::domain(format!("sample rate must be positive, got {sample_rate}")));
        }
        if !center_offset.is_finite() {
            return Err(PimError::domain("center offset must be finite"));
        }
        Ok(Self {
            samples,
            sample_rate,
            center_offset,
        })
    }

    pub fn zeros(len: usize, sample_rate: f64, center_offset: f64) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); len],
            sample_rate,
            center_offset,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        mean_power(&self.samples)
    }

    pub fn check_compatible(&self, other: &BasebandSignal) -> Result<()> {
        if self.sample_rate != other.sample_rate || self.center_offset != other.center_offset {
            return Err(PimError::dim(format!(
                "signals differ in rate/offset: ({}, {}) vs ({}, {})",
                self.sample_rate, self.center_offset, other.sample_rate, other.center_offset
            )));
        }
        if self.len() != other.len() {
            return Err(PimError::dim(format!("lengths {} and {}", self.len(), other.len())));
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &BasebandSignal) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            *a += b;
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> BasebandSignal {
        BasebandSignal {
            samples: self.samples.iter().map(|v| v * s).collect(),
            sample_rate: self.sample_rate,
            center_offset: self.center_offset,
        }
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> BasebandSignal {
        BasebandSignal {
            samples: self.samples[range].to_vec(),
            sample_rate: self.sample_rate,
            center_offset: self.center_offset,
        }
    }
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Normalized cross-correlation magnitude `|<a, b>| / (‖a‖‖b‖)`.
pub fn correlation(a: &[Complex64], b: &[Complex64]) -> f64 {
    let n = a.len().min(b.len());
    let mut ab = Complex64::new(0.0, 0.0);
    let (mut aa, mut bb) = (0.0, 0.0);
    for i in 0..n {
        ab += a[i] * b[i].conj();
        aa += a[i].norm_sqr();
        bb += b[i].norm_sqr();
    }
    if aa == 0.0 || bb == 0.0 {
        return 0.0;
    }
    ab.norm() / (aa * bb).sqrt()
}
