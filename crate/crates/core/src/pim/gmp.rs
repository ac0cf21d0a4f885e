use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PimError, Result};
use crate::waveform::BasebandSignal;

/// One term `g · u(t−m) · |u(t−m−k)|^(p−1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmpTap {
    pub m: i32,
    pub k: i32,
    pub p: u32,
    #[serde(default = "unit_gain")]
    pub gain: Complex64,
}

fn unit_gain() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmpModel {
    pub taps: Vec<GmpTap>,
}

impl GmpModel {
    /// Memoryless pure cubic, `u·|u|²`.
    pub fn cubic() -> Self {
        Self {
            taps: vec![GmpTap {
                m: 0,
                k: 0,
                p: 3,
                gain: unit_gain(),
            }],
        }
    }

    pub fn identity() -> Self {
        Self {
            taps: vec![GmpTap {
                m: 0,
                k: 0,
                p: 1,
                gain: unit_gain(),
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(PimError::config("gmp.taps", "model needs at least one tap"));
        }
        for t in &self.taps {
            if t.p == 0 || t.p % 2 == 0 {
                return Err(PimError::config("gmp.taps.p", format!("order {} is not a positive odd integer", t.p)));
            }
            if !(t.gain.re.is_finite() && t.gain.im.is_finite()) {
                return Err(PimError::config("gmp.taps.gain", "gain must be finite"));
            }
        }
        Ok(())
    }

    /// Largest `|m| + |k|` over the taps.
    pub fn memory_span(&self) -> usize {
        self.taps.iter().map(|t| (t.m.unsigned_abs() + t.k.unsigned_abs()) as usize).max().unwrap_or(0)
    }
}

/// `y(t) = Σ g · u(t−m) · |u(t−m−k)|^(p−1)`, zero outside the record.
pub fn apply_gmp(model: &GmpModel, u: &BasebandSignal) -> Result<BasebandSignal> {
    model.validate()?;
    let n = u.len();
    if n <= model.memory_span() {
        return Err(PimError::dim(format!(
            "signal of {n} samples is shorter than the model memory {}",
            model.memory_span()
        )));
    }
    let x = &u.samples;
    let at = |i: i64| -> Complex64 {
        if i >= 0 && (i as usize) < n {
            x[i as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for tap in &model.taps {
        let half = (tap.p - 1) / 2;
        for (t, out) in y.iter_mut().enumerate() {
            let t = t as i64;
            let a = at(t - tap.m as i64);
            let env = at(t - tap.m as i64 - tap.k as i64).norm_sqr().powi(half as i32);
            *out += tap.gain * a * env;
        }
    }
    BasebandSignal::new(y, u.sample_rate, u.center_offset)
}
