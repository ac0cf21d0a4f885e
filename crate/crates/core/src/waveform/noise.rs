use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::signal::BasebandSignal;
use crate::error::{PimError, Result};
use crate::rng;

/// Circularly-symmetric complex Gaussian noise with variance `power`.
pub fn awgn<R: Rng>(n: usize, power: f64, sample_rate: f64, rng: &mut R) -> Result<BasebandSignal> {
    if !(power >= 0.0) || !power.is_finite() {
        return Err(PimError::domain(format!("noise power must be non-negative, got {power}")));
    }
    let s = (power / 2.0).sqrt();
    let samples = (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * s, im * s)
        })
        .collect();
    BasebandSignal::new(samples, sample_rate, 0.0)
}

/// [`awgn`] drawn from the noise stream `component` of `seed`.
pub fn awgn_seeded(n: usize, power: f64, sample_rate: f64, seed: u64, component: u64) -> Result<BasebandSignal> {
    let mut r = rng::keyed(seed, rng::stream::NOISE + component);
    awgn(n, power, sample_rate, &mut r)
}
