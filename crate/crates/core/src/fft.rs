//! Thin wrappers over `rustfft` with a thread-local planner cache.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub fn inverse_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Unnormalized forward DFT in place.
pub fn fft_in_place(buf: &mut [Complex64]) {
    forward_plan(buf.len()).process(buf);
}

/// Inverse DFT in place, scaled by `1/len`.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    inverse_plan(n).process(buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= s);
}

pub fn fft(x: &[Complex64]) -> Vec<Complex64> {
    let mut v = x.to_vec();
    fft_in_place(&mut v);
    v
}

pub fn ifft(x: &[Complex64]) -> Vec<Complex64> {
    let mut v = x.to_vec();
    ifft_in_place(&mut v);
    v
}

/// Frequency of DFT bin `k` for a transform of length `n` at `rate`, mapped to
/// `[-rate/2, rate/2)`.
pub fn bin_freq(k: usize, n: usize, rate: f64) -> f64 {
    let k = k as f64;
    let n_f = n as f64;
    if k < n_f / 2.0 {
        k * rate / n_f
    } else {
        (k - n_f) * rate / n_f
    }
}

/// Wraps a frequency into `[-rate/2, rate/2)`.
pub fn wrap_freq(f: f64, rate: f64) -> f64 {
    let r = (f + rate / 2.0).rem_euclid(rate);
    r - rate / 2.0
}
