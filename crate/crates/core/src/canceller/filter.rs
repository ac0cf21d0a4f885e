//! Band-limiting used by the canceller: an exact FFT brick-wall for the LS
//! fit and a short linear-phase FIR for block-local SGD losses.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::fft;

/// Zeroes every bin with `|f| > bw/2` (circular, whole record).
pub fn brickwall(x: &mut [Complex64], rate: f64, bw: f64) {
    let n = x.len();
    fft::fft_in_place(x);
    for (k, v) in x.iter_mut().enumerate() {
        if fft::bin_freq(k, n, rate).abs() > bw / 2.0 + 1e-9 * rate {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    fft::ifft_in_place(x);
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Kaiser-window low-pass with pass edge `pass` and stop edge `stop` (Hz),
/// `atten_db` stop-band attenuation. Odd length, real, symmetric.
pub fn kaiser_lowpass(rate: f64, pass: f64, stop: f64, atten_db: f64) -> Vec<f64> {
    let dw = 2.0 * PI * (stop - pass) / rate;
    let mut n = ((atten_db - 8.0) / (2.285 * dw)).ceil() as usize + 1;
    if n % 2 == 0 {
        n += 1;
    }
    let beta = if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    };
    let fc = (pass + stop) / 2.0 / rate;
    let mid = (n / 2) as f64;
    let i0b = bessel_i0(beta);
    (0..n)
        .map(|i| {
            let t = i as f64 - mid;
            let sinc = if t == 0.0 { 2.0 * fc } else { (2.0 * PI * fc * t).sin() / (PI * t) };
            let r = t / mid;
            sinc * bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0b
        })
        .collect()
}

/// `y[t] = Σ_i h[i] x[t + half − i]` over `out` output positions, where output
/// index `t` corresponds to input index `t + offset`. Zero outside `x`.
pub fn fir_centred(x: &[Complex64], h: &[f64], offset: i64, out: usize) -> Vec<Complex64> {
    let half = (h.len() / 2) as i64;
    (0..out as i64)
        .map(|t| {
            let c = t + offset;
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &hi) in h.iter().enumerate() {
                let idx = c + half - i as i64;
                if idx >= 0 && (idx as usize) < x.len() {
                    acc += x[idx as usize] * hi;
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response(h: &[f64], f: f64, rate: f64) -> f64 {
        let half = (h.len() / 2) as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &v) in h.iter().enumerate() {
            acc += Complex64::from_polar(v, -2.0 * PI * f / rate * (i as f64 - half));
        }
        acc.norm()
    }

    #[test]
    fn kaiser_meets_mask() {
        let rate = 15.36e6;
        let h = kaiser_lowpass(rate, 2.0e6, 2.5e6, 60.0);
        assert!(h.len() % 2 == 1 && h.len() < 140);
        for f in [0.0, 0.5e6, 1.0e6, 1.9e6] {
            assert!((response(&h, f, rate) - 1.0).abs() < 0.01, "{f}");
        }
        for f in [2.6e6, 3.0e6, 5.0e6, 7.0e6] {
            assert!(response(&h, f, rate) < 1.5e-3, "{f}");
        }
    }

    #[test]
    fn brickwall_keeps_in_band_tone() {
        let n = 1024;
        let rate = 1024.0;
        let mut x: Vec<Complex64> = (0..n).map(|t| Complex64::from_polar(1.0, 2.0 * PI * 10.0 * t as f64 / rate)).collect();
        let orig = x.clone();
        brickwall(&mut x, rate, 40.0);
        for (a, b) in x.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-9);
        }
        brickwall(&mut x, rate, 10.0);
        assert!(x.iter().all(|v| v.norm() < 1e-9));
    }
}
