use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::refs::CcReferences;
use crate::error::{PimError, Result};

/// Inner weights `w[s][c][n]`: source `s`, carrier `c` (0 low, 1 high), chain `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCoeffs {
    pub n_sources: usize,
    pub n_chains: usize,
    pub data: Vec<Complex64>,
}

impl ChannelCoeffs {
    pub fn zeros(n_sources: usize, n_chains: usize) -> Self {
        Self {
            n_sources,
            n_chains,
            data: vec![Complex64::new(0.0, 0.0); n_sources * 2 * n_chains],
        }
    }

    /// Entries drawn from CN(0, 1/n_chains).
    pub fn random<R: Rng>(n_sources: usize, n_chains: usize, rng: &mut R) -> Self {
        let s = (0.5 / n_chains as f64).sqrt();
        let data = (0..n_sources * 2 * n_chains)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * s, im * s)
            })
            .collect();
        Self {
            n_sources,
            n_chains,
            data,
        }
    }

    fn range(&self, s: usize, c: usize) -> std::ops::Range<usize> {
        let start = (s * 2 + c) * self.n_chains;
        start..start + self.n_chains
    }

    pub fn get(&self, s: usize, c: usize) -> &[Complex64] {
        &self.data[self.range(s, c)]
    }

    pub fn get_mut(&mut self, s: usize, c: usize) -> &mut [Complex64] {
        let r = self.range(s, c);
        &mut self.data[r]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// `v_c(t) = Σ_n w[s][c][n] x_{n,c}(t)` over `range`. Samples outside the
/// references are zero.
pub fn combine_range(w: &ChannelCoeffs, refs: &CcReferences, s: usize, c: usize, start: i64, len: usize) -> Vec<Complex64> {
    let x = refs.carrier(c);
    let wc = w.get(s, c);
    let n = refs.len() as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    let lo = start.max(0);
    let hi = (start + len as i64).min(n);
    if lo >= hi {
        return out;
    }
    for (xn, &wn) in x.iter().zip(wc) {
        let seg = &xn[lo as usize..hi as usize];
        for (o, v) in out[(lo - start) as usize..(hi - start) as usize].iter_mut().zip(seg) {
            *o += wn * v;
        }
    }
    out
}

/// Combined low and high carrier signals of source `s` over the whole record.
pub fn combine(w: &ChannelCoeffs, refs: &CcReferences, s: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if s >= w.n_sources {
        return Err(PimError::dim(format!("source {s} out of range ({} sources)", w.n_sources)));
    }
    if w.n_chains != refs.n_chains() {
        return Err(PimError::dim(format!("{} weights per carrier for {} chains", w.n_chains, refs.n_chains())));
    }
    let n = refs.len();
    Ok((combine_range(w, refs, s, 0, 0, n), combine_range(w, refs, s, 1, 0, n)))
}
