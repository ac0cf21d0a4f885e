//! Frequency-selective links between the array terminals and a PIM source.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consts::TX_CENTER_HZ;
use crate::em::{coupling_vector_with_current, element_couplings_with_current, ArrayLayout, Point3};
use crate::error::{PimError, Result};
use crate::fft;
use crate::waveform::{BasebandSignal, CarrierPlan};

/// Per-chain complex response at an absolute frequency.
pub trait ChannelModel: Sync {
    fn n_chains(&self) -> usize;
    fn response(&self, freq_hz: f64) -> Result<Vec<Complex64>>;
}

/// Dipole-array coupling to a point source. `current` is the chain feed
/// current the response is scaled by.
pub struct DipoleChannel<'a> {
    pub layout: &'a ArrayLayout,
    pub position: Point3,
    pub orientation: Point3,
    pub current: f64,
}

impl ChannelModel for DipoleChannel<'_> {
    fn n_chains(&self) -> usize {
        self.layout.n_chains
    }

    fn response(&self, freq_hz: f64) -> Result<Vec<Complex64>> {
        Ok(coupling_vector_with_current(self.layout, self.position, self.orientation, freq_hz, self.current)?.h)
    }
}

/// Every element as its own output, without the per-chain sum. Drives the
/// per-antenna power maps.
pub struct ElementChannel<'a> {
    pub layout: &'a ArrayLayout,
    pub position: Point3,
    pub orientation: Point3,
    pub current: f64,
}

impl ChannelModel for ElementChannel<'_> {
    fn n_chains(&self) -> usize {
        self.layout.elements.len()
    }

    fn response(&self, freq_hz: f64) -> Result<Vec<Complex64>> {
        element_couplings_with_current(self.layout, self.position, self.orientation, freq_hz, self.current)
    }
}

/// Frequency-flat coupling, for tests and injected scenarios.
pub struct FixedChannel(pub Vec<Complex64>);

impl ChannelModel for FixedChannel {
    fn n_chains(&self) -> usize {
        self.0.len()
    }

    fn response(&self, _freq_hz: f64) -> Result<Vec<Complex64>> {
        Ok(self.0.clone())
    }
}

/// Arbitrary frequency response from a closure.
pub struct FnChannel<F: Fn(f64) -> Vec<Complex64> + Sync> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(f64) -> Vec<Complex64> + Sync> ChannelModel for FnChannel<F> {
    fn n_chains(&self) -> usize {
        self.n
    }

    fn response(&self, freq_hz: f64) -> Result<Vec<Complex64>> {
        Ok((self.f)(freq_hz))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelMode {
    /// Response sampled on a `block`-point grid and applied as a centred
    /// `block`-tap FIR through overlap-save.
    OverlapSave { block: usize },
    /// Response sampled on every bin of the record-length DFT.
    WholeSignal,
    /// One coupling per carrier (TX) or at the RX centre (RX).
    FlatPerCc,
}

impl Default for ChannelMode {
    fn default() -> Self {
        ChannelMode::OverlapSave { block: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    /// TX chains to the source.
    Forward,
    /// Source to the RX chains.
    Backward,
}

/// Absolute frequency of baseband bin frequency `f` on a link, unfolding the
/// RX band when it lies beyond Nyquist.
pub fn physical_freq(link: Link, f: f64, plan: &CarrierPlan) -> f64 {
    match link {
        Link::Forward => TX_CENTER_HZ + f,
        Link::Backward => {
            let rate = plan.rf_rate();
            plan.rx_center_hz() + fft::wrap_freq(f - plan.rx_offset_hz, rate)
        }
    }
}

fn flat_freq(link: Link, f: f64, plan: &CarrierPlan) -> f64 {
    match link {
        Link::Forward => {
            let mut best = plan.cc_offsets_hz[0];
            for &o in &plan.cc_offsets_hz {
                if (f - o).abs() < (f - best).abs() {
                    best = o;
                }
            }
            TX_CENTER_HZ + best
        }
        Link::Backward => plan.rx_center_hz(),
    }
}

fn in_band(link: Link, f: f64, plan: &CarrierPlan) -> bool {
    let rate = plan.rf_rate();
    match link {
        Link::Forward => plan
            .cc_offsets_hz
            .iter()
            .zip(&plan.cc_bandwidths_hz)
            .any(|(&o, &bw)| (f - o).abs() <= bw / 2.0 + 1e-9 * rate),
        Link::Backward => fft::wrap_freq(f - plan.rx_offset_hz, rate).abs() <= plan.rx_bandwidth_hz / 2.0 + 1e-9 * rate,
    }
}

/// Response on each bin of an `n`-point grid at the RF rate, `[bin][chain]`.
/// With `only_band`, bins outside the link's band are left at zero.
fn sample_grid(
    channel: &dyn ChannelModel,
    link: Link,
    plan: &CarrierPlan,
    n: usize,
    flat: bool,
    only_band: bool,
) -> Result<Vec<Vec<Complex64>>> {
    let rate = plan.rf_rate();
    let nc = channel.n_chains();
    (0..n)
        .into_par_iter()
        .map(|k| {
            let f = fft::bin_freq(k, n, rate);
            if only_band && !in_band(link, f, plan) {
                return Ok(vec![Complex64::new(0.0, 0.0); nc]);
            }
            let phys = if flat { flat_freq(link, f, plan) } else { physical_freq(link, f, plan) };
            let h = channel.response(phys)?;
            if h.len() != nc {
                return Err(PimError::dim(format!("channel returned {} entries for {nc} chains", h.len())));
            }
            Ok(h)
        })
        .collect()
}

/// Centred impulse responses `κ_c[j]`, `j ∈ [−block/2, block/2)`, stored with
/// index `j + block/2`, from a `block`-point sampled response.
pub fn centred_kernels(grid: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = grid.len();
    let nc = grid.first().map(|g| g.len()).unwrap_or(0);
    (0..nc)
        .map(|c| {
            let mut h: Vec<Complex64> = grid.iter().map(|g| g[c]).collect();
            fft::ifft_in_place(&mut h);
            (0..n).map(|i| h[(i + n - n / 2) % n]).collect()
        })
        .collect()
}

/// `y[t] = Σ_c Σ_j κ_c[j] x_c[t − j]` with zero history and future, by
/// overlap-save with a `2·block` FFT.
pub fn convolve_centred_sum(inputs: &[&[Complex64]], kernels: &[Vec<Complex64>], out_len: usize) -> Vec<Complex64> {
    let l = kernels[0].len();
    let half = l / 2;
    let nfft = 2 * l;
    let step = l;
    let kspec: Vec<Vec<Complex64>> = kernels
        .iter()
        .map(|k| {
            let mut b = vec![Complex64::new(0.0, 0.0); nfft];
            b[..l].copy_from_slice(k);
            fft::fft_in_place(&mut b);
            b
        })
        .collect();
    let fwd = fft::forward_plan(nfft);
    let inv = fft::inverse_plan(nfft);
    // Causal form: z[t] = Σ_i κ[i] x[t − i] with κ starting at delay 0, so y[t] = z[t + half].
    let total = out_len + half;
    let mut z = vec![Complex64::new(0.0, 0.0); total];
    let mut acc = vec![Complex64::new(0.0, 0.0); nfft];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    let mut start = 0usize;
    while start < total {
        acc.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (x, ks) in inputs.iter().zip(&kspec) {
            // Block covers input samples [start − l, start + l).
            for (i, b) in buf.iter_mut().enumerate() {
                let idx = start as i64 - l as i64 + i as i64;
                *b = if idx >= 0 && (idx as usize) < x.len() {
                    x[idx as usize]
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            fwd.process(&mut buf);
            for ((a, b), k) in acc.iter_mut().zip(&buf).zip(ks) {
                *a += b * k;
            }
        }
        inv.process(&mut acc);
        let s = 1.0 / nfft as f64;
        for i in 0..step {
            let t = start + i;
            if t >= total {
                break;
            }
            z[t] = acc[l + i] * s;
        }
        start += step;
    }
    z.drain(..half);
    z
}

fn check_inputs(sigs: &[&BasebandSignal], plan: &CarrierPlan) -> Result<()> {
    let first = sigs.first().ok_or_else(|| PimError::dim("no input signals"))?;
    for s in sigs {
        first.check_compatible(s)?;
    }
    if first.sample_rate != plan.rf_rate() {
        return Err(PimError::dim(format!(
            "link input at {} Hz, plan RF rate is {} Hz",
            first.sample_rate,
            plan.rf_rate()
        )));
    }
    Ok(())
}

/// `U_eff(t)`: all TX chains through the forward link, summed.
pub fn apply_forward(
    tx: &[BasebandSignal],
    channel: &dyn ChannelModel,
    mode: ChannelMode,
    plan: &CarrierPlan,
) -> Result<BasebandSignal> {
    let refs: Vec<&BasebandSignal> = tx.iter().collect();
    check_inputs(&refs, plan)?;
    if tx.len() != channel.n_chains() {
        return Err(PimError::dim(format!("{} TX chains, channel has {}", tx.len(), channel.n_chains())));
    }
    let n = tx[0].len();
    let rate = tx[0].sample_rate;
    let offset = tx[0].center_offset;
    let samples = match mode {
        ChannelMode::OverlapSave { block } => {
            check_block(block)?;
            let grid = sample_grid(channel, Link::Forward, plan, block, false, false)?;
            let kernels = centred_kernels(&grid);
            let inputs: Vec<&[Complex64]> = tx.iter().map(|s| s.samples.as_slice()).collect();
            convolve_centred_sum(&inputs, &kernels, n)
        }
        ChannelMode::WholeSignal | ChannelMode::FlatPerCc => {
            let grid = sample_grid(channel, Link::Forward, plan, n, mode == ChannelMode::FlatPerCc, true)?;
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            for (c, s) in tx.iter().enumerate() {
                let x = fft::fft(&s.samples);
                for (k, a) in acc.iter_mut().enumerate() {
                    *a += grid[k][c] * x[k];
                }
            }
            fft::ifft_in_place(&mut acc);
            acc
        }
    };
    BasebandSignal::new(samples, rate, offset)
}

/// Per-chain received signal: the source signal through the backward link.
/// Output is not yet band-limited.
pub fn apply_backward(
    u: &BasebandSignal,
    channel: &dyn ChannelModel,
    mode: ChannelMode,
    plan: &CarrierPlan,
) -> Result<Vec<BasebandSignal>> {
    check_inputs(&[u], plan)?;
    let n = u.len();
    let nc = channel.n_chains();
    let outs: Vec<Vec<Complex64>> = match mode {
        ChannelMode::OverlapSave { block } => {
            check_block(block)?;
            let grid = sample_grid(channel, Link::Backward, plan, block, false, false)?;
            let kernels = centred_kernels(&grid);
            kernels
                .par_iter()
                .map(|k| convolve_centred_sum(&[u.samples.as_slice()], std::slice::from_ref(k), n))
                .collect()
        }
        ChannelMode::WholeSignal | ChannelMode::FlatPerCc => {
            let grid = sample_grid(channel, Link::Backward, plan, n, mode == ChannelMode::FlatPerCc, true)?;
            let x = fft::fft(&u.samples);
            (0..nc)
                .into_par_iter()
                .map(|c| {
                    let mut y: Vec<Complex64> = (0..n).map(|k| grid[k][c] * x[k]).collect();
                    fft::ifft_in_place(&mut y);
                    y
                })
                .collect()
        }
    };
    outs.into_iter()
        .map(|s| BasebandSignal::new(s, u.sample_rate, u.center_offset))
        .collect()
}

fn check_block(block: usize) -> Result<()> {
    if block < 2 || !block.is_power_of_two() {
        return Err(PimError::config("channel.block", "overlap-save block must be a power of two ≥ 2"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_signal(n: usize, seed: u64) -> Vec<Complex64> {
        let mut r = rng::keyed(seed, rng::stream::TEST);
        (0..n)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut r);
                let b: f64 = StandardNormal.sample(&mut r);
                Complex64::new(a, b)
            })
            .collect()
    }

    #[test]
    fn overlap_save_matches_direct_convolution() {
        let l = 16;
        let n = 100;
        let k1 = random_signal(l, 1);
        let k2 = random_signal(l, 2);
        let x1 = random_signal(n, 3);
        let x2 = random_signal(n, 4);
        let got = convolve_centred_sum(&[&x1, &x2], &[k1.clone(), k2.clone()], n);
        // Direct oracle.
        for t in 0..n {
            let mut want = Complex64::new(0.0, 0.0);
            for (k, x) in [(&k1, &x1), (&k2, &x2)] {
                for i in 0..l {
                    let j = i as i64 - (l / 2) as i64;
                    let idx = t as i64 - j;
                    if idx >= 0 && (idx as usize) < n {
                        want += k[i] * x[idx as usize];
                    }
                }
            }
            assert!((got[t] - want).norm() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn unit_channel_is_identity() {
        let plan = CarrierPlan::paper();
        let n = 4096;
        let x = BasebandSignal::new(random_signal(n, 9), plan.rf_rate(), 0.0).unwrap();
        let ch = FixedChannel(vec![Complex64::new(1.0, 0.0)]);
        let y = apply_forward(&[x.clone()], &ch, ChannelMode::default(), &plan).unwrap();
        for (a, b) in y.samples.iter().zip(&x.samples) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn backward_unfolds_rx_band() {
        let plan = CarrierPlan::paper();
        let aliased = fft::wrap_freq(plan.rx_offset_hz, plan.rf_rate());
        assert!((physical_freq(Link::Backward, aliased, &plan) - 1771.5e6).abs() < 1e-3);
        assert!((physical_freq(Link::Forward, -23.75e6, &plan) - 1819e6).abs() < 1e-3);
    }
}
