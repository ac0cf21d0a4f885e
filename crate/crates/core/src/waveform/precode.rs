use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::signal::BasebandSignal;
use crate::error::{PimError, Result};

/// Layer-to-chain mapping, one entry per component carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PrecoderConfig {
    /// One independent layer per chain.
    Identity,
    /// DFT beams: `beams[cc][layer]` is the beam index for that layer.
    Dft { beams: Vec<Vec<usize>> },
}

impl Default for PrecoderConfig {
    fn default() -> Self {
        PrecoderConfig::Identity
    }
}

impl PrecoderConfig {
    pub fn n_layers(&self, cc: usize, n_chains: usize) -> Result<usize> {
        match self {
            PrecoderConfig::Identity => Ok(n_chains),
            PrecoderConfig::Dft { beams } => beams
                .get(cc)
                .map(|b| b.len())
                .ok_or_else(|| PimError::dim(format!("no beams configured for carrier {cc}"))),
        }
    }

    pub fn validate(&self, n_ccs: usize, n_chains: usize) -> Result<()> {
        if let PrecoderConfig::Dft { beams } = self {
            if beams.len() != n_ccs {
                return Err(PimError::config("precoder.beams", format!("expected {n_ccs} carriers")));
            }
            for b in beams {
                if b.is_empty() || b.len() > n_chains {
                    return Err(PimError::config("precoder.beams", "layer count must be in 1..=n_chains"));
                }
                if b.iter().any(|&i| i >= n_chains) {
                    return Err(PimError::config("precoder.beams", "beam index out of range"));
                }
            }
        }
        Ok(())
    }
}

/// Column `beam` of the unitary `n × n` DFT matrix.
pub fn dft_beam(n_chains: usize, beam: usize) -> Vec<Complex64> {
    let s = 1.0 / (n_chains as f64).sqrt();
    (0..n_chains)
        .map(|n| Complex64::from_polar(s, 2.0 * PI * (n * beam % n_chains) as f64 / n_chains as f64))
        .collect()
}

/// Maps the layers of carrier `cc` onto `n_chains` chain signals.
pub fn precode(layers: &[BasebandSignal], cfg: &PrecoderConfig, cc: usize, n_chains: usize) -> Result<Vec<BasebandSignal>> {
    let want = cfg.n_layers(cc, n_chains)?;
    if layers.len() != want || layers.is_empty() || layers.len() > n_chains {
        return Err(PimError::dim(format!(
            "{} layers supplied, precoder expects {want} (n_chains = {n_chains})",
            layers.len()
        )));
    }
    for l in &layers[1..] {
        layers[0].check_compatible(l)?;
    }
    match cfg {
        PrecoderConfig::Identity => Ok(layers.to_vec()),
        PrecoderConfig::Dft { beams } => {
            let vecs: Vec<Vec<Complex64>> = beams[cc].iter().map(|&b| dft_beam(n_chains, b)).collect();
            let like = &layers[0];
            Ok((0..n_chains)
                .map(|n| {
                    let mut out = BasebandSignal::zeros(like.len(), like.sample_rate, like.center_offset);
                    for (layer, v) in layers.iter().zip(&vecs) {
                        let w = v[n];
                        for (o, x) in out.samples.iter_mut().zip(&layer.samples) {
                            *o += w * x;
                        }
                    }
                    out
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::ofdm::{gen_ofdm, OfdmConfig};

    #[test]
    fn identity_single_chain() {
        let x = gen_ofdm(&OfdmConfig::five_mhz(2), 3).unwrap();
        let out = precode(&[x.clone()], &PrecoderConfig::Identity, 0, 1).unwrap();
        assert_eq!(out[0], x);
        let one = PrecoderConfig::Dft { beams: vec![vec![0]] };
        let out = precode(&[x.clone()], &one, 0, 1).unwrap();
        for (a, b) in out[0].samples.iter().zip(&x.samples) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn beam_preserves_power_and_beams_are_orthogonal() {
        let x = gen_ofdm(&OfdmConfig::five_mhz(8), 3).unwrap();
        let cfg = PrecoderConfig::Dft { beams: vec![vec![3]] };
        let out = precode(&[x.clone()], &cfg, 0, 8).unwrap();
        let total: f64 = out.iter().map(|s| s.mean_power()).sum();
        assert!((total - x.mean_power()).abs() < 1e-6);
        for a in 0..8 {
            for b in 0..8 {
                let ip: Complex64 = dft_beam(8, a).iter().zip(dft_beam(8, b)).map(|(u, v)| u * v.conj()).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn layer_count_checked() {
        let x = gen_ofdm(&OfdmConfig::five_mhz(1), 3).unwrap();
        assert!(precode(&[x.clone(), x.clone()], &PrecoderConfig::Identity, 0, 1).is_err());
        let cfg = PrecoderConfig::Dft { beams: vec![vec![0, 1]] };
        assert!(precode(&[x], &cfg, 0, 4).is_err());
    }
}
