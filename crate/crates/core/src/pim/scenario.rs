use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::{apply_backward, apply_forward, ChannelMode, ChannelModel, DipoleChannel};
use super::gmp::{apply_gmp, GmpModel};
use crate::consts::db_to_linear;
use crate::em::{check_orientation, feed_current, ArrayLayout, Point3};
use crate::error::{PimError, Result};
use crate::waveform::carrier::on_grid;
use crate::waveform::{
    awgn_seeded, bandlimit, compose_rf, extract_band, gen_ofdm_keyed, precode, BasebandSignal, CarrierPlan,
    OfdmConfig, PrecoderConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PimSource {
    pub position: Point3,
    pub orientation: Point3,
    pub gmp: GmpModel,
    /// Gain of this source relative to the others, dB. The absolute level is
    /// set once for the summed PIM by the scenario's noise-relative target.
    pub relative_level_db: f64,
}

impl PimSource {
    pub fn new(position: Point3, orientation: Point3, gmp: GmpModel) -> Self {
        Self {
            position,
            orientation,
            gmp,
            relative_level_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() {
            return Err(PimError::config("source.position", "must be finite"));
        }
        check_orientation(self.orientation).map_err(|e| PimError::config("source.orientation", e.to_string()))?;
        self.gmp.validate()?;
        if !self.relative_level_db.is_finite() {
            return Err(PimError::config("source.relative_level_db", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PimScenario {
    pub layout: ArrayLayout,
    pub plan: CarrierPlan,
    /// Numerology per carrier; `n_symbols` is derived from the record length.
    pub ofdm: OfdmConfig,
    pub precoder: PrecoderConfig,
    pub sources: Vec<PimSource>,
    /// RX-band noise power (the noise floor), linear.
    pub noise_power: f64,
    /// Mean summed PIM power over the noise floor, dB.
    pub pim_over_noise_db: f64,
    pub seed: u64,
    /// RF-rate samples.
    pub train_len: usize,
    pub test_len: usize,
    pub channel_mode: ChannelMode,
}

pub const MIN_PIM_OVER_NOISE_DB: f64 = -100.0;

impl PimScenario {
    pub fn total_len(&self) -> usize {
        self.train_len + self.test_len
    }

    /// OFDM symbols per carrier needed to fill the record.
    pub fn n_symbols(&self) -> Result<usize> {
        let per_symbol = self.ofdm.fft_len * self.plan.oversample_factor;
        if self.total_len() == 0 || self.total_len() % per_symbol != 0 {
            return Err(PimError::config(
                "train_len",
                format!("train + test length must be a positive multiple of {per_symbol} RF samples"),
            ));
        }
        Ok(self.total_len() / per_symbol)
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        self.plan.validate()?;
        self.ofdm.validate()?;
        self.precoder.validate(self.plan.n_ccs(), self.layout.n_chains)?;
        if (self.ofdm.sample_rate() - self.plan.base_rate_hz).abs() > 1e-6 {
            return Err(PimError::config("ofdm", "OFDM sample rate must equal the plan base rate"));
        }
        if self.sources.is_empty() {
            return Err(PimError::config("sources", "need at least one PIM source"));
        }
        for s in &self.sources {
            s.validate()?;
        }
        if self.train_len == 0 || self.test_len == 0 {
            return Err(PimError::config("train_len", "train and test lengths must be positive"));
        }
        self.n_symbols()?;
        let n = self.total_len();
        let rate = self.plan.rf_rate();
        for &o in self.plan.cc_offsets_hz.iter().chain(std::iter::once(&self.plan.rx_offset_hz)) {
            if !on_grid(o, n, rate) {
                return Err(PimError::config(
                    "train_len",
                    format!("record length {n} does not put the {o} Hz offset on the DFT grid"),
                ));
            }
        }
        if !(self.noise_power >= 0.0) {
            return Err(PimError::config("noise_power", "must be non-negative"));
        }
        if !(self.pim_over_noise_db >= MIN_PIM_OVER_NOISE_DB) {
            return Err(PimError::config("pim_over_noise_db", "must be at least -100 dB"));
        }
        Ok(())
    }
}

/// TX side of a run: RF-rate chain signals (unit power each) plus the
/// per-carrier base-rate chain signals that make them up, with the same
/// per-chain scaling applied.
#[derive(Debug, Clone, PartialEq)]
pub struct TxSignals {
    pub chains: Vec<BasebandSignal>,
    /// `carriers[cc][chain]` at the base rate.
    pub carriers: Vec<Vec<BasebandSignal>>,
}

pub fn generate_tx(sc: &PimScenario) -> Result<TxSignals> {
    let n_chains = sc.layout.n_chains;
    let mut ofdm = sc.ofdm.clone();
    ofdm.n_symbols = sc.n_symbols()?;
    let mut carriers = Vec::with_capacity(sc.plan.n_ccs());
    for cc in 0..sc.plan.n_ccs() {
        let n_layers = sc.precoder.n_layers(cc, n_chains)?;
        let layers = (0..n_layers)
            .into_par_iter()
            .map(|l| gen_ofdm_keyed(&ofdm, sc.seed, (cc as u64) << 20 | l as u64))
            .collect::<Result<Vec<_>>>()?;
        carriers.push(precode(&layers, &sc.precoder, cc, n_chains)?);
    }
    let mut chains = compose_rf(&carriers, &sc.plan)?;
    for (n, chain) in chains.iter_mut().enumerate() {
        let p = chain.mean_power();
        if p == 0.0 {
            continue;
        }
        let s = 1.0 / p.sqrt();
        chain.samples.iter_mut().for_each(|v| *v *= s);
        for per_cc in carriers.iter_mut() {
            per_cc[n].samples.iter_mut().for_each(|v| *v *= s);
        }
    }
    Ok(TxSignals { chains, carriers })
}

/// TX chains to the source at the configured feed current.
pub fn forward_channel<'a>(layout: &'a ArrayLayout, src: &PimSource) -> Result<DipoleChannel<'a>> {
    Ok(DipoleChannel {
        layout,
        position: src.position,
        orientation: src.orientation,
        current: feed_current(layout.chain_power, layout.impedance)?,
    })
}

/// The receive link is referenced to unit terminal current, so it does not
/// depend on the TX drive level.
pub fn backward_channel<'a>(layout: &'a ArrayLayout, src: &PimSource) -> DipoleChannel<'a> {
    DipoleChannel {
        layout,
        position: src.position,
        orientation: src.orientation,
        current: 1.0,
    }
}

/// Induced signal `U_eff(t)` at the source.
pub fn excitation(
    tx: &[BasebandSignal],
    layout: &ArrayLayout,
    source: &PimSource,
    plan: &CarrierPlan,
    mode: ChannelMode,
) -> Result<BasebandSignal> {
    apply_forward(tx, &forward_channel(layout, source)?, mode, plan)
}

/// Backward link plus the ideal RX duplexer. Outputs stay at the RF rate,
/// centred on the RX band.
pub fn backpropagate(
    u_pim: &BasebandSignal,
    layout: &ArrayLayout,
    source: &PimSource,
    plan: &CarrierPlan,
    mode: ChannelMode,
) -> Result<Vec<BasebandSignal>> {
    backpropagate_with(u_pim, &backward_channel(layout, source), plan, mode)
}

pub fn backpropagate_with(
    u_pim: &BasebandSignal,
    channel: &dyn ChannelModel,
    plan: &CarrierPlan,
    mode: ChannelMode,
) -> Result<Vec<BasebandSignal>> {
    let raw = apply_backward(u_pim, channel, mode, plan)?;
    raw.par_iter()
        .map(|s| extract_band(s, plan.rx_offset_hz, plan.rx_bandwidth_hz, plan.rf_rate()))
        .collect()
}

/// One real scale so the mean per-chain PIM power sits `target_db` over the
/// noise floor. Returns the scaled signals and the factor.
pub fn normalize_pim(clean: &[BasebandSignal], noise_power: f64, target_db: f64) -> Result<(Vec<BasebandSignal>, f64)> {
    if !(target_db >= MIN_PIM_OVER_NOISE_DB) {
        return Err(PimError::config("pim_over_noise_db", "target must be at least -100 dB"));
    }
    if !(noise_power > 0.0) {
        return Err(PimError::config("noise_power", "normalization needs a positive noise floor"));
    }
    let mean = clean.iter().map(|s| s.mean_power()).sum::<f64>() / clean.len().max(1) as f64;
    if !(mean > 0.0) {
        return Err(PimError::domain("PIM power is zero; nothing to normalize"));
    }
    let s = (noise_power * db_to_linear(target_db) / mean).sqrt();
    Ok((clean.iter().map(|c| c.scaled(s)).collect(), s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub tx: TxSignals,
    /// `U_eff` per source, RF rate.
    pub excitations: Vec<BasebandSignal>,
    /// Summed received PIM per chain before level normalization.
    pub raw_pim_rx: Vec<BasebandSignal>,
    pub pim_scale: f64,
    pub clean_pim_rx: Vec<BasebandSignal>,
    pub noise: Vec<BasebandSignal>,
    pub rx_chains: Vec<BasebandSignal>,
}

/// Received PIM per source and chain without normalization or noise.
pub fn simulate_pim(
    sc: &PimScenario,
    tx: &TxSignals,
    channels: &[(&dyn ChannelModel, &dyn ChannelModel)],
) -> Result<(Vec<BasebandSignal>, Vec<Vec<BasebandSignal>>)> {
    if channels.len() != sc.sources.len() {
        return Err(PimError::dim("one channel pair per source"));
    }
    let per_source = sc
        .sources
        .par_iter()
        .zip(channels.par_iter())
        .enumerate()
        .map(|(i, (src, (fwd, bwd)))| -> Result<(BasebandSignal, Vec<BasebandSignal>)> {
            let u_eff = apply_forward(&tx.chains, *fwd, sc.channel_mode, &sc.plan)
                .map_err(|e| e.in_stage("excitation"))?;
            let u_pim = apply_gmp(&src.gmp, &u_eff).map_err(|e| e.in_stage("nonlinearity"))?;
            let g = db_to_linear(src.relative_level_db).sqrt();
            let rx = backpropagate_with(&u_pim, *bwd, &sc.plan, sc.channel_mode)
                .map_err(|e| e.in_stage("backpropagation"))?;
            log::debug!("source {i}: excitation power {:.3e}", u_eff.mean_power());
            Ok((u_eff, rx.into_iter().map(|s| s.scaled(g)).collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_source.into_iter().unzip())
}

pub fn run_scenario(sc: &PimScenario) -> Result<SimOutput> {
    sc.validate()?;
    let fwd = sc
        .sources
        .iter()
        .map(|s| forward_channel(&sc.layout, s))
        .collect::<Result<Vec<_>>>()?;
    let bwd: Vec<_> = sc.sources.iter().map(|s| backward_channel(&sc.layout, s)).collect();
    let pairs: Vec<(&dyn ChannelModel, &dyn ChannelModel)> = fwd
        .iter()
        .zip(&bwd)
        .map(|(f, b)| (f as &dyn ChannelModel, b as &dyn ChannelModel))
        .collect();
    run_scenario_with(sc, &pairs)
}

/// [`run_scenario`] with caller-supplied links, one `(forward, backward)` pair per source.
pub fn run_scenario_with(sc: &PimScenario, channels: &[(&dyn ChannelModel, &dyn ChannelModel)]) -> Result<SimOutput> {
    sc.validate()?;
    let tx = generate_tx(sc).map_err(|e| e.in_stage("tx generation"))?;
    let (excitations, per_source) = simulate_pim(sc, &tx, channels)?;
    let raw = sum_sources(per_source)?;
    let (clean, pim_scale) =
        normalize_pim(&raw, sc.noise_power, sc.pim_over_noise_db).map_err(|e| e.in_stage("normalization"))?;
    let noise = rx_noise(sc)?;
    let rx_chains = clean
        .iter()
        .zip(&noise)
        .map(|(c, n)| {
            let mut r = c.clone();
            r.add_assign(n)?;
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimOutput {
        tx,
        excitations,
        raw_pim_rx: raw,
        pim_scale,
        clean_pim_rx: clean,
        noise,
        rx_chains,
    })
}

pub fn sum_sources(per_source: Vec<Vec<BasebandSignal>>) -> Result<Vec<BasebandSignal>> {
    let mut it = per_source.into_iter();
    let mut acc = it.next().ok_or_else(|| PimError::dim("no sources"))?;
    for s in it {
        for (a, b) in acc.iter_mut().zip(&s) {
            a.add_assign(b)?;
        }
    }
    Ok(acc)
}

/// Band-limited RX noise with in-band power `noise_power` per chain.
pub fn rx_noise(sc: &PimScenario) -> Result<Vec<BasebandSignal>> {
    let rate = sc.plan.rf_rate();
    let n = sc.total_len();
    let white = sc.noise_power * rate / sc.plan.rx_bandwidth_hz;
    (0..sc.layout.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut s = awgn_seeded(n, white, rate, sc.seed, c as u64)?;
            s.center_offset = sc.plan.rx_offset_hz;
            bandlimit(&mut s, sc.plan.rx_offset_hz, sc.plan.rx_bandwidth_hz);
            Ok(s)
        })
        .collect()
}

