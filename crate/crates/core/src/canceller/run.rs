use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{build_bf_matrix, BasisSet, BfTerm};
use super::coeffs::{combine, ChannelCoeffs};
use super::filter::{brickwall, kaiser_lowpass};
use super::ls::{ls_fit, residual};
use super::refs::{build_cc_references, rx_at_rate, CcReferences};
use super::sgd::{sgd_update, BlockProblem};
use crate::consts::linear_to_db;
use crate::error::{PimError, Result};
use crate::rng;
use crate::waveform::{mean_power, BasebandSignal, CarrierPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CancellerConfig {
    pub basis: BasisSet,
    /// Hypothesized number of PIM sources.
    pub n_sources: usize,
    /// RF rate divided by this gives the canceller rate.
    pub decimation: usize,
    pub step: f64,
    pub step_decay: f64,
    /// Training-residual improvement (dB per refresh) below which a refresh
    /// counts as a plateau.
    pub plateau_db: f64,
    /// Consecutive plateau refreshes before the step decays.
    pub patience: usize,
    /// Stop once the step has decayed below `step · min_step_ratio`.
    pub min_step_ratio: f64,
    /// A start that has gained less than `restart_gain_db` after
    /// `restart_after` refreshes is redrawn, at most `max_restarts` times.
    pub restart_after: usize,
    pub restart_gain_db: f64,
    pub max_restarts: usize,
    pub block_len: usize,
    pub blocks_per_epoch: usize,
    /// SGD epochs between LS refreshes.
    pub sgd_epochs: usize,
    pub max_refreshes: usize,
    /// Ridge as a fraction of `trace(AᴴA) / terms`.
    pub ridge: f64,
    /// Samples dropped at each end of the fit and evaluation ranges.
    pub guard: usize,
    /// In-band FIR for the block loss: attenuation and transition as a
    /// fraction of the RX bandwidth.
    pub fir_atten_db: f64,
    pub fir_transition: f64,
}

impl Default for CancellerConfig {
    fn default() -> Self {
        Self {
            basis: BasisSet::compensation(),
            n_sources: 1,
            decimation: 8,
            step: 5e-2,
            step_decay: 0.5,
            plateau_db: 0.05,
            patience: 3,
            min_step_ratio: 1.0 / 8.0,
            restart_after: 8,
            restart_gain_db: 1.0,
            max_restarts: 3,
            block_len: 2048,
            blocks_per_epoch: 64,
            sgd_epochs: 1,
            max_refreshes: 60,
            ridge: 1e-6,
            guard: 64,
            fir_atten_db: 60.0,
            fir_transition: 0.1,
        }
    }
}

impl CancellerConfig {
    pub fn validate(&self) -> Result<()> {
        let terms = self.basis.terms()?;
        let span = terms.iter().map(|t| t.span()).max().unwrap_or(0);
        if self.n_sources == 0 {
            return Err(PimError::config("canceller.n_sources", "must be positive"));
        }
        if self.decimation == 0 {
            return Err(PimError::config("canceller.decimation", "must be positive"));
        }
        if !(self.step > 0.0) || !(self.step_decay > 0.0 && self.step_decay < 1.0) {
            return Err(PimError::config("canceller.step", "step must be positive and decay in (0, 1)"));
        }
        if self.block_len <= span {
            return Err(PimError::config("canceller.block_len", "must exceed the basis memory span"));
        }
        if self.blocks_per_epoch == 0 || self.max_refreshes == 0 {
            return Err(PimError::config("canceller.blocks_per_epoch", "epochs need at least one block and refresh"));
        }
        if !(self.ridge >= 0.0) {
            return Err(PimError::config("canceller.ridge", "must be non-negative"));
        }
        if !(self.fir_transition > 0.0 && self.fir_transition < 0.5) {
            return Err(PimError::config("canceller.fir_transition", "must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogEntry {
    pub iteration: usize,
    /// LS residual on the training interior over the noise floor.
    pub residual_db_over_nf: f64,
    pub coeff_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceLog {
    pub entries: Vec<LogEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainMetrics {
    pub rx_db_over_nf: f64,
    pub residual_db_over_nf: f64,
    pub suppression_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult {
    pub coeffs: ChannelCoeffs,
    pub gains: Vec<Vec<Complex64>>,
    pub log: ConvergenceLog,
    /// Canceller-rate RX and residual over the whole record.
    pub rx: Vec<Complex64>,
    pub residual: Vec<Complex64>,
    pub metrics: ChainMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CancelMetrics {
    pub mean_suppression_db: f64,
    /// Power average of the per-chain residuals, over NF.
    pub mean_residual_db_over_nf: f64,
    pub max_residual_db_over_nf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CancelOutput {
    pub chains: Vec<ChainResult>,
    /// Per iteration, power average over chains.
    pub log: ConvergenceLog,
    pub metrics: CancelMetrics,
    pub rate: f64,
    /// Canceller-rate index where the test interval starts.
    pub train_len: usize,
}

/// Context shared by every chain.
pub struct Prepared {
    pub refs: CcReferences,
    pub terms: Vec<BfTerm>,
    pub fir: Vec<f64>,
    pub rx_bw: f64,
    pub train_len: usize,
}

pub fn prepare(tx: &[BasebandSignal], plan: &CarrierPlan, cfg: &CancellerConfig, train_len_rf: usize) -> Result<Prepared> {
    cfg.validate()?;
    if train_len_rf % cfg.decimation != 0 {
        return Err(PimError::config("canceller.decimation", "must divide the training length"));
    }
    let rate = plan.rf_rate() / cfg.decimation as f64;
    if rate < 3.0 * plan.cc_bandwidths_hz.iter().cloned().fold(0.0, f64::max) {
        return Err(PimError::config(
            "canceller.decimation",
            "canceller rate must hold the third-order product of the carriers",
        ));
    }
    let refs = build_cc_references(tx, plan, rate).map_err(|e| e.in_stage("references"))?;
    let bw = plan.rx_bandwidth_hz;
    let fir = kaiser_lowpass(rate, bw / 2.0 - cfg.fir_transition * bw, bw / 2.0, cfg.fir_atten_db);
    let train_len = train_len_rf / cfg.decimation;
    if train_len < 2 * cfg.guard + cfg.block_len + fir.len() {
        return Err(PimError::config("train_len", "training interval too short for the SGD block"));
    }
    Ok(Prepared {
        refs,
        terms: cfg.basis.terms()?,
        fir,
        rx_bw: bw,
        train_len,
    })
}

/// Filtered model columns for every hypothesized source, concatenated.
fn filtered_columns(p: &Prepared, w: &ChannelCoeffs) -> Result<Vec<Vec<Complex64>>> {
    let mut cols = Vec::with_capacity(w.n_sources * p.terms.len());
    for s in 0..w.n_sources {
        let (vl, vh) = combine(w, &p.refs, s)?;
        for mut c in build_bf_matrix(&vl, &vh, &p.terms)? {
            brickwall(&mut c, p.refs.rate, p.rx_bw);
            cols.push(c);
        }
    }
    Ok(cols)
}

/// Rescales each weight vector so its combined signal has unit training power.
fn normalize_weights(p: &Prepared, w: &mut ChannelCoeffs) -> Result<()> {
    for s in 0..w.n_sources {
        let (vl, vh) = combine(w, &p.refs, s)?;
        for (c, v) in [(0, vl), (1, vh)] {
            let pw = mean_power(&v[..p.train_len]);
            if pw > 0.0 {
                let k = 1.0 / pw.sqrt();
                w.get_mut(s, c).iter_mut().for_each(|x| *x *= k);
            }
        }
    }
    Ok(())
}

fn split_gains(g: &[Complex64], n_terms: usize) -> Vec<Vec<Complex64>> {
    g.chunks(n_terms).map(|c| c.to_vec()).collect()
}

/// Runs the full alternating loop for one RX chain.
pub fn cancel_chain(
    p: &Prepared,
    rx: &[Complex64],
    cfg: &CancellerConfig,
    noise_power: f64,
    seed: u64,
    chain: usize,
) -> Result<ChainResult> {
    if rx.len() != p.refs.len() {
        return Err(PimError::dim(format!("RX has {} samples, references {}", rx.len(), p.refs.len())));
    }
    let n_chains = p.refs.n_chains();
    let mut init_rng = rng::keyed(seed, rng::stream::CANCELLER_INIT + chain as u64);
    let mut block_rng = rng::keyed(seed, rng::stream::SGD_BLOCKS + chain as u64);
    let mut w = ChannelCoeffs::random(cfg.n_sources, n_chains, &mut init_rng);
    let fit_rows = cfg.guard..p.train_len - cfg.guard;
    let nf = noise_power;
    let mut step = cfg.step;
    let mut log = ConvergenceLog::default();
    let mut best: Option<(f64, ChannelCoeffs, Vec<Complex64>)> = None;
    let mut prev_res: Option<f64> = None;
    let mut step_index = 0usize;
    let mut flat = 0usize;
    let mut restarts = 0usize;
    // (refresh index, training residual) where the current start began.
    let mut start: Option<(usize, f64)> = None;
    let half = p.fir.len() / 2;
    let lo = cfg.guard + half;
    let hi = p.train_len - cfg.guard - half - cfg.block_len;

    for iteration in 0..cfg.max_refreshes {
        normalize_weights(p, &mut w)?;
        let cols = filtered_columns(p, &w)?;
        let (g, res) = ls_fit(&cols, rx, fit_rows.clone(), cfg.ridge).map_err(|e| e.in_stage("ls refresh"))?;
        let res_pow = mean_power(&res[fit_rows.clone()]);
        let res_db = linear_to_db(res_pow / nf);
        log.entries.push(LogEntry {
            iteration,
            residual_db_over_nf: res_db,
            coeff_norm: g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt(),
            step,
        });
        if let Some(prev) = prev_res {
            if res_pow > 10.0 * prev {
                return Err(PimError::Divergence {
                    epoch: iteration,
                    from: prev,
                    to: res_pow,
                });
            }
            if linear_to_db(prev) - linear_to_db(res_pow) < cfg.plateau_db {
                flat += 1;
                if flat >= cfg.patience {
                    step *= cfg.step_decay;
                    flat = 0;
                }
            } else {
                flat = 0;
            }
        }
        prev_res = Some(res_pow);
        if best.as_ref().map_or(true, |b| res_pow < b.0) {
            best = Some((res_pow, w.clone(), g.clone()));
        }
        let (s_iter, s_res) = *start.get_or_insert((iteration, res_pow));
        if iteration - s_iter >= cfg.restart_after
            && restarts < cfg.max_restarts
            && linear_to_db(s_res) - linear_to_db(res_pow) < cfg.restart_gain_db
        {
            log::debug!("chain {chain}: restart {} at refresh {iteration}", restarts + 1);
            w = ChannelCoeffs::random(cfg.n_sources, n_chains, &mut init_rng);
            restarts += 1;
            step = cfg.step;
            flat = 0;
            prev_res = None;
            start = None;
            continue;
        }
        if step < cfg.step * cfg.min_step_ratio || iteration + 1 == cfg.max_refreshes {
            break;
        }
        let gains = split_gains(&g, p.terms.len());
        let problem = BlockProblem {
            refs: &p.refs,
            rx,
            terms: &p.terms,
            g: &gains,
            fir: &p.fir,
        };
        for _ in 0..cfg.sgd_epochs {
            for _ in 0..cfg.blocks_per_epoch {
                let b0 = if hi > lo { block_rng.gen_range(lo..hi) } else { lo };
                let (next, _) = sgd_update(&w, &problem, b0, cfg.block_len, step, step_index)
                    .map_err(|e| e.in_stage("sgd"))?;
                w = next;
                step_index += 1;
            }
        }
    }

    let (_, w, g) = best.expect("at least one refresh");
    let cols = filtered_columns(p, &w)?;
    let residual = residual(&cols, rx, &g);
    let test = p.train_len..rx.len() - cfg.guard;
    let p_rx = mean_power(&rx[test.clone()]);
    let p_res = mean_power(&residual[test]);
    let metrics = ChainMetrics {
        rx_db_over_nf: linear_to_db(p_rx / nf),
        residual_db_over_nf: linear_to_db(p_res / nf),
        suppression_db: linear_to_db(p_rx / p_res),
    };
    Ok(ChainResult {
        coeffs: w,
        gains: split_gains(&g, p.terms.len()),
        log,
        rx: rx.to_vec(),
        residual,
        metrics,
    })
}

/// Per-chain cancellers over every RX chain. `train_len_rf` counts RF-rate
/// samples; everything after it is the held-out test interval.
pub fn cancel(
    rx_chains: &[BasebandSignal],
    tx: &[BasebandSignal],
    plan: &CarrierPlan,
    cfg: &CancellerConfig,
    train_len_rf: usize,
    noise_power: f64,
    seed: u64,
) -> Result<CancelOutput> {
    if !(noise_power > 0.0) {
        return Err(PimError::config("noise_power", "metrics need a positive noise floor"));
    }
    let p = prepare(tx, plan, cfg, train_len_rf)?;
    let rate = p.refs.rate;
    let chains = rx_chains
        .par_iter()
        .enumerate()
        .map(|(n, r)| {
            let rx = rx_at_rate(r, plan, rate)?;
            cancel_chain(&p, &rx, cfg, noise_power, seed, n)
        })
        .collect::<Result<Vec<_>>>()?;
    let log = average_log(&chains);
    let k = chains.len() as f64;
    let metrics = CancelMetrics {
        mean_suppression_db: chains.iter().map(|c| c.metrics.suppression_db).sum::<f64>() / k,
        mean_residual_db_over_nf: linear_to_db(
            chains.iter().map(|c| 10f64.powf(c.metrics.residual_db_over_nf / 10.0)).sum::<f64>() / k,
        ),
        max_residual_db_over_nf: chains.iter().map(|c| c.metrics.residual_db_over_nf).fold(f64::MIN, f64::max),
    };
    Ok(CancelOutput {
        chains,
        log,
        metrics,
        rate,
        train_len: p.train_len,
    })
}

/// Power average over chains per iteration; chains that stopped early hold
/// their last value.
pub fn average_log(chains: &[ChainResult]) -> ConvergenceLog {
    let len = chains.iter().map(|c| c.log.entries.len()).max().unwrap_or(0);
    let entries = (0..len)
        .map(|i| {
            let mut pow = 0.0;
            let mut norm = 0.0;
            let mut step = 0.0;
            for c in chains {
                let e = c.log.entries[i.min(c.log.entries.len() - 1)];
                pow += 10f64.powf(e.residual_db_over_nf / 10.0);
                norm += e.coeff_norm;
                step += e.step;
            }
            let k = chains.len() as f64;
            LogEntry {
                iteration: i,
                residual_db_over_nf: linear_to_db(pow / k),
                coeff_norm: norm / k,
                step: step / k,
            }
        })
        .collect();
    ConvergenceLog { entries }
}
