//! Scenario execution, run report and plot-data export.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::ScenarioConfig;
use super::io::write_atomic;
use crate::canceller::{cancel, CancelMetrics, CancelOutput, ConvergenceLog};
use crate::consts::linear_to_db;
use crate::em::Polarization;
use crate::error::{PimError, Result};
use crate::pim::manifest::{write_sim, SimManifest};
use crate::pim::{run_scenario, SimOutput};
use crate::waveform::dump::write_dump;
use crate::waveform::{psd, BasebandSignal, Psd};

pub const REPORT_SCHEMA: &str = "pimsim-report/1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRow {
    pub chain: usize,
    pub polarization: Option<Polarization>,
    /// Clean PIM power in the RX band, over NF.
    pub pim_db_over_nf: f64,
    /// Test-interval RX (PIM plus noise) and residual, over NF.
    pub rx_db_over_nf: f64,
    pub residual_db_over_nf: f64,
    pub suppression_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: String,
    pub config_hash: String,
    pub preset: Option<String>,
    pub scenario_seed: u64,
    pub canceller_seed: u64,
    pub noise_db: f64,
    pub canceller_rate_hz: f64,
    pub chains: Vec<ChainRow>,
    pub metrics: CancelMetrics,
    pub convergence_csv: String,
    /// Every file written for this run, relative to the output directory.
    pub files: Vec<String>,
    pub wall_clock_s: f64,
}

/// Everything a run produces; the plot-data writers read from here.
pub struct RunOutput {
    pub report: RunReport,
    pub sim: SimOutput,
    pub cancel: CancelOutput,
    /// Per-chain Welch PSDs of the test interval at the canceller rate.
    pub psd_rx: Vec<Psd>,
    pub psd_residual: Vec<Psd>,
    pub psd_nfft: usize,
}

pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let t0 = Instant::now();
    cfg.validate()?;
    let sc = cfg.scenario()?;
    let sim = run_scenario(&sc).map_err(|e| e.in_stage("simulation"))?;
    let nf = sc.noise_power;
    let out = cancel(
        &sim.rx_chains,
        &sim.tx.chains,
        &sc.plan,
        &cfg.canceller,
        sc.train_len,
        nf,
        cfg.seeds.canceller,
    )
    .map_err(|e| e.in_stage("cancellation"))?;
    let nfft = cfg.output.psd_nfft;
    let test = out.train_len..out.chains.first().map_or(0, |c| c.rx.len());
    let at_rate = |x: &[num_complex::Complex64]| {
        BasebandSignal::new(x[test.clone()].to_vec(), out.rate, sc.plan.rx_offset_hz)
    };
    let mut psd_rx = Vec::with_capacity(out.chains.len());
    let mut psd_residual = Vec::with_capacity(out.chains.len());
    for c in &out.chains {
        psd_rx.push(psd(&at_rate(&c.rx)?, nfft).map_err(|e| e.in_stage("psd"))?);
        psd_residual.push(psd(&at_rate(&c.residual)?, nfft).map_err(|e| e.in_stage("psd"))?);
    }
    let chains = out
        .chains
        .iter()
        .enumerate()
        .map(|(n, c)| ChainRow {
            chain: n,
            polarization: sc.layout.chain_polarization(n),
            pim_db_over_nf: linear_to_db(sim.clean_pim_rx[n].mean_power() / nf),
            rx_db_over_nf: c.metrics.rx_db_over_nf,
            residual_db_over_nf: c.metrics.residual_db_over_nf,
            suppression_db: c.metrics.suppression_db,
        })
        .collect();
    let report = RunReport {
        schema: REPORT_SCHEMA.into(),
        config_hash: cfg.hash(),
        preset: cfg.preset.clone(),
        scenario_seed: cfg.seeds.scenario,
        canceller_seed: cfg.seeds.canceller,
        noise_db: cfg.noise_db(),
        canceller_rate_hz: out.rate,
        chains,
        metrics: out.metrics.clone(),
        convergence_csv: "convergence.csv".into(),
        files: Vec::new(),
        wall_clock_s: t0.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        report,
        sim,
        cancel: out,
        psd_rx,
        psd_residual,
        psd_nfft: nfft,
    })
}

/// CSV text with a schema comment line, a header and rows.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(schema: &str, columns: &[&str]) -> Self {
        let mut text = format!("# schema: {schema}\n");
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, dir: &Path, name: &str, files: &mut Vec<String>) -> Result<()> {
        write_atomic(&dir.join(name), self.text.as_bytes())?;
        files.push(name.to_string());
        Ok(())
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub fn f(v: f64) -> String {
    format!("{v}")
}

pub fn pol_name(p: Option<Polarization>) -> String {
    match p {
        Some(Polarization::Vertical) => "vertical".into(),
        Some(Polarization::Horizontal) => "horizontal".into(),
        None => "none".into(),
    }
}

/// Bin power referred to the RX bandwidth: a flat in-band spectrum of total
/// power `P` reads `P` dB in every in-band bin.
fn referred_db(p: f64, bin_width: f64, rx_bw: f64) -> f64 {
    linear_to_db(p * rx_bw / bin_width)
}

fn check_artifacts(out: &RunOutput) -> Result<()> {
    let n = out.cancel.chains.len();
    if n == 0 || out.psd_rx.len() != n || out.psd_residual.len() != n {
        return Err(PimError::dim("run output is missing per-chain PSDs"));
    }
    if out
        .psd_rx
        .iter()
        .chain(&out.psd_residual)
        .any(|p| p.power.len() != out.psd_nfft)
    {
        return Err(PimError::dim("PSD length differs from the configured nfft"));
    }
    if out.report.chains.len() != n {
        return Err(PimError::dim("report chain table is incomplete"));
    }
    Ok(())
}

fn convergence_csv(log: &ConvergenceLog, chain: Option<usize>, csv: &mut Csv) {
    for e in &log.entries {
        let mut row = Vec::with_capacity(5);
        if let Some(c) = chain {
            row.push(c.to_string());
        }
        row.extend([e.iteration.to_string(), f(e.residual_db_over_nf), f(e.coeff_norm), f(e.step)]);
        csv.row(&row);
    }
}

/// Writes the plot data for a finished run into `dir`: PSD overlays (RX,
/// residual and NF line), convergence curves, the suppression and PIM power
/// tables, the canceller coefficients and, on request, the waveforms.
/// Returns the written file names.
pub fn emit_plot_data(out: &RunOutput, cfg: &ScenarioConfig, dir: &Path) -> Result<Vec<String>> {
    check_artifacts(out)?;
    let mut files = Vec::new();
    let rx_bw = cfg.carriers.rx_bandwidth_hz;
    let nf_db = cfg.noise_db();
    let n = out.cancel.chains.len();

    let mut psd_csv = Csv::new(
        "pimsim-psd/1",
        &["frequency_offset_hz", "rx_power_db", "residual_power_db", "noise_floor_db"],
    );
    let width = out.psd_rx[0].bin_width_hz;
    for i in 0..out.psd_nfft {
        let rx = out.psd_rx.iter().map(|p| p.power[i]).sum::<f64>() / n as f64;
        let res = out.psd_residual.iter().map(|p| p.power[i]).sum::<f64>() / n as f64;
        psd_csv.row(&[
            f(out.psd_rx[0].freqs_hz[i]),
            f(referred_db(rx, width, rx_bw)),
            f(referred_db(res, width, rx_bw)),
            f(nf_db),
        ]);
    }
    psd_csv.write(dir, "psd.csv", &mut files)?;

    let mut per_chain = Csv::new(
        "pimsim-psd-chains/1",
        &["chain", "frequency_offset_hz", "rx_power_db", "residual_power_db"],
    );
    for (c, (a, b)) in out.psd_rx.iter().zip(&out.psd_residual).enumerate() {
        for i in 0..out.psd_nfft {
            per_chain.row(&[
                c.to_string(),
                f(a.freqs_hz[i]),
                f(referred_db(a.power[i], a.bin_width_hz, rx_bw)),
                f(referred_db(b.power[i], b.bin_width_hz, rx_bw)),
            ]);
        }
    }
    per_chain.write(dir, "psd_chains.csv", &mut files)?;

    let mut conv = Csv::new(
        "pimsim-convergence/1",
        &["iteration", "residual_db_over_nf", "coeff_norm", "step"],
    );
    convergence_csv(&out.cancel.log, None, &mut conv);
    conv.write(dir, "convergence.csv", &mut files)?;

    let mut conv_chains = Csv::new(
        "pimsim-convergence-chains/1",
        &["chain", "iteration", "residual_db_over_nf", "coeff_norm", "step"],
    );
    for (c, ch) in out.cancel.chains.iter().enumerate() {
        convergence_csv(&ch.log, Some(c), &mut conv_chains);
    }
    conv_chains.write(dir, "convergence_chains.csv", &mut files)?;

    let mut sup = Csv::new(
        "pimsim-suppression/1",
        &["chain", "polarization", "rx_db_over_nf", "residual_db_over_nf", "suppression_db"],
    );
    let mut pim = Csv::new("pimsim-pim-power/1", &["chain", "polarization", "pim_db_over_nf"]);
    for r in &out.report.chains {
        sup.row(&[
            r.chain.to_string(),
            pol_name(r.polarization),
            f(r.rx_db_over_nf),
            f(r.residual_db_over_nf),
            f(r.suppression_db),
        ]);
        pim.row(&[r.chain.to_string(), pol_name(r.polarization), f(r.pim_db_over_nf)]);
    }
    sup.write(dir, "suppression.csv", &mut files)?;
    pim.write(dir, "pim_power.csv", &mut files)?;

    let mut coeffs = Csv::new(
        "pimsim-coefficients/1",
        &["chain", "source", "carrier", "tx_chain", "re", "im"],
    );
    let mut gains = Csv::new("pimsim-gains/1", &["chain", "source", "m", "k", "i", "j", "order", "re", "im"]);
    let terms = cfg.canceller.basis.terms()?;
    for (c, ch) in out.cancel.chains.iter().enumerate() {
        for s in 0..ch.coeffs.n_sources {
            for carrier in 0..2 {
                for (t, v) in ch.coeffs.get(s, carrier).iter().enumerate() {
                    coeffs.row(&[
                        c.to_string(),
                        s.to_string(),
                        if carrier == 0 { "low" } else { "high" }.to_string(),
                        t.to_string(),
                        f(v.re),
                        f(v.im),
                    ]);
                }
            }
            for (term, g) in terms.iter().zip(&ch.gains[s]) {
                gains.row(&[
                    c.to_string(),
                    s.to_string(),
                    term.m.to_string(),
                    term.k.to_string(),
                    term.i.to_string(),
                    term.j.to_string(),
                    term.order().to_string(),
                    f(g.re),
                    f(g.im),
                ]);
            }
        }
    }
    coeffs.write(dir, "coefficients.csv", &mut files)?;
    gains.write(dir, "gains.csv", &mut files)?;

    if cfg.output.dump_signals {
        let rate = out.cancel.rate;
        let off = cfg.carriers.rx_offset_hz;
        for (c, ch) in out.cancel.chains.iter().enumerate() {
            for (kind, x) in [("rx", &ch.rx), ("residual", &ch.residual)] {
                let name = format!("signals/{kind}_{c:02}.iq");
                write_dump(&dir.join(&name), &BasebandSignal::new(x.clone(), rate, off)?)?;
                files.push(name.clone());
                files.push(format!("{name}.json"));
            }
        }
        let manifest = SimManifest {
            scenario_hash: cfg.hash(),
            seed: cfg.seeds.scenario,
            noise_power: cfg.noise_power(),
            pim_over_noise_db: cfg.noise.pim_over_noise_db,
            pim_scale: out.sim.pim_scale,
            train_len: cfg.record.train_len,
            test_len: cfg.record.test_len,
            tx_files: Vec::new(),
            rx_files: Vec::new(),
        };
        let m = write_sim(&dir.join("sim"), &out.sim, &manifest)?;
        for name in m.tx_files.iter().chain(&m.rx_files) {
            files.push(format!("sim/{name}"));
            files.push(format!("sim/{name}.json"));
        }
        files.push("sim/manifest.json".into());
    }
    Ok(files)
}

/// Runs, exports the plot data and writes `report.json` and the resolved
/// `config.toml` into `dir`.
pub fn run_to_dir(cfg: &ScenarioConfig, dir: &Path) -> Result<RunReport> {
    let mut out = run(cfg)?;
    let mut files = emit_plot_data(&out, cfg, dir)?;
    write_atomic(&dir.join("config.toml"), cfg.to_toml_string()?.as_bytes())?;
    files.push("config.toml".into());
    files.push("report.json".into());
    out.report.files = files;
    let json = serde_json::to_vec_pretty(&out.report).map_err(|e| PimError::Parse(e.to_string()))?;
    write_atomic(&dir.join("report.json"), &json)?;
    Ok(out.report)
}

/// Human-readable summary table.
pub fn summary(report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "chain  pol         pim/NF   rx/NF    res/NF   supp");
    for r in &report.chains {
        let _ = writeln!(
            s,
            "{:>5}  {:<10}  {:>6.2}  {:>6.2}  {:>7.2}  {:>6.2}",
            r.chain,
            pol_name(r.polarization),
            r.pim_db_over_nf,
            r.rx_db_over_nf,
            r.residual_db_over_nf,
            r.suppression_db
        );
    }
    let m = &report.metrics;
    let _ = writeln!(
        s,
        "mean suppression {:.2} dB, mean residual {:.2} dB over NF, worst {:.2} dB",
        m.mean_suppression_db, m.mean_residual_db_over_nf, m.max_residual_db_over_nf
    );
    s
}
