//! Near-field RX PIM power variation versus source distance.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ScenarioConfig;
use super::run::{f, pol_name, Csv};
use crate::consts::linear_to_db;
use crate::em::{Point3, Polarization};
use crate::error::{PimError, Result};
use crate::pim::{
    apply_gmp, backpropagate_with, backward_channel, excitation, generate_tx, ElementChannel, PimScenario,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceResult {
    pub distance_m: f64,
    /// Clean RX PIM power per chain, dB on the processing scale (no level
    /// normalization, so distances compare directly).
    pub chain_db: Vec<f64>,
    /// Same per antenna element, in layout order.
    pub element_db: Vec<f64>,
}

impl DistanceResult {
    /// Max minus min chain power, dB.
    pub fn spread_db(&self) -> f64 {
        spread(&self.chain_db)
    }

    pub fn element_spread_db(&self) -> f64 {
        spread(&self.element_db)
    }
}

fn spread(x: &[f64]) -> f64 {
    let max = x.iter().cloned().fold(f64::MIN, f64::max);
    let min = x.iter().cloned().fold(f64::MAX, f64::min);
    max - min
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub polarization: Vec<Option<Polarization>>,
    pub distances: Vec<DistanceResult>,
}

impl SweepResult {
    /// Power-averaged chain power of one polarization group, dB.
    pub fn group_mean_db(&self, d: usize, pol: Polarization) -> f64 {
        let vals: Vec<f64> = self.distances[d]
            .chain_db
            .iter()
            .zip(&self.polarization)
            .filter(|(_, p)| **p == Some(pol))
            .map(|(v, _)| 10f64.powf(v / 10.0))
            .collect();
        linear_to_db(vals.iter().sum::<f64>() / vals.len().max(1) as f64)
    }
}

/// For each distance `d`, the first configured source moves to `{0, 0, d}`
/// and the clean RX PIM power is measured per chain and per element.
pub fn sweep_power_variation(cfg: &ScenarioConfig, distances: &[f64]) -> Result<SweepResult> {
    if distances.is_empty() || distances.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(PimError::config("sweep.distances_m", "distances must be positive"));
    }
    let base = cfg.scenario()?;
    let tx = generate_tx(&base).map_err(|e| e.in_stage("tx generation"))?;
    let results = distances
        .par_iter()
        .map(|&d| distance_point(&base, &tx.chains, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        polarization: (0..base.layout.n_chains).map(|c| base.layout.chain_polarization(c)).collect(),
        distances: results,
    })
}

fn distance_point(base: &PimScenario, tx: &[crate::waveform::BasebandSignal], d: f64) -> Result<DistanceResult> {
    let mut src = base.sources[0].clone();
    src.position = Point3::new(0.0, 0.0, d);
    let stage = |e: PimError| e.in_stage("sweep");
    let u = excitation(tx, &base.layout, &src, &base.plan, base.channel_mode).map_err(stage)?;
    let u_pim = apply_gmp(&src.gmp, &u).map_err(stage)?;
    let chains = backpropagate_with(&u_pim, &backward_channel(&base.layout, &src), &base.plan, base.channel_mode)
        .map_err(stage)?;
    let elem_channel = ElementChannel {
        layout: &base.layout,
        position: src.position,
        orientation: src.orientation,
        current: 1.0,
    };
    let elems = backpropagate_with(&u_pim, &elem_channel, &base.plan, base.channel_mode).map_err(stage)?;
    Ok(DistanceResult {
        distance_m: d,
        chain_db: chains.iter().map(|s| linear_to_db(s.mean_power())).collect(),
        element_db: elems.iter().map(|s| linear_to_db(s.mean_power())).collect(),
    })
}

/// File-name tag for a distance, e.g. `0p1m`.
fn distance_tag(d: f64) -> String {
    format!("{d}m").replace('.', "p")
}

/// Writes the sweep tables and per-polarization heat maps (layout rows ×
/// columns, one file per distance and polarization) into `dir`.
pub fn write_sweep(cfg: &ScenarioConfig, res: &SweepResult, dir: &Path) -> Result<Vec<String>> {
    let layout = cfg.array.build()?;
    let mut files = Vec::new();
    let mut chains = Csv::new("pimsim-power-variation/1", &["distance_m", "chain", "polarization", "power_db"]);
    let mut elems = Csv::new(
        "pimsim-power-variation-elements/1",
        &["distance_m", "element", "chain", "polarization", "row", "column", "power_db"],
    );
    let mut summary = Csv::new(
        "pimsim-power-variation-summary/1",
        &[
            "distance_m",
            "chain_spread_db",
            "element_spread_db",
            "vertical_mean_db",
            "horizontal_mean_db",
        ],
    );
    for (di, r) in res.distances.iter().enumerate() {
        for (c, v) in r.chain_db.iter().enumerate() {
            chains.row(&[f(r.distance_m), c.to_string(), pol_name(res.polarization[c]), f(*v)]);
        }
        for (i, (e, v)) in layout.elements.iter().zip(&r.element_db).enumerate() {
            let (row, col) = e.grid_pos.map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
            elems.row(&[
                f(r.distance_m),
                i.to_string(),
                e.chain_id.to_string(),
                pol_name(Some(e.polarization())),
                row,
                col,
                f(*v),
            ]);
        }
        summary.row(&[
            f(r.distance_m),
            f(r.spread_db()),
            f(r.element_spread_db()),
            f(res.group_mean_db(di, Polarization::Vertical)),
            f(res.group_mean_db(di, Polarization::Horizontal)),
        ]);
        if let Some(grid) = layout.grid {
            for pol in [Polarization::Vertical, Polarization::Horizontal] {
                let mut cells = vec![vec![f64::NAN; grid.columns]; grid.rows];
                for (e, v) in layout.elements.iter().zip(&r.element_db) {
                    if let (Some((row, col)), true) = (e.grid_pos, e.polarization() == pol) {
                        cells[row][col] = *v;
                    }
                }
                let cols: Vec<String> = (0..grid.columns).map(|c| format!("col{c}")).collect();
                let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
                let mut heat = Csv::new("pimsim-heatmap/1", &col_refs);
                for row in &cells {
                    heat.row(&row.iter().map(|v| f(*v)).collect::<Vec<_>>());
                }
                let name = format!("heatmap_{}_{}.csv", distance_tag(r.distance_m), pol_name(Some(pol)));
                heat.write(dir, &name, &mut files)?;
            }
        }
    }
    chains.write(dir, "power_variation.csv", &mut files)?;
    elems.write(dir, "power_variation_elements.csv", &mut files)?;
    summary.write(dir, "power_variation_summary.csv", &mut files)?;
    Ok(files)
}
