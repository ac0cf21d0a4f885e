use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scenario::SimOutput;
use crate::error::{PimError, Result};
use crate::harness::io::write_atomic;
use crate::waveform::dump::write_dump;

/// Index of a persisted simulation, written next to the signal dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimManifest {
    pub scenario_hash: String,
    pub seed: u64,
    pub noise_power: f64,
    pub pim_over_noise_db: f64,
    pub pim_scale: f64,
    pub train_len: usize,
    pub test_len: usize,
    pub tx_files: Vec<String>,
    pub rx_files: Vec<String>,
}

/// Dumps TX and RX chains into `dir` and writes `manifest.json`.
pub fn write_sim(dir: &Path, sim: &SimOutput, manifest: &SimManifest) -> Result<SimManifest> {
    let mut m = manifest.clone();
    m.pim_scale = sim.pim_scale;
    m.tx_files.clear();
    m.rx_files.clear();
    for (i, s) in sim.tx.chains.iter().enumerate() {
        let name = format!("tx_{i:02}.iq");
        write_dump(&dir.join(&name), s)?;
        m.tx_files.push(name);
    }
    for (i, s) in sim.rx_chains.iter().enumerate() {
        let name = format!("rx_{i:02}.iq");
        write_dump(&dir.join(&name), s)?;
        m.rx_files.push(name);
    }
    let json = serde_json::to_vec_pretty(&m).map_err(|e| PimError::Parse(e.to_string()))?;
    write_atomic(&dir.join("manifest.json"), &json)?;
    Ok(m)
}
