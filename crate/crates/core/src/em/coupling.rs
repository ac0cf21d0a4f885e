use num_complex::Complex64;
use rayon::prelude::*;

use super::array::{element_field, feed_current, ArrayLayout};
use super::geometry::Point3;
use crate::error::{PimError, Result};

/// Per-chain complex coupling between the array terminals and a point
/// radiator with orientation `p`, at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingVector {
    pub h: Vec<Complex64>,
    pub frequency: f64,
}

pub fn check_orientation(p: Point3) -> Result<()> {
    if !p.is_finite() || (p.norm() - 1.0).abs() > 1e-9 {
        return Err(PimError::domain(format!("orientation must be a unit vector, |p| = {}", p.norm())));
    }
    Ok(())
}

/// Coupling of every element on its own (unit chain current, no chain sum).
/// Used for the per-antenna power maps; `coupling_vector` sums these per chain.
pub fn element_couplings(layout: &ArrayLayout, source_pos: Point3, p: Point3, freq_hz: f64) -> Result<Vec<Complex64>> {
    let i0 = feed_current(layout.chain_power, layout.impedance)?;
    element_couplings_with_current(layout, source_pos, p, freq_hz, i0)
}

/// [`element_couplings`] for an explicit chain current instead of the feed current.
pub fn element_couplings_with_current(
    layout: &ArrayLayout,
    source_pos: Point3,
    p: Point3,
    freq_hz: f64,
    i0: f64,
) -> Result<Vec<Complex64>> {
    check_orientation(p)?;
    layout
        .elements
        .iter()
        .enumerate()
        .map(|(i, e)| {
            element_field(e, Complex64::new(i0, 0.0), freq_hz, source_pos)
                .map(|f| f.dot_real(p))
                .map_err(|err| PimError::SingularElement {
                    element: i,
                    source: Box::new(err),
                })
        })
        .collect()
}

/// `h_n = I0 · (Σ_{e ∈ chain n} E_e) · p`. The same kernel serves the forward
/// (array → source) and backward (source → array) links.
pub fn coupling_vector(layout: &ArrayLayout, source_pos: Point3, p: Point3, freq_hz: f64) -> Result<CouplingVector> {
    let i0 = feed_current(layout.chain_power, layout.impedance)?;
    coupling_vector_with_current(layout, source_pos, p, freq_hz, i0)
}

/// [`coupling_vector`] for an explicit chain current.
pub fn coupling_vector_with_current(
    layout: &ArrayLayout,
    source_pos: Point3,
    p: Point3,
    freq_hz: f64,
    i0: f64,
) -> Result<CouplingVector> {
    let per_elem = element_couplings_with_current(layout, source_pos, p, freq_hz, i0)?;
    let mut h = vec![Complex64::new(0.0, 0.0); layout.n_chains];
    for (e, c) in layout.elements.iter().zip(per_elem) {
        h[e.chain_id] += c;
    }
    Ok(CouplingVector { h, frequency: freq_hz })
}

/// Coupling vectors over a frequency list, evaluated in parallel.
pub fn coupling_table(layout: &ArrayLayout, source_pos: Point3, p: Point3, freqs: &[f64]) -> Result<Vec<CouplingVector>> {
    freqs
        .par_iter()
        .map(|&f| coupling_vector(layout, source_pos, p, f))
        .collect()
}
