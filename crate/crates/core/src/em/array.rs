use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dipole::dipole_field_cyl;
use super::geometry::{FieldVector, Point3, Rotation};
use crate::consts::{dbm_to_watts, wavelength, ANTENNA_IMPEDANCE, CHAIN_POWER_DBM, TX_CENTER_HZ};
use crate::error::{PimError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarization {
    Vertical,
    Horizontal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DipoleElement {
    pub position: Point3,
    pub rotation: Rotation,
    pub length: f64,
    /// Amplitude share of the chain current (unit-cell power split).
    pub amplitude_scale: f64,
    pub phase_shift: f64,
    pub chain_id: usize,
    /// `(row, column)` on the layout grid, when the layout came from a grid.
    pub grid_pos: Option<(usize, usize)>,
}

impl DipoleElement {
    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() {
            return Err(PimError::domain("element position must be finite"));
        }
        if !self.rotation.is_proper(1e-12) {
            return Err(PimError::domain("element rotation must be proper orthonormal"));
        }
        if !(self.length > 0.0) {
            return Err(PimError::domain("element length must be positive"));
        }
        if !(self.amplitude_scale > 0.0 && self.amplitude_scale <= 1.0) {
            return Err(PimError::domain("amplitude_scale must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Excitation factor applied on top of the chain current.
    pub fn weight(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude_scale, self.phase_shift)
    }

    pub fn polarization(&self) -> Polarization {
        let a = self.rotation.axis();
        if a.y.abs() >= a.x.abs() {
            Polarization::Vertical
        } else {
            Polarization::Horizontal
        }
    }
}

/// Field of one element fed by chain current `current`, in the global frame.
///
/// Global point → local point through `Rᵀ`, closed-form cylindrical field,
/// cylindrical → local cartesian, then back through `R`.
pub fn element_field(elem: &DipoleElement, current: Complex64, freq_hz: f64, obs: Point3) -> Result<FieldVector> {
    let rot_inv = elem.rotation.transpose();
    let local = rot_inv.apply(obs - elem.position);
    let cyl = dipole_field_cyl(elem.length, current * elem.weight(), freq_hz, local)?;
    cyl.cyl_to_cartesian(local)?.local_to_global(&elem.rotation)
}

/// Grid shape the standard layouts are built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridShape {
    pub rows: usize,
    pub columns: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout {
    pub elements: Vec<DipoleElement>,
    pub n_chains: usize,
    /// Shared antenna impedance, ohms.
    pub impedance: f64,
    /// Radiated power per chain, watts.
    pub chain_power: f64,
    pub grid: Option<GridShape>,
}

/// Parameters of a dual-polarized rectangular grid in the z = 0 plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub columns: usize,
    pub rows: usize,
    /// Rows per unit cell; each chain drives one vertical group of this size.
    pub cell_rows: usize,
    pub spacing_m: f64,
    pub dipole_length_m: f64,
    #[serde(default = "default_power_dbm")]
    pub chain_power_dbm: f64,
    #[serde(default = "default_impedance")]
    pub impedance_ohm: f64,
    /// Progressive phase per row inside a unit cell, radians (electrical tilt).
    #[serde(default)]
    pub tilt_phase_rad: f64,
}

fn default_power_dbm() -> f64 {
    CHAIN_POWER_DBM
}

fn default_impedance() -> f64 {
    ANTENNA_IMPEDANCE
}

impl GridSpec {
    /// Half-wavelength dipoles on a half-wavelength grid at the TX centre.
    pub fn half_wave(columns: usize, rows: usize, cell_rows: usize) -> Self {
        let half = wavelength(TX_CENTER_HZ) / 2.0;
        Self {
            columns,
            rows,
            cell_rows,
            spacing_m: half,
            dipole_length_m: half,
            chain_power_dbm: CHAIN_POWER_DBM,
            impedance_ohm: ANTENNA_IMPEDANCE,
            tilt_phase_rad: 0.0,
        }
    }

    /// 16 chains: 4 × 8 crossed-dipole positions, unit cells of 4.
    pub fn paper_16t16r() -> Self {
        Self::half_wave(4, 8, 4)
    }

    /// 2 chains: a single column unit cell of 4 crossed dipoles.
    pub fn two_chain() -> Self {
        Self::half_wave(1, 4, 4)
    }
}

impl ArrayLayout {
    pub fn new(elements: Vec<DipoleElement>, n_chains: usize, impedance: f64, chain_power: f64) -> Result<Self> {
        let layout = Self {
            elements,
            n_chains,
            impedance,
            chain_power,
            grid: None,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.impedance > 0.0) {
            return Err(PimError::domain("impedance must be positive"));
        }
        if !(self.chain_power >= 0.0) {
            return Err(PimError::domain("chain power must be non-negative"));
        }
        let mut power = vec![0.0; self.n_chains];
        let mut count = vec![0usize; self.n_chains];
        for (i, e) in self.elements.iter().enumerate() {
            e.validate().map_err(|err| PimError::domain(format!("element {i}: {err}")))?;
            if e.chain_id >= self.n_chains {
                return Err(PimError::domain(format!(
                    "element {i} has chain_id {} outside [0, {})",
                    e.chain_id, self.n_chains
                )));
            }
            power[e.chain_id] += e.amplitude_scale * e.amplitude_scale;
            count[e.chain_id] += 1;
        }
        for (c, (&n, &p)) in count.iter().zip(&power).enumerate() {
            if n == 0 {
                return Err(PimError::domain(format!("chain {c} has no elements")));
            }
            if (p - 1.0).abs() > 1e-9 {
                return Err(PimError::domain(format!("chain {c} amplitude split sums to {p}, expected 1")));
            }
        }
        Ok(())
    }

    /// Dual-polarized grid: even chains drive y-directed (vertical) dipoles,
    /// odd chains the co-located x-directed (horizontal) ones.
    pub fn dual_polarized_grid(spec: &GridSpec) -> Result<Self> {
        if spec.columns == 0 || spec.rows == 0 || spec.cell_rows == 0 {
            return Err(PimError::config("array", "grid dimensions must be positive"));
        }
        if spec.rows % spec.cell_rows != 0 {
            return Err(PimError::config("array.cell_rows", "rows must be a multiple of cell_rows"));
        }
        let groups = spec.rows / spec.cell_rows;
        let vertical = Rotation::z_to(Point3::new(0.0, 1.0, 0.0))?;
        let horizontal = Rotation::z_to(Point3::new(1.0, 0.0, 0.0))?;
        let amp = 1.0 / (spec.cell_rows as f64).sqrt();
        let x0 = (spec.columns as f64 - 1.0) / 2.0;
        let y0 = (spec.rows as f64 - 1.0) / 2.0;
        let mut elements = Vec::with_capacity(spec.columns * spec.rows * 2);
        for col in 0..spec.columns {
            for row in 0..spec.rows {
                let group = row / spec.cell_rows;
                let position = Point3::new(
                    (col as f64 - x0) * spec.spacing_m,
                    (row as f64 - y0) * spec.spacing_m,
                    0.0,
                );
                let base_chain = 2 * (col * groups + group);
                let phase = spec.tilt_phase_rad * (row % spec.cell_rows) as f64;
                for (pol, rot) in [(0, vertical), (1, horizontal)] {
                    elements.push(DipoleElement {
                        position,
                        rotation: rot,
                        length: spec.dipole_length_m,
                        amplitude_scale: amp,
                        phase_shift: phase,
                        chain_id: base_chain + pol,
                        grid_pos: Some((row, col)),
                    });
                }
            }
        }
        let mut layout = Self::new(
            elements,
            2 * spec.columns * groups,
            spec.impedance_ohm,
            dbm_to_watts(spec.chain_power_dbm),
        )?;
        layout.grid = Some(GridShape {
            rows: spec.rows,
            columns: spec.columns,
        });
        Ok(layout)
    }

    pub fn chain_polarization(&self, chain: usize) -> Option<Polarization> {
        self.elements.iter().find(|e| e.chain_id == chain).map(|e| e.polarization())
    }
}

/// Feed current from radiated power and impedance, `I = sqrt(P / Z)`.
pub fn feed_current(power_w: f64, impedance: f64) -> Result<f64> {
    if !(impedance > 0.0) {
        return Err(PimError::domain(format!("impedance must be positive, got {impedance}")));
    }
    if !(power_w >= 0.0) {
        return Err(PimError::domain(format!("power must be non-negative, got {power_w}")));
    }
    Ok((power_w / impedance).sqrt())
}

/// Superposition of all element fields, each element driven by its chain's current.
pub fn array_field(layout: &ArrayLayout, chain_currents: &[Complex64], freq_hz: f64, obs: Point3) -> Result<FieldVector> {
    if chain_currents.len() != layout.n_chains {
        return Err(PimError::dim(format!(
            "{} chain currents for {} chains",
            chain_currents.len(),
            layout.n_chains
        )));
    }
    let mut total = FieldVector::zero_global();
    for (i, e) in layout.elements.iter().enumerate() {
        let f = element_field(e, chain_currents[e.chain_id], freq_hz, obs).map_err(|err| PimError::SingularElement {
            element: i,
            source: Box::new(err),
        })?;
        total = total.checked_add(&f)?;
    }
    Ok(total)
}
