//! Closed-form field of a thin finite dipole with a sinusoidal current
//! distribution, expressed in cylindrical coordinates about the dipole axis.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::geometry::{Frame, Point3};
use crate::consts::{FREE_SPACE_IMPEDANCE, RHO_MIN, SPEED_OF_LIGHT};
use crate::error::{PimError, Result};

pub fn wavenumber(freq_hz: f64) -> f64 {
    2.0 * PI * freq_hz / SPEED_OF_LIGHT
}

#[inline]
fn green(k: f64, r: f64) -> Complex64 {
    Complex64::from_polar(1.0 / r, -k * r)
}

/// Field (E_ρ, E_φ, E_z) of a z-directed dipole of length `length` centred at
/// the origin, fed with complex current `current`, at the local point `obs`.
pub fn dipole_field_cyl(
    length: f64,
    current: Complex64,
    freq_hz: f64,
    obs: Point3,
) -> Result<super::FieldVector> {
    if !(freq_hz > 0.0) || !freq_hz.is_finite() {
        return Err(PimError::domain(format!("frequency must be positive, got {freq_hz}")));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(PimError::domain(format!("dipole length must be positive, got {length}")));
    }
    let rho = obs.rho();
    if !(rho > RHO_MIN) {
        return Err(PimError::Singular { rho });
    }
    let z = obs.z;
    let k = wavenumber(freq_hz);
    let dz_minus = z - length / 2.0;
    let dz_plus = z + length / 2.0;
    let r0 = rho.hypot(z);
    let r1 = rho.hypot(dz_minus);
    let r2 = rho.hypot(dz_plus);
    let g0 = green(k, r0);
    let g1 = green(k, r1);
    let g2 = green(k, r2);
    let cos_half = (k * length / 2.0).cos();

    let j = Complex64::new(0.0, 1.0);
    let amp = current * (FREE_SPACE_IMPEDANCE * length / (4.0 * PI));
    let e_rho = j * amp / rho * (g1 * dz_minus + g2 * dz_plus - g0 * (2.0 * z * cos_half));
    let e_z = -j * amp * (g1 + g2 - g0 * (2.0 * cos_half));

    Ok(super::FieldVector {
        components: [e_rho, Complex64::new(0.0, 0.0), e_z],
        frame: Frame::CylindricalLocal,
    })
}
