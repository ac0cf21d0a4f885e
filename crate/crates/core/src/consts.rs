//! Physical constants and the n3-band carrier numbers used by the presets.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space wave impedance, ohms.
pub const FREE_SPACE_IMPEDANCE: f64 = 376.730;

/// Smallest cylindrical radius at which the dipole field is evaluated, metres.
pub const RHO_MIN: f64 = 1e-6;

/// Centre of the aggregated TX band (both component carriers), Hz.
pub const TX_CENTER_HZ: f64 = 1842.75e6;
/// Low component carrier, Hz.
pub const LOW_CC_HZ: f64 = 1819.0e6;
/// High component carrier, Hz.
pub const HIGH_CC_HZ: f64 = 1866.5e6;
/// Third-order product 2·f_low − f_high, Hz.
pub const IMD3_HZ: f64 = 1771.5e6;
/// Component carrier bandwidth, Hz.
pub const CC_BANDWIDTH_HZ: f64 = 5.0e6;
/// Baseband OFDM sample rate, Hz.
pub const BASE_RATE_HZ: f64 = 7.68e6;
/// Oversampling factor from baseband to the RF processing rate.
pub const OVERSAMPLE: usize = 16;
/// Training sequence length, RF-rate samples.
pub const TRAIN_SAMPLES: usize = 131_072;
/// Testing sequence length, RF-rate samples.
pub const TEST_SAMPLES: usize = 65_536;
/// Radiated power per TX chain, dBm.
pub const CHAIN_POWER_DBM: f64 = 37.0;
/// Antenna impedance, ohms.
pub const ANTENNA_IMPEDANCE: f64 = 50.0;

pub fn wavelength(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}
