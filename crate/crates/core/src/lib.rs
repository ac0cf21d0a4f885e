//! Simulation of external passive intermodulation in FDD MIMO arrays and a
//! channel-coefficients canceller for it.

pub mod canceller;
pub mod consts;
pub mod em;
pub mod error;
pub mod fft;
pub mod harness;
pub mod pim;
pub mod rng;
pub mod waveform;

pub use error::{PimError, Result};
