//! OFDM generation, precoding, carrier composition at the RF rate, band
//! extraction, noise and spectral estimates.

pub mod carrier;
pub mod dump;
pub mod noise;
pub mod ofdm;
pub mod precode;
pub mod psd;
pub mod signal;

pub use carrier::{bandlimit, compose_rf, extract_band, freq_shift, upsample, CarrierPlan};
pub use noise::{awgn, awgn_seeded};
pub use ofdm::{gen_ofdm, gen_ofdm_keyed, Modulation, OfdmConfig};
pub use precode::{dft_beam, precode, PrecoderConfig};
pub use psd::{psd, Psd};
pub use signal::{correlation, mean_power, BasebandSignal};
