//! Point-source PIM generation: forward coupling, nonlinearity, backward
//! coupling into the RX band and noise-relative level setting.

pub mod channel;
pub mod gmp;
pub mod manifest;
pub mod scenario;

pub use channel::{apply_backward, apply_forward, ChannelMode, ChannelModel, DipoleChannel, ElementChannel, FixedChannel, FnChannel, Link};
pub use gmp::{apply_gmp, GmpModel, GmpTap};
pub use scenario::{
    backpropagate, backpropagate_with, backward_channel, excitation, forward_channel, generate_tx, normalize_pim, run_scenario, run_scenario_with,
    rx_noise, simulate_pim, sum_sources, PimScenario, PimSource, SimOutput, TxSignals,
};
