//! Configuration, scenario runs, the power-variation sweep and file export.

pub mod config;
pub mod io;
pub mod run;
pub mod sweep;

pub use config::{load_config, ScenarioConfig};
pub use run::{emit_plot_data, run, run_to_dir, RunOutput, RunReport};
pub use sweep::{sweep_power_variation, write_sweep, SweepResult};
