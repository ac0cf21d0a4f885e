use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pimsim::harness::{self, load_config, ScenarioConfig};

#[derive(Parser, Debug)]
#[command(version, about = "External PIM simulation and cancellation for FDD arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a scenario, run the canceller and export the results.
    Run(Common),
    /// Near-field power-variation sweep over source distance.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Source distances in metres; defaults to `sweep.distances_m`.
        #[arg(long, value_delimiter = ',')]
        distances_m: Option<Vec<f64>>,
    },
    /// Print the resolved configuration as TOML.
    DumpConfig(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: paper-scenario-1, paper-scenario-2, desk-scenario-1, desk-scenario-2.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides both scenario and canceller seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; falls back to `output.dir` in the config.
    #[arg(long, env = "PIMSIM_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let cfg = match (&self.config, &self.preset) {
            (Some(path), _) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
            (None, Some(name)) => ScenarioConfig::preset(name)?,
            (None, None) => bail!("pass --config or --preset"),
        };
        let cfg = match self.seed {
            Some(s) => cfg.with_seed(s),
            None => cfg,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ScenarioConfig) -> Result<PathBuf> {
        match self.out_dir.clone().or_else(|| cfg.output.dir.clone()) {
            Some(d) => Ok(d),
            None => bail!("no output directory: pass --out-dir, set PIMSIM_OUT_DIR or output.dir"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.load()?;
            let dir = common.out_dir(&cfg)?;
            log::info!("running {} into {}", cfg.preset.as_deref().unwrap_or("config"), dir.display());
            let report = harness::run_to_dir(&cfg, &dir)?;
            print!("{}", harness::run::summary(&report));
            println!("report: {}", dir.join("report.json").display());
        }
        Command::Sweep { common, distances_m } => {
            let cfg = common.load()?;
            let dir = common.out_dir(&cfg)?;
            let distances = distances_m.unwrap_or_else(|| cfg.sweep.distances_m.clone());
            let res = harness::sweep_power_variation(&cfg, &distances)?;
            let files = harness::write_sweep(&cfg, &res, &dir)?;
            println!("distance_m  chain_spread_db  element_spread_db");
            for d in &res.distances {
                println!("{:>10}  {:>15.2}  {:>17.2}", d.distance_m, d.spread_db(), d.element_spread_db());
            }
            println!("{} files in {}", files.len(), dir.display());
        }
        Command::DumpConfig(common) => {
            let cfg = common.load()?;
            print!("{}", cfg.to_toml_string()?);
        }
    }
    Ok(())
}
