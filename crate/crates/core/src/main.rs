//! `pvflock` command line.
//!
//! - `run [CONFIG]`: simulate a scenario, write the trace CSV, print metrics
//! - `metrics <TRACE>`: summarise an existing trace
//! - `gen-profile <KIND> <OUT>`: write a synthetic profile as `t_hours,value`

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pvflock::scenario::{synth_disturbances, synth_pv, Profile, ScenarioConfig};
use pvflock::sim::{compute_metrics, read_trace, run_simulation, write_trace};
use pvflock::{load_config, Result};

#[derive(Parser)]
#[command(
    name = "pvflock",
    version,
    about = "Model-free HVAC fleet control under PV load following"
)]
struct Cli {
    /// Scenario configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path (trace for `run`, profile for `gen-profile`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the initial temperatures
    #[arg(long, global = true, env = "PVFLOCK_SEED")]
    seed: Option<u64>,

    /// Suppress metrics output
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its trace
    Run {
        /// Configuration file (same as --config)
        #[arg(value_name = "CONFIG")]
        config_file: Option<PathBuf>,
    },
    /// Print metrics for a trace file
    Metrics { trace: PathBuf },
    /// Write a synthetic profile over the configured horizon
    GenProfile {
        kind: ProfileKindArg,
        #[arg(value_name = "OUT")]
        out_file: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileKindArg {
    /// PV generation (kW)
    Pv,
    /// Outside air temperature (°C)
    Outdoor,
    /// Solar heat gain (kW)
    Solar,
    /// Internal heat gains (kW)
    Internal,
}

fn scenario(path: Option<&Path>, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = match path {
        Some(p) => load_config(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config_file } => {
            let cfg = scenario(config_file.as_deref().or(cli.config.as_deref()), cli.seed)?;
            let trace = run_simulation(&cfg)?;
            let out = cli.out.unwrap_or_else(|| cfg.output.path.clone());
            write_trace(&trace, &out)?;
            if !cli.quiet {
                match compute_metrics(&trace, &cfg, cfg.transient_hours) {
                    Some(m) => println!("{m}"),
                    None => println!("steps=0"),
                }
            }
        }
        Command::Metrics { trace } => {
            let cfg = scenario(cli.config.as_deref(), cli.seed)?;
            let trace = read_trace(&trace)?;
            if !cli.quiet {
                match compute_metrics(&trace, &cfg, cfg.transient_hours) {
                    Some(m) => println!("{m}"),
                    None => println!("steps=0"),
                }
            }
        }
        Command::GenProfile { kind, out_file } => {
            let cfg = scenario(cli.config.as_deref(), cli.seed)?;
            let out = out_file
                .or(cli.out)
                .ok_or_else(|| pvflock::Error::Input("gen-profile needs an output path".into()))?;
            let d = cfg.disturbance;
            let value = |t: f64| match kind {
                ProfileKindArg::Pv => synth_pv(t, cfg.pv.peak),
                ProfileKindArg::Outdoor => synth_disturbances(t, &d).d1,
                ProfileKindArg::Solar => synth_disturbances(t, &d).d2,
                ProfileKindArg::Internal => synth_disturbances(t, &d).d3,
            };
            let profile = Profile::sample(0.0, cfg.fleet.sample_dt, cfg.steps() + 1, value)?;
            profile.write_csv(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
