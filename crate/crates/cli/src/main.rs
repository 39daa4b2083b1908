//! Command-line front end: validate configs, run scenarios, sweep parameter
//! grids and run the built-in verification suites.
//!
//! Exit codes: 0 success, 2 config parse/validation failure, 3 performance
//! envelope violation, 4 gradient flow stalled at a saddle, 5 non-finite
//! value during integration, 1 anything else.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use uvmsim::log::SimLog;
use uvmsim::{run_scenario, ScenarioConfig, SimError};

mod sweep;

/// Default output root when `--out` is relative: `UVMSIM_OUT` if set.
const OUT_ENV: &str = "UVMSIM_OUT";

#[derive(Parser)]
#[command(
    name = "uvmsim",
    about = "Cooperative underwater transport simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write log.csv, metrics.json and figure CSVs.
    Run(RunArgs),
    /// Validate a scenario config and report every violation.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a grid of overrides and collect one metrics row per cell.
    Sweep(sweep::SweepArgs),
    /// Run the built-in numerical verification suites.
    Verify {
        /// Seed of the randomized suites.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a template scenario config to stdout.
    Template {
        /// Emit the degenerate start-at-goal variant.
        #[arg(long)]
        trivial: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if absent.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted-key config overrides, e.g. `--set nav.gain=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn exit_code_for(err: &SimError) -> u8 {
    match err {
        SimError::InvalidConfig(_) => 2,
        SimError::EnvelopeViolation { .. } => 3,
        SimError::StuckAtSaddle { .. } => 4,
        SimError::NonFinite { .. } => 5,
        _ => 1,
    }
}

fn load_config(path: &Path) -> Result<ScenarioConfig, u8> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(2);
        }
    };
    match ScenarioConfig::from_json(&text) {
        Ok(cfg) => Ok(cfg),
        Err(e) => {
            eprintln!("error: {} does not parse: {e}", path.display());
            Err(2)
        }
    }
}

pub(crate) fn apply_overrides(cfg: &mut ScenarioConfig, overrides: &[String]) -> Result<(), u8> {
    for ov in overrides {
        let Some((key, value)) = ov.split_once('=') else {
            eprintln!("error: override `{ov}` is not KEY=VALUE");
            return Err(2);
        };
        if let Err(e) = cfg.apply_override(key.trim(), value.trim()) {
            eprintln!("error: {e}");
            return Err(2);
        }
    }
    Ok(())
}

pub(crate) fn resolve_out(out: &Path) -> PathBuf {
    if out.is_absolute() {
        return out.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(root) => PathBuf::from(root).join(out),
        None => out.to_path_buf(),
    }
}

pub(crate) fn write_run_outputs(dir: &Path, log: &SimLog) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("log.csv"), log.to_csv())?;
    fs::write(dir.join("metrics.json"), log.metrics().to_json_pretty())?;
    fs::write(dir.join("trajectory_xy.csv"), log.trajectory_csv())?;
    fs::write(dir.join("tracking_error.csv"), log.tracking_error_csv())?;
    fs::write(
        dir.join("estimation_envelope.csv"),
        log.estimation_envelope_csv(),
    )?;
    Ok(())
}

fn cmd_run(args: &RunArgs) -> u8 {
    let mut cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Err(code) = apply_overrides(&mut cfg, &args.overrides) {
        return code;
    }
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
    }
    let report = cfg.validate();
    if !report.is_valid() {
        eprintln!("invalid config:\n{report}");
        return 2;
    }
    match run_scenario(&cfg) {
        Ok(log) => {
            let dir = resolve_out(&args.out);
            if let Err(e) = write_run_outputs(&dir, &log) {
                eprintln!("error: {e:#}");
                return 1;
            }
            let metrics = log.metrics();
            println!(
                "run complete: {} steps, final position error {:.4} m, \
                 final orientation error {:.4} rad, min clearance {:.3} m",
                metrics.steps,
                metrics.final_position_error,
                metrics.final_orientation_error,
                metrics.min_clearance
            );
            println!("outputs in {}", dir.display());
            0
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            exit_code_for(&e)
        }
    }
}

fn cmd_validate(config: &Path) -> u8 {
    let cfg = match load_config(config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let report = cfg.validate();
    if report.is_valid() {
        println!("valid");
        0
    } else {
        println!("{report}");
        2
    }
}

fn cmd_verify(seed: u64) -> u8 {
    let results = uvmsim::verify::run_all(seed);
    let mut ok = true;
    for r in &results {
        println!("{}", r.line());
        ok &= r.passed;
    }
    if ok {
        0
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Validate { config } => cmd_validate(config),
        Command::Sweep(args) => sweep::cmd_sweep(args),
        Command::Verify { seed } => cmd_verify(*seed),
        Command::Template { trivial } => {
            let cfg = if *trivial {
                ScenarioConfig::trivial()
            } else {
                ScenarioConfig::nominal()
            };
            println!("{}", cfg.to_json_pretty());
            0
        }
    };
    ExitCode::from(code)
}
