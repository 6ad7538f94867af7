//! `qpt` — configuration-driven experiment runner for the Rabi-transition
//! toolkit.
//!
//! Exit codes: 0 success, 2 configuration error, 3 run finished with failed
//! points (their rows carry the error in the `status` column).

mod config;
mod presets;
mod runner;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{validate, ExperimentConfig, IssueLevel};

#[derive(Parser)]
#[command(
    name = "qpt",
    about = "Quantum Rabi transition experiments: sweeps, quenches, ion simulations, scaling analysis",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment and write a result table plus metadata.
    Run(ConfigArgs),
    /// Check a configuration and report warnings/errors without running.
    Validate(ConfigArgs),
    /// Merge result tables produced under the same numerical policy.
    Merge(MergeArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct ConfigArgs {
    /// Built-in preset name (see `qpt presets`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Configuration file (TOML; missing keys take defaults).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override single keys, e.g. --set r_list=50,400 --set eta=0.05
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads (overrides QPT_WORKERS and the config; affects wall
    /// time only, never results).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the full paper-scale grid where a preset ships a reduced one.
    #[arg(long)]
    full: bool,
}

#[derive(Args)]
struct MergeArgs {
    /// Output CSV path (a .meta sidecar is written next to it).
    #[arg(long)]
    out: PathBuf,
    /// Input CSV tables (each needs its .meta sidecar).
    inputs: Vec<PathBuf>,
}

fn build_config(args: &ConfigArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(name), None) => presets::preset(name, args.full)
            .ok_or_else(|| format!("unknown preset '{name}'; see `qpt presets`"))?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ExperimentConfig::from_toml(&text)?
        }
        (None, None) => ExperimentConfig::default(),
        (Some(_), Some(_)) => unreachable!("clap forbids this combination"),
    };
    if args.full {
        cfg.full = true;
        // rebuild preset grids in full form happened above; for config files
        // the flag is recorded for downstream tooling
    }
    for expr in &args.set {
        cfg.apply_set(expr)?;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.display().to_string();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = match build_config(&args) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match runner::execute(&cfg) {
                Ok(outcome) if outcome.failed_points == 0 => ExitCode::SUCCESS,
                Ok(outcome) => {
                    eprintln!(
                        "{} point(s) failed; see the status column in {}",
                        outcome.failed_points,
                        outcome.csv_path.display()
                    );
                    ExitCode::from(3)
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Validate(args) => {
            let cfg = match build_config(&args) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let issues = validate(&cfg);
            if issues.is_empty() {
                println!("configuration ok ({} points expected)", grid_size(&cfg));
            }
            for issue in &issues {
                match issue.level {
                    IssueLevel::Warning => println!("warning: {}", issue.message),
                    IssueLevel::Error => println!("error: {}", issue.message),
                }
            }
            ExitCode::SUCCESS
        }
        Command::Merge(args) => {
            if args.inputs.is_empty() {
                eprintln!("error: merge needs input tables");
                return ExitCode::from(2);
            }
            match table::merge(&args.inputs) {
                Ok((merged, sidecar)) => {
                    if let Err(e) = merged
                        .write_csv(&args.out)
                        .and_then(|_| sidecar.write(&table::sidecar_path(&args.out)))
                    {
                        eprintln!("error: {e:#}");
                        return ExitCode::from(2);
                    }
                    println!("wrote {} ({} rows)", args.out.display(), merged.rows.len());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Presets => {
            for name in presets::PRESET_NAMES {
                let cfg = presets::preset(name, false).expect("preset exists");
                println!("{name:8} {:14} {} points", cfg.kind.name(), grid_size(&cfg));
            }
            ExitCode::SUCCESS
        }
    }
}

fn grid_size(cfg: &ExperimentConfig) -> usize {
    use config::ExperimentKind as K;
    let g = if cfg.g_final_list.is_empty() {
        cfg.g_list.len()
    } else {
        cfg.g_final_list.len()
    };
    match cfg.kind {
        K::GsSweep => cfg.r_list.len() * cfg.g_list.len(),
        K::QuenchSweep | K::NoisyQuench | K::IonSim => {
            cfg.r_list.len() * g * cfg.tau_q_list.len()
        }
        K::Adiabaticity => cfg.r_list.len() * cfg.tau_q_list.len(),
        K::Collapse => cfg.inputs.len(),
        K::CompileLasers => 1,
    }
}
