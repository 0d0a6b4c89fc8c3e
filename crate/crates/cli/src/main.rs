use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stbc_sim::config::parse_config_file;
use stbc_sim::presets::{preset, PRESET_NAMES};
use stbc_sim::runner::{run_configs, RunOptions};
use stbc_sim::{code_from_args, error_category, exit_code};

/// Link-level simulator for space-time block coded MIMO systems with SVD
/// precoding and ML / MMSE-ML / complex-valued RBF receivers.
#[derive(Parser)]
#[command(name = "stbc-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a config file and write CSVs plus a manifest.
    Run {
        /// Preset name (see `stbc-sim presets`).
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Flat key/value config file describing a single experiment.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed override for every configuration in the run.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for CSVs and the manifest.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Worker thread count (default: STBC_SIM_WORKERS or all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Per-field override, repeatable: --set key=value.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Print a code matrix as a grid of +-s[k] / +-s[k]* tokens.
    ExportCode {
        /// qostbc, ostbc_r12 or alamouti.
        #[arg(long)]
        code: String,
        /// Transmit antenna count.
        #[arg(long, default_value_t = 4)]
        ntx: usize,
    },
    /// List available presets.
    Presets,
}

fn default_workers() -> usize {
    std::env::var("STBC_SIM_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: category={}: {e}", error_category(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn dispatch(cli: Cli) -> stbc_core::Result<()> {
    match cli.command {
        Command::Run {
            preset: preset_name,
            config,
            seed,
            out_dir,
            workers,
            set,
        } => {
            let configs = match (&preset_name, &config) {
                (Some(name), None) => preset(name)?,
                (None, Some(path)) => vec![parse_config_file(path)?],
                _ => {
                    return Err(stbc_core::Error::Usage(
                        "pass exactly one of --preset or --config".into(),
                    ))
                }
            };
            let overrides = set
                .iter()
                .map(|kv| {
                    kv.split_once('=')
                        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                        .ok_or_else(|| {
                            stbc_core::Error::Usage(format!("--set expects key=value, got `{kv}`"))
                        })
                })
                .collect::<stbc_core::Result<Vec<_>>>()?;
            let opts = RunOptions {
                out_dir,
                workers: workers.unwrap_or_else(default_workers),
                seed,
                overrides,
            };
            let report = run_configs(&configs, &opts)?;
            for (label, summary) in &report.summaries {
                println!("== {label}");
                print!("{summary}");
            }
            println!("wrote {} files:", report.files.len());
            for f in &report.files {
                println!("  {}", f.display());
            }
            Ok(())
        }
        Command::ExportCode { code, ntx } => {
            let c = code_from_args(&code, ntx)?;
            let (ns, p) = c.rate();
            print!("{}", c.render_text());
            eprintln!("rate = {ns}/{p}");
            Ok(())
        }
        Command::Presets => {
            for (name, description) in PRESET_NAMES {
                println!("{name:10} {description}");
            }
            Ok(())
        }
    }
}
