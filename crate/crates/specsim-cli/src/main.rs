use std::path::PathBuf;

use anyhow::bail;
use clap::{Parser, Subcommand};
use specsim_cli::preset::{run_config, run_preset, Preset};

#[derive(Parser)]
#[command(
    name = "specsim",
    about = "Repeated spectrum auction simulator: VCG allocation with truthful, shaded, and LLM-advised bidders",
    after_help = "Live LLM runs read these environment variables:\n  \
        SPECSIM_LLM_BASE_URL  chat-completion endpoint base URL (required with --live-llm)\n  \
        SPECSIM_LLM_API_KEY   bearer token (optional)\n  \
        SPECSIM_LLM_MODEL     model name override (default: gpt-5-mini)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset experiment or a scenario config file.
    Run {
        /// Scenario config (TOML); mutually exclusive with --preset.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Preset experiment to run (default: refill).
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Override the scenario RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for CSVs and the run manifest.
        #[arg(long)]
        out: PathBuf,
        /// Query a live chat-completion endpoint for LLM bids instead of
        /// the preset's deterministic script.
        #[arg(long)]
        live_llm: bool,
    },
    /// Print the default scenario config as TOML.
    PrintConfig,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            preset,
            seed,
            out,
            live_llm,
        } => {
            let outcome = match (config, preset) {
                (Some(path), None) => {
                    let mut scenario = specsim_cli::load_config(&path)?;
                    if let Some(seed) = seed {
                        scenario.rng_seed = seed;
                    }
                    run_config(&scenario, &out, live_llm)?
                }
                (None, preset) => {
                    run_preset(preset.unwrap_or(Preset::Refill), seed, &out, live_llm)?
                }
                (Some(_), Some(_)) => bail!("--config and --preset are mutually exclusive"),
            };
            for (label, result) in &outcome.results {
                println!(
                    "{label}: {} episodes, eta {:.3}, BS utility {:.4}",
                    result.episodes.len(),
                    result.metrics.eta,
                    result.metrics.bs_accumulated_utility
                );
            }
            println!("outputs written to {}", out.display());
        }
        Command::PrintConfig => {
            print!("{}", specsim_cli::config::default_config_toml());
        }
    }
    Ok(())
}
