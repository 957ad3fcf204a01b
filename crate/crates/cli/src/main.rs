use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lsr::commands::{self, Overrides};
use lsr::config::ChainFormat;
use lsr_core::model::Family;
use lsr_core::sampler::Submodel;

#[derive(Parser)]
#[command(name = "lsr", version, about = "Longitudinal social relations model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a panel from a design file.
    Simulate {
        #[arg(long)]
        design: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one model and write its chain and summaries.
    Fit {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        model: Option<Submodel>,
        #[arg(long)]
        family: Option<Family>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare models by holdout prediction error.
    Predict {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a saved chain.
    Summarize {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a chain between the text and binary formats.
    Convert {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, value_parser = parse_format)]
        to: ChainFormat,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_format(s: &str) -> Result<ChainFormat, String> {
    s.parse().map_err(|e: lsr::Error| e.to_string())
}

fn run(cli: Cli) -> lsr::Result<()> {
    match cli.command {
        Command::Simulate { design, seed, out } => {
            commands::simulate(&design, seed, &out)?;
        }
        Command::Fit { config, data, seed, model, family, out } => {
            let o = Overrides { seed, model, family, out };
            let c = commands::load_config(config.as_deref(), &o)?;
            let chain = commands::fit_panel(&c, &data)?;
            eprintln!("kept {} draws", chain.len());
        }
        Command::Predict { config, data, seed, out } => {
            let o = Overrides { seed, out, ..Default::default() };
            let c = commands::load_config(config.as_deref(), &o)?;
            let rows = commands::predict_file(&c, &data)?;
            print!("{}", commands::format_mse(&rows));
        }
        Command::Summarize { chain, out } => commands::summarize(&chain, &out)?,
        Command::Convert { chain, to, out } => commands::convert(&chain, &out, to)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
