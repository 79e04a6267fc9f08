mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, VariantSpec};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "kerrfocus",
    version,
    about = "Interference focusing on a two-user nonlinear fiber channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select ring sets and print powers and filter banks.
    Rings(Common),
    /// Compare the discrete-time model against the waveform oracle.
    Validate(Common),
    /// Run one seeded block through both receivers.
    Simulate(Common),
    /// Estimate rates over an SNR grid and fit the pre-log.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [file: io.out_dir, then $KERRFOCUS_OUT, then ./out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Waveform samples per symbol for `validate`.
    #[arg(long)]
    os: Option<usize>,
    #[arg(long, value_enum)]
    variant: Option<VariantSpec>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            os: self.os,
            variant: self.variant,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, cmd) = match &cli.command {
        Command::Rings(c) => (c, "rings"),
        Command::Validate(c) => (c, "validate"),
        Command::Simulate(c) => (c, "simulate"),
        Command::Sweep(c) => (c, "sweep"),
    };
    let resolved = config::load(&common.config, &common.overrides())?;
    let (outputs, pending) = match cmd {
        "rings" => (commands::rings(&resolved)?, None),
        "validate" => commands::validate(&resolved)?,
        "simulate" => (commands::simulate_cmd(&resolved)?, None),
        _ => (commands::sweep_cmd(&resolved)?, None),
    };
    for path in outputs.commit(&resolved.out_dir)? {
        println!("wrote {}", path.display());
    }
    pending.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kerrfocus: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
