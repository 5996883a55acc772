use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lattice_imaging::scenario::{list_presets, run_config, run_preset, Overrides, RunSummary};
use lattice_imaging::{Error, Normalization};

/// Diffraction-limited images of spin chains in optical lattices.
#[derive(Debug, Parser)]
#[command(name = "lattice-imaging", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Simpson panels for the centroid ξ integral.
    #[arg(long, global = true, value_name = "N")]
    panels: Option<usize>,

    /// Grid samples per axis.
    #[arg(long, global = true, value_name = "N")]
    samples: Option<usize>,

    #[arg(long, global = true, value_enum)]
    normalization: Option<NormArg>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file.
    Run { config: PathBuf },
    /// Run a built-in scenario set.
    Preset {
        name: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List built-in scenario sets.
    ListPresets,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    Raw,
    MaxOne,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Raw => Normalization::Raw,
            NormArg::MaxOne => Normalization::MaxOne,
        }
    }
}

fn report(result: Result<RunSummary, Error>) -> ExitCode {
    match result {
        Ok(summary) => {
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            for f in &summary.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        panels: cli.panels,
        samples: cli.samples,
        normalization: cli.normalization.map(Into::into),
    };
    match cli.command {
        Command::Run { config } => report(run_config(&config, &overrides)),
        Command::Preset { name, out } => report(run_preset(&name, &out, &overrides)),
        Command::ListPresets => {
            for (name, description) in list_presets() {
                println!("{name:<6} {description}");
            }
            ExitCode::SUCCESS
        }
    }
}
