use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cf_peakon_cli::commands::{self, Format};
use cf_peakon_cli::{exit, render, CliError, RunConfig, WeylFile};

/// Calogero-Francoise peakon laboratory.
#[derive(Parser)]
#[command(name = "cfpeakon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Run configuration (key=value lines).
    #[arg(long)]
    config: PathBuf,
    /// Override t_end from the configuration.
    #[arg(long)]
    t_end: Option<f64>,
    /// Override rel_tol from the configuration.
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the flow and write trajectory and invariant-drift tables.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Report the trace invariants, spectral curve and sheet.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct positions and masses from a Weyl-series file.
    Invert {
        /// Weyl-series file.
        #[arg(long)]
        weyl: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Forward map, Weyl file, inversion and comparison.
    Roundtrip {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Two-peakon collision invariants and canonical form.
    Collide {
        #[command(flatten)]
        common: Common,
    },
}

fn format(f: FormatArg) -> Format {
    match f {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    }
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let path: &Path = &common.config;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let mut cfg = RunConfig::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if common.t_end.is_some() {
        cfg.t_end = common.t_end;
    }
    if common.rel_tol.is_some() {
        cfg.rel_tol = common.rel_tol;
    }
    cfg.integrator()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Simulate { common, out } => {
            let fmt = format(common.format);
            let report = commands::simulate(&load(&common)?, &out, fmt)?;
            print!("{}", render(&report, fmt));
            Ok(report.exit_code)
        }
        Command::Spectrum { common } => {
            let report = commands::spectrum(&load(&common)?)?;
            print!("{}", render(&report, format(common.format)));
            Ok(exit::SUCCESS)
        }
        Command::Invert { weyl, format: f } => {
            let report = commands::invert(&WeylFile::read(&weyl)?)?;
            print!("{}", render(&report, format(f)));
            Ok(exit::SUCCESS)
        }
        Command::Roundtrip { common, out } => {
            let report = commands::roundtrip(&load(&common)?, &out)?;
            print!("{}", render(&report, format(common.format)));
            Ok(if report.pass { exit::SUCCESS } else { exit::RECONSTRUCTION })
        }
        Command::Collide { common } => {
            let report = commands::collide(&load(&common)?)?;
            print!("{}", render(&report, format(common.format)));
            Ok(exit::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("cfpeakon: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
