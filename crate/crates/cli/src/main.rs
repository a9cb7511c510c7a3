//! `specbounds`: lower and upper eigenvalue bounds for one-electron molecules.

mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use spectral_bounds::quadrature::QuadSettings;
use spectral_bounds::tables::{h2_row, h3_row, second_level_row, sweep, H2_R, H3_R};

use config::{Format, RunConfig};
use output::{Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{message}")]
    Numerical { geometry: usize, j_cut: Option<u32>, message: String },
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical { .. } => 3,
        }
    }

    fn record(&self) -> serde_json::Value {
        match self {
            CliError::Config(m) => json!({"error": {"kind": "config", "message": m}}),
            CliError::Io(m) => json!({"error": {"kind": "io", "message": m}}),
            CliError::Numerical { geometry, j_cut, message } => json!({
                "error": {"kind": "numerical", "message": message, "geometry": geometry, "j_cut": j_cut}
            }),
        }
    }
}

#[derive(Parser)]
#[command(name = "specbounds", version, about = "Rigorous eigenvalue bounds for one-electron molecules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a JSON run configuration.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.path`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `output.format`.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Recompute one of the standard tables.
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        table: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn bounds(config: &Path, out: Option<PathBuf>, format: Option<FormatArg>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
    let config = RunConfig::parse(&text).map_err(CliError::Config)?;
    let table = run::Plan::new(&config)?.run()?;
    let format = match format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => config.output.format,
    };
    let body = match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    write_out(out.or(config.output.path).as_deref(), &body)
}

fn numerical(e: spectral_bounds::Error) -> CliError {
    CliError::Numerical { geometry: 0, j_cut: None, message: e.to_string() }
}

fn reproduce(table: u8, out: Option<PathBuf>) -> Result<(), CliError> {
    let q = QuadSettings::default();
    let header = |cols: &[&str]| cols.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let table = match table {
        1 => Table {
            header: header(&["R", "lb_j1", "lb_j2", "lb_j3", "mu1_ub", "mu1_lb"]),
            rows: sweep(&H2_R, |r| h2_row(r, &q))
                .map_err(numerical)?
                .into_iter()
                .map(|row| {
                    let mut cells = vec![Cell::Num(row.r)];
                    cells.extend(row.lb.map(Cell::Num));
                    cells.extend([Cell::Num(row.mu1_ub), Cell::Num(row.mu1_lb)]);
                    cells
                })
                .collect(),
        },
        2 => Table {
            header: header(&["R", "lb_j1", "lb_j2", "lb_j3", "mu1_ub"]),
            rows: sweep(&H3_R, |r| h3_row(r, &q))
                .map_err(numerical)?
                .into_iter()
                .map(|row| {
                    let mut cells = vec![Cell::Num(row.r)];
                    cells.extend(row.lb.map(Cell::Num));
                    cells.push(Cell::Num(row.mu1_ub));
                    cells
                })
                .collect(),
        },
        _ => Table {
            header: header(&["R", "mu2_lb", "mu2_lb_x"]),
            rows: sweep(&H2_R, |r| second_level_row(r, &q))
                .map_err(numerical)?
                .into_iter()
                .map(|row| vec![Cell::Num(row.r), Cell::Num(row.mu2_lb), Cell::Num(row.mu2_lb_x)])
                .collect(),
        },
    };
    write_out(out.as_deref(), &table.to_fixed_csv(4))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bounds { config, out, format } => bounds(&config, out, format),
        Command::Reproduce { table, out } => reproduce(table, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code())
        }
    }
}
