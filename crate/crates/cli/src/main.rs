//! `duplex`: batch driver for kernel dumps, identity verification and noise cascades.
//!
//! Exit codes: 0 when every check passes, 1 when an identity misses its tolerance,
//! 2 for configuration or input errors (diagnostic as one JSON line on stderr).

mod commands;
mod config;
mod error;
mod output;
mod suite;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::Overrides;
use duplex::UnitsMode;
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "duplex", version, about = "Dual-field Green kernels, boundary identities and noise budgets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump planar and 3D kernels over the configured grids.
    Green(Common),
    /// Run the identity suite and write reports.
    Verify(Common),
    /// Chain the configured stages into a transfer and noise budget.
    Cascade(Common),
    /// Tabulate susceptibilities, indices and passivity of every material.
    MaterialInfo(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Units {
    Dimensionless,
    Si,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative tolerance applied to every identity; overrides the file.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "DUPLEX_THREADS")]
    threads: Option<usize>,
    /// Comma-separated identity selection; overrides the file.
    #[arg(long, value_delimiter = ',')]
    identities: Option<Vec<String>>,
    #[arg(long, value_enum)]
    units: Option<Units>,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (common, which) = match &cli.command {
        Command::Green(c) => (c, "green"),
        Command::Verify(c) => (c, "verify"),
        Command::Cascade(c) => (c, "cascade"),
        Command::MaterialInfo(c) => (c, "material-info"),
    };
    if let Some(t) = common.tol {
        if !(t > 0.0) {
            return Err(CliError::Config(format!("--tol must be positive, got {t}")));
        }
    }
    let over = Overrides {
        out: common.out.clone(),
        tol: common.tol,
        identities: common.identities.clone(),
        units: common.units.map(|u| match u {
            Units::Dimensionless => UnitsMode::Dimensionless,
            Units::Si => UnitsMode::Si,
        }),
    };
    let loaded = config::load(&common.config, &over)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Threads(e.to_string()))?;
    pool.install(|| match which {
        "green" => commands::green(&loaded),
        "verify" => commands::verify(&loaded),
        "cascade" => commands::cascade_cmd(&loaded),
        _ => commands::material_info(&loaded),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let diag = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{diag}");
            ExitCode::from(2)
        }
    }
}
