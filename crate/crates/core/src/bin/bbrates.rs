//! Command-line driver: `rates`, `evolve`, `regime-scan`, `kernel-dump`.
//!
//! Exit codes: 2 config/validation, 3 numeric failure, 4 I/O.

use bbrates::config::RunConfig;
use bbrates::run::{
    cmd_evolve, cmd_kernel_dump, cmd_rates, cmd_regime_scan, prepare, InitialState, RunError,
    ScanParameter,
};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "bbrates",
    about = "Blackbody-radiation transition rates for N fixed spin-1/2 dipoles"
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true, default_value = "config.json")]
    config: PathBuf,
    /// Output directory; overrides the config's outputs.directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (accepted for forward compatibility; the pipeline is
    /// sequential and deterministic).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// RNG seed, reserved for oracle sampling; unused by the pipeline.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanKind {
    Spacing,
    Omega,
}

#[derive(Subcommand)]
enum Command {
    /// Diagonalize the Hamiltonian and write spectrum + rate matrices.
    Rates,
    /// Integrate the Pauli master equation toward Gibbs.
    Evolve {
        /// Initial populations: `ground`, `uniform`, or a comma list.
        #[arg(long, default_value = "ground")]
        p0: String,
        #[arg(long)]
        t_final: f64,
        #[arg(long)]
        dt: f64,
    },
    /// Sweep lattice spacing or transition frequency across the
    /// coherent/incoherent crossover.
    RegimeScan {
        #[arg(long, value_enum)]
        scan: ScanKind,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        points: usize,
        /// 1-based index of the upper state of the pair.
        #[arg(long, default_value_t = 2)]
        upper: usize,
        /// 1-based index of the lower state of the pair.
        #[arg(long, default_value_t = 1)]
        lower: usize,
    },
    /// Write the angular kernel at one frequency as CSV.
    KernelDump {
        #[arg(long)]
        omega: f64,
    },
}

fn run(cli: Cli) -> Result<(), RunError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| RunError::Config(format!("{}: {e}", cli.config.display())))?;
    let config = RunConfig::from_json(&text).map_err(|e| RunError::Config(e.to_string()))?;
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.outputs.directory));
    let p = prepare(config)?;
    match cli.command {
        Command::Rates => cmd_rates(&p, &out_dir),
        Command::Evolve { p0, t_final, dt } => {
            let p0 = InitialState::parse(&p0)?;
            cmd_evolve(&p, &out_dir, &p0, t_final, dt)
        }
        Command::RegimeScan {
            scan,
            from,
            to,
            points,
            upper,
            lower,
        } => {
            let parameter = match scan {
                ScanKind::Spacing => ScanParameter::Spacing,
                ScanKind::Omega => ScanParameter::Omega,
            };
            cmd_regime_scan(&p, &out_dir, parameter, from, to, points, upper, lower)
        }
        Command::KernelDump { omega } => cmd_kernel_dump(&p, &out_dir, omega),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
