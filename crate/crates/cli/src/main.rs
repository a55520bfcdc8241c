//! `magnls <mode> --config <path> --out <dir> [--seed <u64>] [--override key=value]...`

mod modes;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use magnls_core::dynamics::SimConfig;
use magnls_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Evolve,
    EvolvePauli,
    VirialCheck,
    StrichartzCheck,
    BlowupScan,
    CertifyExample,
}

#[derive(Debug, Parser)]
#[command(name = "magnls", version, about = "Magnetic NLS / Pauli simulator")]
struct Cli {
    #[arg(value_enum)]
    mode: Mode,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Replaces the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted config key with a JSON value, e.g. `initial.width=0.8`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// 2: configuration, 3: unresolved field, 4: internal consistency, 1: anything else.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidGrid(_) | Error::SingularTime { .. } => 2,
        Error::Unresolved { .. } => 3,
        Error::InternalConsistency { .. } => 4,
        Error::GridMismatch | Error::Io(_) | Error::Json(_) => 1,
    }
}

fn init_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("MAGNLS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("MAGNLS_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn load(cli: &Cli) -> Result<SimConfig, Error> {
    let mut cfg = SimConfig::load(&cli.config)?.with_overrides(&cli.overrides)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| load(&cli)).and_then(|cfg| {
        std::fs::create_dir_all(&cli.out)?;
        modes::dispatch(cli.mode, &cfg, &cli.out)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("magnls: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 2);
        assert_eq!(exit_code(&Error::Unresolved { boundary_mass: 1.0, threshold: 1e-12 }), 3);
        assert_eq!(exit_code(&Error::InternalConsistency { quantity: "T_S", first: 1.0, second: 2.0 }), 4);
        assert_eq!(exit_code(&Error::GridMismatch), 1);
    }
}
