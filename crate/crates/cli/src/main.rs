//! `causal-kit`: statistical causality between time series from the
//! command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 numerical failure. Human-readable messages go to stderr; files and
//! stdout carry data only.

mod args;
mod commands;
mod config;
mod output;

use causal_kit_core::CausalError;
use clap::Parser;

/// CLI-level error with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn config(message: String) -> Self {
        Self {
            message,
            exit_code: 2,
        }
    }

    pub fn data(message: String) -> Self {
        Self {
            message,
            exit_code: 3,
        }
    }
}

impl From<CausalError> for CliError {
    fn from(e: CausalError) -> Self {
        let exit_code = match &e {
            CausalError::InvalidParameter(_) | CausalError::EmptyVariantGroup { .. } => 2,
            CausalError::SolveFailure
            | CausalError::DegenerateVariance { .. }
            | CausalError::AllPointsIdentical
            | CausalError::NotPositiveDefinite
            | CausalError::AlreadyCentered => 4,
            _ => 3,
        };
        Self {
            message: e.to_string(),
            exit_code,
        }
    }
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("CAUSAL_KIT_THREADS") {
        match value.parse::<usize>() {
            Ok(threads) if threads >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            _ => eprintln!("ignoring invalid CAUSAL_KIT_THREADS='{value}'"),
        }
    }
}

fn main() {
    init_thread_pool();
    let cli = args::Cli::parse();
    let result = match cli.command {
        args::Command::Gen { system } => commands::gen(system),
        args::Command::Test(a) => commands::test(a),
        args::Command::Matrix(a) => commands::matrix(a),
        args::Command::Scan(a) => commands::scan(a),
        args::Command::Reproduce(a) => commands::reproduce(a),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message);
        std::process::exit(e.exit_code);
    }
}
