use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use musym_cli::{run_file, Command, GaugeMode, Options, EXIT_INPUT};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Verify symmetry properties of PDE systems declared in a problem file.
#[derive(Debug, Parser)]
#[command(name = "musym", version)]
struct Args {
    /// check-standard, check-mu, compat, gauge, conditional, partial,
    /// nonlocal, invariants, reduce, verify-solution or oracle
    command: String,
    /// Problem file (JSON, schema 1).
    file: String,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Sample points for numeric zero tests.
    #[arg(long)]
    trials: Option<usize>,
    /// Relative tolerance for numeric zero tests.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_parser = parse_seed)]
    seed: Option<u64>,
    /// Longest chain tried by `partial`.
    #[arg(long)]
    max_order: Option<usize>,
    /// Strong μ-symmetry (no restriction to the solution manifold).
    #[arg(long)]
    strong: bool,
    /// `gauge`: check μ = γ⁻¹Dγ only.
    #[arg(long, conflicts_with = "derive_potential")]
    verify: bool,
    /// `gauge`: integrate a scalar μ to a potential.
    #[arg(long)]
    derive_potential: bool,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    match s.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    }
    .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_INPUT as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let command: Command = match args.command.parse() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    let opts = Options {
        strong: args.strong,
        gauge: if args.verify {
            GaugeMode::Verify
        } else if args.derive_potential {
            GaugeMode::DerivePotential
        } else {
            GaugeMode::Full
        },
        max_order: args.max_order,
        trials: args.trials,
        tol: args.tol,
        seed: args.seed,
    };
    match run_file(command, &args.file, &opts) {
        Ok(report) => {
            match args.format {
                Format::Text => print!("{}", report.to_text()),
                Format::Json => println!("{}", report.to_json()),
            }
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
