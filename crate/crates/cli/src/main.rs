//! `qpart` command-line entry point.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 resource cap
//! exceeded, 3 internal invariant violated. Failures print one JSON object
//! on stderr.

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qpart::Error;
use serde_json::json;

mod commands;
mod config;

#[derive(Parser, Debug)]
#[command(name = "qpart", version, about = "Hybrid quantum-classical graph bipartitioning and nested dissection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Coarsen, solve with iterative QAOA, lift and refine
    Partition(commands::PartitionArgs),
    /// Nested dissection ordering with symbolic merit figures
    Order(commands::OrderArgs),
    /// Expectation landscape over ramp values and depths
    Sweep(commands::SweepArgs),
    /// Exhaustive reference results
    Oracle(commands::OracleArgs),
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } => "parse",
        Error::InvalidGraph(_) => "invalid-graph",
        Error::InvalidArgument(_) => "invalid-argument",
        Error::LengthMismatch { .. } => "length-mismatch",
        Error::CapExceeded { .. } => "cap-exceeded",
        Error::Infeasible => "infeasible",
        Error::Invariant(_) => "invariant",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_resource() {
        2
    } else if e.is_internal() {
        3
    } else {
        1
    }
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let body = json!({ "error": { "kind": kind, "message": message, "exit_code": code } });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("QPART_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("QPART_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.render().to_string().trim_end().to_string(), 1),
    };
    if let Err(msg) = configure_threads() {
        return fail("invalid-argument", msg, 1);
    }
    let result = match &cli.command {
        Command::Partition(a) => commands::partition(a),
        Command::Order(a) => commands::order(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Oracle(a) => commands::oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(kind(&e), e.to_string(), exit_code(&e)),
    }
}
