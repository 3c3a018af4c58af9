//! `extractomat`: certify tables, search gadgets, evaluate extractors and run
//! network and privacy-amplification simulations.
//!
//! Exit codes: 0 ok, 1 usage or other error, 2 target unreachable, 3 budget
//! exceeded, 4 config invariant violated, 5 constraint violated.

mod commands;
mod context;
mod manifest;

use clap::{Parser, Subcommand};
use context::Ctx;
use extractomat::Error;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "extractomat", version, about = "Desk-scale extractor toolkit")]
pub struct Cli {
    /// Caps rayon workers used by the oracle and ensembles.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Certification cache; `EXTRACTOMAT_CACHE` when unset.
    #[arg(long, global = true, env = "EXTRACTOMAT_CACHE")]
    pub cache_dir: Option<PathBuf>,
    /// Directory receiving reports and the manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
pub enum Command {
    /// Draw and certify a random extractor table.
    Certify(commands::certify::Args),
    /// Measure an extractor with the oracle, or run lemma trials.
    Eval(commands::eval::Args),
    /// Run a network protocol ensemble from a TOML config.
    Netsim(commands::netsim::Args),
    /// Evaluate a theorem's parameter chain.
    Ledger(commands::ledger::Args),
    /// Search and verify a bipartite gadget.
    Search(commands::search::Args),
    /// Run privacy-amplification sessions at micro scale.
    Pa(commands::pa::Args),
    /// Re-run a manifest and compare output digests.
    Replay(manifest::ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Certify(_) => "certify",
            Command::Eval(_) => "eval",
            Command::Netsim(_) => "netsim",
            Command::Ledger(_) => "ledger",
            Command::Search(_) => "search",
            Command::Pa(_) => "pa",
            Command::Replay(_) => "replay",
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::TargetUnreachable { .. } => 2,
        Error::BudgetExceeded { .. } => 3,
        Error::Config(_) => 4,
        Error::ConstraintViolated(_) => 5,
        _ => 1,
    }
}

/// Runs one non-replay command into `ctx`.
pub fn dispatch(cmd: &Command, ctx: &mut Ctx) -> extractomat::Result<()> {
    match cmd {
        Command::Certify(a) => commands::certify::run(a, ctx),
        Command::Eval(a) => commands::eval::run(a, ctx),
        Command::Netsim(a) => commands::netsim::run(a, ctx),
        Command::Ledger(a) => commands::ledger::run(a, ctx),
        Command::Search(a) => commands::search::run(a, ctx),
        Command::Pa(a) => commands::pa::run(a, ctx),
        Command::Replay(_) => unreachable!("replay is handled by the manifest module"),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Replay(a) => manifest::replay(a, cli.threads),
        _ => manifest::run_recorded(&cli, &argv[1..]),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
