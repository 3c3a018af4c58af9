//! `manifest-v1`: what a command read and wrote, enough to replay it.

use crate::context::Ctx;
use crate::{dispatch, exit_code, Cli};
use clap::Parser;
use extractomat::extractors::certify::default_cache_dir;
use extractomat::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const SCHEMA: &str = "manifest-v1";
pub const FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub command: String,
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub code_version: String,
    pub config: Value,
    pub cache_dir: String,
    /// Digests of every certified table or gadget consumed or produced.
    pub cache_digests: Vec<String>,
    pub outputs: Vec<OutputDigest>,
    pub exit_code: u8,
    #[serde(default)]
    pub notes: BTreeMap<String, Value>,
}

#[derive(clap::Args, Debug, Clone, Serialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

fn execute(cli: &Cli, argv: &[String], out: &Path) -> Result<Manifest> {
    let cache = cli.cache_dir.clone().unwrap_or_else(default_cache_dir);
    let mut ctx = Ctx::new(out, cache.clone());
    let start = Instant::now();
    let result = dispatch(&cli.command, &mut ctx);
    ctx.note("wall_ms", start.elapsed().as_millis() as u64);
    let code = result.as_ref().err().map(exit_code).unwrap_or(0);
    let outputs = ctx
        .outputs
        .iter()
        .map(|p| Ok(OutputDigest { path: p.clone(), sha256: sha256_file(&out.join(p))? }))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        schema: SCHEMA.into(),
        command: cli.command.name().into(),
        argv: argv.to_vec(),
        seed: ctx.seed,
        code_version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::to_value(&cli.command).map_err(|e| Error::Format(e.to_string()))?,
        cache_dir: cache.display().to_string(),
        cache_digests: ctx.digests.iter().cloned().collect(),
        outputs,
        exit_code: code,
        notes: ctx.notes.clone(),
    };
    if code == 1 {
        return result.map(|_| manifest);
    }
    std::fs::create_dir_all(out)?;
    let mut s = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    std::fs::write(out.join(FILE), s)?;
    result.map(|_| manifest)
}

/// Runs the command and writes `manifest.json`, also for exit codes 2 to 5.
pub fn run_recorded(cli: &Cli, argv: &[String]) -> Result<()> {
    execute(cli, argv, &cli.out).map(|_| ())
}

/// Re-runs a manifest's arguments into a scratch directory and compares
/// every output byte for byte.
pub fn replay(args: &ReplayArgs, threads: Option<usize>) -> Result<()> {
    let text = std::fs::read_to_string(&args.manifest)?;
    let old: Manifest = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", args.manifest.display())))?;
    if old.schema != SCHEMA {
        return Err(Error::Format(format!("unsupported manifest schema {}", old.schema)));
    }
    let mut argv = vec!["extractomat".to_string()];
    argv.extend(old.argv.iter().cloned());
    let mut cli = Cli::try_parse_from(&argv).map_err(|e| Error::Format(e.to_string()))?;
    if cli.cache_dir.is_none() {
        cli.cache_dir = Some(PathBuf::from(&old.cache_dir));
    }
    if threads.is_some() {
        cli.threads = threads;
    }
    let scratch = tempfile::tempdir()?;
    let new = match execute(&cli, &old.argv, scratch.path()) {
        Ok(m) => m,
        // Exit codes 2 to 5 still leave a manifest behind.
        Err(e) if exit_code(&e) == old.exit_code && old.exit_code != 0 => {
            let text = std::fs::read_to_string(scratch.path().join(FILE))?;
            serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?
        }
        Err(e) => return Err(e),
    };
    let mut mismatches = Vec::new();
    for o in &old.outputs {
        match new.outputs.iter().find(|n| n.path == o.path) {
            Some(n) if n.sha256 == o.sha256 => {}
            Some(_) => mismatches.push(format!("{} differs", o.path)),
            None => mismatches.push(format!("{} missing", o.path)),
        }
    }
    if new.outputs.len() != old.outputs.len() {
        mismatches.push(format!("{} outputs, manifest lists {}", new.outputs.len(), old.outputs.len()));
    }
    if mismatches.is_empty() {
        println!("replay: {} outputs identical, exit code {}", old.outputs.len(), old.exit_code);
        Ok(())
    } else {
        Err(Error::Format(format!("replay mismatch: {}", mismatches.join("; "))))
    }
}
