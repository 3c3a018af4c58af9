//! `ledger`: a theorem's parameter chain from `--symbol value` pairs.

use crate::context::Ctx;
use extractomat::combinators::ledger::{ledger_theorem, TheoremId};
use extractomat::combinators::CompositionConfig;
use extractomat::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(clap::Args, Debug, Clone, Serialize)]
pub struct Args {
    /// Theorem id, e.g. `deor-ge` or `ir-to-qr`.
    #[arg(long)]
    pub theorem: String,
    /// Inputs as `--name value` pairs; dashes in names become underscores.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
    pub params: Vec<String>,
}

pub fn parse_params(params: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    let mut it = params.iter();
    while let Some(flag) = it.next() {
        let name = flag.strip_prefix("--").ok_or_else(|| Error::InvalidInput(format!("expected --name, got {flag:?}")))?;
        let (name, value) = match name.split_once('=') {
            Some((n, v)) => (n.to_string(), v.to_string()),
            None => (name.to_string(), it.next().ok_or_else(|| Error::InvalidInput(format!("--{name} needs a value")))?.clone()),
        };
        let v: f64 = match value.as_str() {
            "true" => 1.0,
            "false" => 0.0,
            s => s.parse().map_err(|_| Error::InvalidInput(format!("--{name}: {s:?} is not a number")))?,
        };
        if out.insert(name.replace('-', "_"), v).is_some() {
            return Err(Error::InvalidInput(format!("--{name} given twice")));
        }
    }
    Ok(out)
}

pub fn run(a: &Args, ctx: &mut Ctx) -> Result<()> {
    let id: TheoremId = a.theorem.parse()?;
    let inputs = parse_params(&a.params)?;
    let entry = match ledger_theorem(id, &inputs, &CompositionConfig::default().ledger_defaults()) {
        Err(Error::ConstraintViolated(v)) => {
            ctx.write_json(&format!("ledger/{id}.violations.json"), &v)?;
            for s in &v {
                eprintln!("violated: {s}");
            }
            return Err(Error::ConstraintViolated(v));
        }
        r => r?,
    };
    entry.replay()?;
    ctx.write_json(&format!("ledger/{id}.json"), &entry)?;
    println!("{}", serde_json::to_string(&entry.outputs).expect("outputs serialize"));
    for w in &entry.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
