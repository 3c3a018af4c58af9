//! `certify`: draw random tables until one meets the target error.

use super::OracleFlags;
use crate::context::Ctx;
use extractomat::extractors::certify::{certify_random_table, CertifyRequest};
use extractomat::{Arity, Error, Result};
use serde::Serialize;

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArityArg {
    Seeded,
    #[value(name = "2", alias = "two-source")]
    Two,
    Multi,
}

#[derive(clap::Args, Debug, Clone, Serialize)]
pub struct Args {
    #[arg(long, value_enum)]
    pub arity: ArityArg,
    /// Width of the first source.
    #[arg(long)]
    pub n: Option<u32>,
    /// Width of the second source (two-source; defaults to `--n`).
    #[arg(long)]
    pub n2: Option<u32>,
    /// Seed width (seeded).
    #[arg(long)]
    pub d: Option<u32>,
    /// Min-entropy of the first source.
    #[arg(long)]
    pub k: Option<u32>,
    /// Min-entropy of the second source (two-source; defaults to `--k`).
    #[arg(long)]
    pub k2: Option<u32>,
    /// Input widths (multi-source).
    #[arg(long, value_delimiter = ',')]
    pub widths: Vec<u32>,
    /// Min-entropy profile (multi-source).
    #[arg(long, value_delimiter = ',')]
    pub ks: Vec<u32>,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Target worst-case error.
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Inputs whose strong error is certified (seeded defaults to the seed).
    #[arg(long, value_delimiter = ',')]
    pub strong: Option<Vec<usize>>,
    #[command(flatten)]
    pub oracle: OracleFlags,
}

fn need(v: Option<u32>, flag: &str) -> Result<u32> {
    v.ok_or_else(|| Error::InvalidInput(format!("--{flag} is required for this arity")))
}

pub fn request(a: &Args) -> Result<CertifyRequest> {
    let (arity, widths, k) = match a.arity {
        ArityArg::Seeded => {
            let d = need(a.d, "d")?;
            (Arity::Seeded, vec![need(a.n, "n")?, d], vec![need(a.k, "k")?, d])
        }
        ArityArg::Two => {
            let (n, k) = (need(a.n, "n")?, need(a.k, "k")?);
            (Arity::TwoSource, vec![n, a.n2.unwrap_or(n)], vec![k, a.k2.unwrap_or(k)])
        }
        ArityArg::Multi => (Arity::MultiSource, a.widths.clone(), a.ks.clone()),
    };
    let mut req = CertifyRequest::new(arity, widths, k, a.m, a.eps, a.seed).mode(a.oracle.mode(a.seed)).budget(a.oracle.budget());
    if let Some(s) = &a.strong {
        req = req.strong(s.clone());
    }
    Ok(req)
}

#[derive(Serialize)]
struct Summary<'a> {
    id: &'a str,
    digest: &'a str,
    measured: &'a str,
    measured_f64: f64,
    exact: bool,
    attempts: u32,
    target: f64,
}

pub fn run(a: &Args, ctx: &mut Ctx) -> Result<()> {
    ctx.seed = Some(a.seed);
    let req = request(a)?;
    let cache = ctx.cache.clone();
    let c = certify_random_table(&req, Some(&cache))?;
    let r = &c.record;
    ctx.digest(r.digest.clone());
    let xtab = c.path.as_ref().ok_or_else(|| Error::Format("certified table was not persisted".into()))?;
    ctx.write(&format!("certify/{}.xtab", r.id), &std::fs::read(xtab)?)?;
    ctx.write_json(&format!("certify/{}.json", r.id), r)?;
    ctx.note("cache_hit", c.cache_hit);
    let s = Summary { id: &r.id, digest: &r.digest, measured: &r.measured.exact, measured_f64: r.measured.approx, exact: r.exact, attempts: r.attempts, target: r.target };
    println!("{}", serde_json::to_string(&s).expect("summary serializes"));
    Ok(())
}
