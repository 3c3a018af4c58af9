//! `search`: anneal for a bipartite gadget, then verify it exhaustively.

use crate::context::Ctx;
use extractomat::combinatorics::search::{search_gadget, GadgetTarget, SearchOptions};
use extractomat::combinatorics::Frac;
use extractomat::{Error, Result};
use serde::Serialize;

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    AndDisperser,
    Expander,
    ExtractorGraph,
}

#[derive(clap::Args, Debug, Clone, Serialize)]
pub struct Args {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Left vertices (`N` for extractor graphs).
    #[arg(long)]
    pub l: u32,
    /// Right vertices (`M` for extractor graphs).
    #[arg(long)]
    pub r: u32,
    /// Left degree.
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    /// Exceptional left vertices allowed (extractor graphs).
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_attempts: Option<u32>,
    #[arg(long)]
    pub moves: Option<u32>,
}

fn frac(v: &Option<String>, flag: &str) -> Result<Frac> {
    v.as_deref().ok_or_else(|| Error::InvalidInput(format!("--{flag} is required for this kind")))?.parse()
}

pub fn target(a: &Args) -> Result<GadgetTarget> {
    Ok(match a.kind {
        Kind::AndDisperser => GadgetTarget::AndDisperser { l: a.l, r: a.r, d: a.d, delta: frac(&a.delta, "delta")?, gamma: frac(&a.gamma, "gamma")? },
        Kind::Expander => GadgetTarget::Expander { l: a.l, r: a.r, d: a.d, beta: frac(&a.beta, "beta")? },
        Kind::ExtractorGraph => {
            let k = a.k.ok_or_else(|| Error::InvalidInput("--k is required for extractor graphs".into()))?;
            GadgetTarget::ExtractorGraph { n: a.l, m: a.r, k, d: a.d, eps: frac(&a.eps, "eps")? }
        }
    })
}

pub fn run(a: &Args, ctx: &mut Ctx) -> Result<()> {
    ctx.seed = Some(a.seed);
    let t = target(a)?;
    let mut opts = SearchOptions::default();
    if let Some(m) = a.max_attempts {
        opts.max_attempts = m;
    }
    if let Some(m) = a.moves {
        opts.moves_per_attempt = m;
    }
    let (g, record) = search_gadget(&t, a.seed, opts)?;
    let kind = t.kind();
    let graph = g.to_json();
    ctx.digest(format!("graph:{}", hex::encode(<sha2::Sha256 as sha2::Digest>::digest(graph.as_bytes()))));
    ctx.write(&format!("search/{kind}.graph.json"), format!("{graph}\n").as_bytes())?;
    ctx.write_json(&format!("search/{kind}.record.json"), &record)?;
    println!("{kind}: holds={} attempts={} moves={}", record.verdict.holds(), record.attempts, record.moves);
    Ok(())
}
