//! `eval`: worst-case error of a builtin or certified extractor, or random
//! trials of a classical lemma.

use super::OracleFlags;
use crate::context::{without_keys, Ctx};
use extractomat::extractors::certify::load_certified;
use extractomat::extractors::explicit::{deor_handle, ip_handle, toeplitz_handle};
use extractomat::oracle::{lemma_trials, worst_case_error_2source, worst_case_error_seeded, LemmaId, OracleOptions, OracleReport};
use extractomat::{Arity, Error, ExtractorHandle, Result};
use serde::Serialize;
use std::path::PathBuf;

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    Ip,
    Deor,
    Toeplitz,
}

#[derive(clap::Args, Debug, Clone, Serialize)]
pub struct Args {
    #[arg(long, value_enum, conflicts_with_all = ["table", "lemma"])]
    pub extractor: Option<Builtin>,
    /// A certified XTAB file.
    #[arg(long, conflicts_with = "lemma")]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Source min-entropy (seeded).
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub k1: Option<u32>,
    #[arg(long)]
    pub k2: Option<u32>,
    /// Strong in the seed (seeded) or in `--strong-index` (two-source).
    #[arg(long)]
    pub strong: bool,
    #[arg(long, default_value_t = 0)]
    pub strong_index: usize,
    /// Lemma id for random trials: `L2.2` or `L2.5`.
    #[arg(long)]
    pub lemma: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.125)]
    pub eps: f64,
    /// Largest `Z` width in XOR-lemma trials.
    #[arg(long, default_value_t = 3)]
    pub max_m: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub oracle: OracleFlags,
}

#[derive(Serialize)]
struct EvalReport<'a> {
    extractor: &'a str,
    widths: &'a [u32],
    k: Vec<u32>,
    strong: Option<usize>,
    /// Closed-form bound for the builtin, when one applies.
    bound: Option<f64>,
    within_bound: Option<bool>,
    report: serde_json::Value,
}

fn need(v: Option<u32>, flag: &str) -> Result<u32> {
    v.ok_or_else(|| Error::InvalidInput(format!("--{flag} is required")))
}

fn run_lemma(a: &Args, id: &str, ctx: &mut Ctx) -> Result<()> {
    let id: LemmaId = id.parse()?;
    let s = lemma_trials(id, a.trials, a.eps, a.max_m, a.seed)?;
    ctx.write_json(&format!("eval/lemma-{id}.json"), &s)?;
    let guarantee = if id == LemmaId::L2_2 { format!(" (guarantee 1−ε = {})", 1.0 - a.eps) } else { String::new() };
    println!("{id}: {}/{} trials hold, pass rate {}{guarantee}, min slack {:.3e}", s.passed, s.trials, s.pass_rate, s.min_slack);
    Ok(())
}

pub fn run(a: &Args, ctx: &mut Ctx) -> Result<()> {
    ctx.seed = Some(a.seed);
    if let Some(id) = &a.lemma {
        return run_lemma(a, id, ctx);
    }
    let opts = OracleOptions { mode: a.oracle.mode(a.seed), budget: a.oracle.budget() };
    let (h, bound): (ExtractorHandle, Option<f64>) = match (a.extractor, &a.table) {
        (Some(Builtin::Ip), _) => (ip_handle(need(a.n, "n")?)?, None),
        (Some(Builtin::Deor), _) => (deor_handle(need(a.n, "n")?, a.m)?, None),
        (Some(Builtin::Toeplitz), _) => {
            let k = need(a.k, "k")?;
            (toeplitz_handle(need(a.n, "n")?, a.m)?, Some(0.5 * 2f64.powf((a.m as f64 - k as f64) / 2.0)))
        }
        (None, Some(path)) => {
            let (h, rec) = load_certified(path)?;
            ctx.digest(rec.digest);
            (h, None)
        }
        (None, None) => return Err(Error::InvalidInput("one of --extractor, --table or --lemma is required".into())),
    };
    let (report, k, strong): (OracleReport, Vec<u32>, Option<usize>) = match h.arity {
        Arity::Seeded => {
            let k = need(a.k, "k")?;
            (worst_case_error_seeded(&h, k, a.strong, opts)?, vec![k], a.strong.then_some(1))
        }
        Arity::TwoSource => {
            let (k1, k2) = (need(a.k1, "k1")?, need(a.k2, "k2")?);
            let strong = a.strong.then_some(a.strong_index);
            (worst_case_error_2source(&h, k1, k2, strong, opts)?, vec![k1, k2], strong)
        }
        Arity::MultiSource => return Err(Error::InvalidInput("multi-source tables are evaluated through the library API".into())),
    };
    // Dispersion-style bound 2^{-(k₁+k₂+1−n−m)/2} for the two-source builtins.
    let bound = bound.or_else(|| match (a.extractor, k.as_slice()) {
        (Some(Builtin::Ip | Builtin::Deor), [k1, k2]) => {
            let n = h.input_widths[0] as f64;
            Some(2f64.powf(-(*k1 as f64 + *k2 as f64 + 1.0 - n - h.out_width as f64) / 2.0))
        }
        _ => None,
    });
    ctx.note("oracle_wall_ms", report.wall_ms);
    let out = EvalReport {
        extractor: &h.name,
        widths: &h.input_widths,
        k,
        strong,
        bound,
        within_bound: bound.map(|b| report.error_f64() <= b),
        report: without_keys(&report, &["wall_ms"]),
    };
    ctx.write_json(&format!("eval/{}.json", h.name), &out)?;
    let b = bound.map(|b| format!(", bound {b:.5}")).unwrap_or_default();
    println!("{}: error {} ≈ {:.6}{b}{}", h.name, report.error.exact, report.error_f64(), if report.lower_bound { " (lower bound)" } else { "" });
    Ok(())
}
