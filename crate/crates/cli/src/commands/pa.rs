//! `pa`: privacy amplification sessions over a micro-scale handle, with key
//! agreement counts and Eve's distance.

use crate::context::Ctx;
use extractomat::leakage::{LeakMap, LeakModel, LeakageScenario};
use extractomat::netsim::EvalMode;
use extractomat::oracle::{Accounting, LeakFamily};
use extractomat::pa::{eavesdropper_distance, eavesdropper_worst_case, micro_three_source, micro_weak_seed, PaModel, PaProtocol};
use extractomat::{Error, FlatSource, OracleMode, Result};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolArg {
    /// Alice sends `Y`.
    OneSource,
    /// Alice sends `Y₁`, Bob sends `Y₂`.
    TwoSources,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalArg {
    Exact,
    Sampled,
    None,
}

#[derive(clap::Args, Debug, Clone, Serialize)]
pub struct Args {
    #[arg(long, value_enum)]
    pub protocol: ProtocolArg,
    #[arg(long, default_value_t = 100_000)]
    pub runs: usize,
    /// Seeds the certified component tables and the source supports.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Eve learns the top `b` bits of `X` (0..=2).
    #[arg(long, default_value_t = 0)]
    pub leak_bits: u32,
    /// Write the keys into `sessions.jsonl`.
    #[arg(long)]
    pub reveal: bool,
    #[arg(long, default_value_t = 20)]
    pub log_runs: usize,
    #[arg(long, value_enum, default_value = "exact")]
    pub eval: EvalArg,
    /// Sampled-evaluation tolerance.
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
}

/// `(width, k)` of `X` then each local source.
fn shape(p: PaProtocol) -> (u32, u32, Vec<(u32, u32)>) {
    match p {
        PaProtocol::OneSource => (6, 6, vec![(4, 3)]),
        PaProtocol::TwoSources => (4, 3, vec![(2, 1), (2, 1)]),
    }
}

fn flat(width: u32, k: u32, seed: u64, stream: u64) -> Result<FlatSource> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    FlatSource::new(width, sample(&mut rng, 1 << width, 1 << k).into_iter().map(|v| v as u32).collect())
}

fn prefix_map(width: u32, b: u32) -> Vec<u32> {
    (0..1u32 << width).map(|x| x >> (width - b)).collect()
}

pub fn run(a: &Args, ctx: &mut Ctx) -> Result<()> {
    ctx.seed = Some(a.seed);
    let protocol = match a.protocol {
        ProtocolArg::OneSource => PaProtocol::OneSource,
        ProtocolArg::TwoSources => PaProtocol::TwoSources,
    };
    let (xw, xk, locals) = shape(protocol);
    if a.leak_bits > 2 {
        return Err(Error::InvalidInput("--leak-bits must be in 0..=2".into()));
    }
    let composite = match protocol {
        PaProtocol::OneSource => micro_weak_seed(a.seed)?,
        PaProtocol::TwoSources => micro_three_source(a.seed)?,
    };
    let h = &composite.handle;
    ctx.digest(h.truth_table()?.digest());

    let x = flat(xw, xk, a.seed, 0)?;
    let ys = locals.iter().enumerate().map(|(i, &(w, k))| flat(w, k, a.seed, i as u64 + 1)).collect::<Result<Vec<_>>>()?;
    let mut widths = vec![xw];
    widths.extend(locals.iter().map(|l| l.0));
    let mut sc = LeakageScenario::trivial(&widths);
    let b = a.leak_bits;
    if b > 0 {
        sc.maps[0] = LeakMap::from_fn(xw, 0, b, move |x, _| x >> (xw - b))?;
        sc.model = LeakModel::Oa;
    }
    let model = PaModel::new(protocol, x, ys)?.with_leakage(sc)?;

    let sessions: Vec<(bool, Option<String>)> = (0..a.runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            rng.set_stream(i as u64);
            let s = model.session(&model.sources.draw(&mut rng), h)?;
            Ok((s.keys_agree(), (i < a.log_runs).then(|| s.to_json(a.reveal))))
        })
        .collect::<Result<_>>()?;
    let agreed = sessions.iter().filter(|s| s.0).count();
    let mut log = String::new();
    for line in sessions.iter().filter_map(|s| s.1.as_ref()) {
        log.push_str(line);
        log.push('\n');
    }
    ctx.write("pa/sessions.jsonl", log.as_bytes())?;

    let distance = match a.eval {
        EvalArg::None => None,
        EvalArg::Exact => Some(eavesdropper_distance(&model, h, EvalMode::Exact)?),
        EvalArg::Sampled => Some(eavesdropper_distance(&model, h, EvalMode::Sampled { runs: a.runs, tol: a.tol, seed: a.seed })?),
    };
    let family = (b > 0).then(|| LeakFamily::explicit(vec![protocol.secret_index()], b, vec![prefix_map(xw, b)], Accounting::Marginal)).transpose()?;
    let mut k = vec![xk];
    k.extend(locals.iter().map(|l| l.1));
    // Worst case is indexed as the handle orders its inputs.
    let k: Vec<u32> = match protocol {
        PaProtocol::OneSource => k,
        PaProtocol::TwoSources => vec![k[1], k[2], k[0]],
    };
    let mode = if protocol == PaProtocol::OneSource { OracleMode::Exhaustive } else { OracleMode::Reduced };
    let worst = eavesdropper_worst_case(protocol, h, &k, family, mode)?;
    ctx.note("oracle_wall_ms", worst.wall_ms);
    let budget = composite.total()?;
    let admits = distance.as_ref().and_then(|d| d.exact.as_ref()).map(|e| e.exact.parse().map_err(|_| Error::Format("exact value".into())).and_then(|r| composite.admits(&r))).transpose()?;

    let summary = serde_json::json!({
        "protocol": protocol,
        "handle": h.name,
        "widths": h.input_widths,
        "k": k,
        "leak_bits": b,
        "runs": a.runs,
        "keys_agree": agreed,
        "keys_disagree": a.runs - agreed,
        "distance": distance,
        "worst_case": { "error": worst.error, "mode": worst.mode, "enumerated": worst.enumerated },
        "budget": budget,
        "budget_terms": composite.report()?,
        "within_budget": admits,
    });
    ctx.write_json("pa/summary.json", &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
    Ok(())
}
