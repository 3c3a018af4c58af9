//! `netsim`: run an ExtPub/ExtPri or GE-QR ensemble, check the rushing
//! order and evaluate the output distance.

use crate::context::Ctx;
use extractomat::leakage::{LeakMap, LeakModel, LeakageScenario};
use extractomat::netsim::strategies::{AdaptiveRandom, Blind, RushRule, StaticCorruption};
use extractomat::netsim::*;
use extractomat::{Error, ExactValue, ExtractorHandle, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::PathBuf;

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolArg {
    ExtPub,
    Geqr,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdvArg {
    None,
    /// Corrupts `--corrupt` before round 1.
    Static,
    /// Corrupts a random honest player per round with probability `--rate`.
    Adaptive,
    /// GE-QR: exact optimal rushing with and without the side-information
    /// register. ExtPub: static corruption through the QR interface.
    QrAnalog,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    Honest,
    Zero,
    Random,
    Flip,
}

impl From<RuleArg> for RushRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Honest => RushRule::Honest,
            RuleArg::Zero => RushRule::Zero,
            RuleArg::Random => RushRule::Random,
            RuleArg::Flip => RushRule::Flip,
        }
    }
}

#[derive(clap::Args, Debug, Clone, Serialize)]
pub struct Args {
    /// Network configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the protocol named in the config.
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolArg>,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed for the random flat sources of every player.
    #[arg(long, default_value_t = 0)]
    pub source_seed: u64,
    #[arg(long, value_enum, default_value = "none")]
    pub adv: AdvArg,
    #[arg(long, value_enum, default_value = "flip")]
    pub rule: RuleArg,
    #[arg(long, default_value_t = 0.1)]
    pub rate: f64,
    /// Statically corrupted players; defaults to the first `t`.
    #[arg(long, value_delimiter = ',')]
    pub corrupt: Vec<usize>,
    /// Sampled-evaluation tolerance; defaults to `√(100·2^m/runs)`.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Runs written to `runs.jsonl`.
    #[arg(long, default_value_t = 100)]
    pub log_runs: usize,
    /// Evaluate over every source outcome instead of sampling.
    #[arg(long)]
    pub exact: bool,
    /// Player whose source leaks its parity (OA, one bit).
    #[arg(long)]
    pub leak_player: Option<usize>,
    /// GE-QR qr-analog: the corrupted group member.
    #[arg(long)]
    pub faulty: Option<usize>,
    /// GE-QR: tested player set; defaults to the honest part of `B`.
    #[arg(long, value_delimiter = ',')]
    pub set: Vec<usize>,
    /// GE-QR: exact hybrid union bound over `--set`.
    #[arg(long)]
    pub hybrid: bool,
}

struct RunStat {
    run: usize,
    violation: Option<(u32, u32, u32)>,
    /// ExtPub: |good B|; GE-QR: rushed bits of `y`.
    measure: u32,
}

#[derive(Serialize)]
struct Row {
    view: String,
    mode: &'static str,
    value: f64,
    exact: Option<String>,
    half_width: Option<f64>,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    bound: f64,
    holds: bool,
    runs: u64,
}

impl Row {
    fn new(d: &DistanceReport, bound: f64) -> Row {
        let hw = d.mc.as_ref().map(|m| m.half_width);
        Row {
            view: d.view.clone(),
            mode: if d.exact.is_some() { "exact" } else { "sampled" },
            value: d.value,
            exact: d.exact.as_ref().map(|e| e.exact.clone()),
            half_width: hw,
            ci_low: d.mc.as_ref().map(|m| m.ci_low),
            ci_high: d.mc.as_ref().map(|m| m.ci_high),
            bound,
            holds: d.value <= bound + hw.unwrap_or(0.0),
            runs: d.runs,
        }
    }
}

fn parity_leak(model: SourceModel, target: usize) -> Result<SourceModel> {
    if target >= model.players() {
        return Err(Error::InvalidInput(format!("--leak-player {target} out of range")));
    }
    let widths: Vec<u32> = model.sources.iter().map(|s| s.width()).collect();
    let maps = widths
        .iter()
        .enumerate()
        .map(|(i, &w)| if i == target { LeakMap::from_fn(w, 0, 1, |x, _| x.count_ones() & 1) } else { Ok(LeakMap::trivial(w, 0)) })
        .collect::<Result<_>>()?;
    let sc = LeakageScenario { shared_widths: vec![0; widths.len()], source_widths: widths, maps, model: LeakModel::Oa };
    model.with_leakage(sc)
}

fn handle_digest(ctx: &mut Ctx, h: &ExtractorHandle) -> Result<()> {
    let d = h.truth_table()?.digest();
    ctx.digest(d);
    Ok(())
}

fn graph_digest(ctx: &mut Ctx, json: &str) {
    ctx.digest(format!("graph:{}", hex::encode(Sha256::digest(json.as_bytes()))));
}

fn adversary(a: &Args, players: &[usize]) -> Adversary {
    let rule = a.rule.into();
    match a.adv {
        AdvArg::None => Adversary::None,
        AdvArg::Static => Adversary::Ir(Box::new(StaticCorruption { players: players.to_vec(), rule })),
        AdvArg::Adaptive => Adversary::Ir(Box::new(AdaptiveRandom { rate: a.rate, rule })),
        AdvArg::QrAnalog => Adversary::Qr(Box::new(Blind(StaticCorruption { players: players.to_vec(), rule }))),
    }
}

fn draw_for(model: &SourceModel, seed: u64, run: usize) -> Draw {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    model.draw(&mut rng)
}

fn tolerance(a: &Args, m: u32) -> f64 {
    // Nudged up so the sizing rule accepts exactly `runs` samples.
    a.tol.unwrap_or_else(|| ((100.0 * (1u64 << m) as f64 / a.runs.max(1) as f64).sqrt() * (1.0 + 1e-9)).min(1.0))
}

fn eval_mode(a: &Args, m: u32) -> EvalMode {
    if a.exact {
        EvalMode::Exact
    } else {
        EvalMode::Sampled { runs: a.runs, tol: tolerance(a, m), seed: a.seed.wrapping_add(1) }
    }
}

fn write_log(ctx: &mut Ctx, runs: &[(usize, ProtocolRun)]) -> Result<()> {
    let mut out = String::new();
    for (i, r) in runs {
        for rec in r.records() {
            let v = serde_json::json!({ "run": i, "event": rec });
            out.push_str(&v.to_string());
            out.push('\n');
        }
    }
    ctx.write("netsim/runs.jsonl", out.as_bytes())?;
    Ok(())
}

fn count_violations(stats: &[RunStat]) -> usize {
    stats.iter().filter(|s| s.violation.is_some()).count()
}

pub fn run(a: &Args, ctx: &mut Ctx) -> Result<()> {
    ctx.seed = Some(a.seed);
    let mut cfg = NetworkConfig::load(&a.config)?;
    if let Some(p) = a.protocol {
        cfg.protocol = match p {
            ProtocolArg::ExtPub => ProtocolKind::ExtPub,
            ProtocolArg::Geqr => ProtocolKind::Geqr,
        };
    }
    cfg.validate()?;
    let warnings = cfg.warnings();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    ctx.write("netsim/config.toml", cfg.to_toml().as_bytes())?;
    let mut model = SourceModel::random_flat(cfg.p, cfg.n, cfg.k, a.source_seed)?;
    if let Some(i) = a.leak_player {
        model = parity_leak(model, i)?;
    }
    let corrupt: Vec<usize> = if a.corrupt.is_empty() { (0..cfg.t).collect() } else { a.corrupt.clone() };
    if corrupt.len() > cfg.t || corrupt.iter().any(|&i| i >= cfg.p) {
        return Err(Error::InvalidInput(format!("--corrupt {corrupt:?} exceeds t = {} or p = {}", cfg.t, cfg.p)));
    }
    let mut summary = match cfg.protocol {
        ProtocolKind::ExtPub => ext_pub(a, ctx, &cfg, &model, &corrupt)?,
        ProtocolKind::Geqr => geqr(a, ctx, &cfg, &model, &corrupt)?,
    };
    summary["warnings"] = serde_json::to_value(&warnings).unwrap_or_default();
    ctx.write_json("netsim/summary.json", &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
    Ok(())
}

fn ext_pub(a: &Args, ctx: &mut Ctx, cfg: &NetworkConfig, model: &SourceModel, corrupt: &[usize]) -> Result<serde_json::Value> {
    let g = ExtPubGadgets::build(cfg, Some(&ctx.cache))?;
    for h in [&g.iext, &g.srext, &g.oaext] {
        handle_digest(ctx, h)?;
    }
    graph_digest(ctx, &g.disperser.to_json());
    graph_digest(ctx, &g.expander.to_json());
    let part = cfg.partition()?;
    let budget = g.budget(part.b.len());

    let results: Vec<(RunStat, Option<ProtocolRun>, u32)> = (0..a.runs)
        .into_par_iter()
        .map(|i| {
            let draw = draw_for(model, a.seed, i);
            let mut adv = adversary(a, corrupt);
            let r = run_ext_net(cfg, &g, model, &draw, &mut adv, i as u64)?;
            let stat = RunStat { run: i, violation: rushing_violation(&r.run.events), measure: r.good_b.len() as u32 };
            let width = r.y()?.width();
            Ok((stat, (i < a.log_runs).then_some(r.run), width))
        })
        .collect::<Result<_>>()?;
    let logged: Vec<(usize, ProtocolRun)> = results.iter().filter_map(|(s, r, _)| r.clone().map(|r| (s.run, r))).collect();
    write_log(ctx, &logged)?;
    let widths_ok = results.iter().all(|(_, _, w)| *w == part.b.len() as u32 * 2 * cfg.slice_width());
    let stats: Vec<RunStat> = results.into_iter().map(|(s, _, _)| s).collect();
    let violations = count_violations(&stats);

    // Adaptive corruption may reach B, where (y_j, T₁) has no honest owner.
    let mut rows = Vec::new();
    if a.adv != AdvArg::Adaptive {
        let m = 2 * cfg.slice_width();
        for (pos, &j) in part.b.iter().enumerate().filter(|(_, j)| !corrupt.contains(j) || a.adv == AdvArg::None) {
            let view = format!("(y_{j}, T1)");
            let d = evaluate_security(model, &view, eval_mode(a, m), &|draw, s| {
                let mut adv = adversary(a, corrupt);
                let r = run_ext_pub(cfg, &g, model, draw, &mut adv, s)?;
                let y = r.y_j(pos)?;
                Ok(Observation { z: y.value() as u64, z_width: y.width(), key: r.t1().iter().map(|t| t.value() as u64).collect() })
            })?;
            rows.push(Row::new(&d, budget.per_good));
        }
    }
    ctx.write_csv("netsim/summary.csv", &rows)?;
    Ok(serde_json::json!({
        "protocol": "ext-pub",
        "runs": a.runs,
        "adversary": adversary(a, corrupt).name(),
        "partition": part,
        "y_width": part.b.len() as u32 * 2 * cfg.slice_width(),
        "y_width_holds": widths_ok,
        "rushing_violations": violations,
        "min_good_b": stats.iter().map(|s| s.measure).min(),
        "budget": budget,
        "slots": g.errors,
        "distances": rows,
    }))
}

fn geqr(a: &Args, ctx: &mut Ctx, cfg: &NetworkConfig, model: &SourceModel, corrupt: &[usize]) -> Result<serde_json::Value> {
    let g = GeqrGadgets::build(cfg, Some(&ctx.cache))?;
    handle_digest(ctx, &g.iext)?;
    handle_digest(ctx, &g.qtext)?;
    let groups = cfg.groups()?;
    let budget = g.budget(cfg);
    let set: Vec<usize> = if a.set.is_empty() { groups.b.iter().copied().filter(|i| !corrupt.contains(i)).collect() } else { a.set.clone() };
    if set.iter().any(|i| !groups.b.contains(i)) {
        return Err(Error::InvalidInput(format!("--set {set:?} must lie in B = {:?}", groups.b)));
    }
    let mut summary = serde_json::json!({ "protocol": "geqr", "groups": groups, "set": set, "budget": budget, "slots": g.errors });

    if a.adv == AdvArg::QrAnalog {
        let faulty = a.faulty.unwrap_or(groups.groups[0][0]);
        let opt = geqr_rushing_optimum(cfg, &g, model, faulty, &set)?;
        let factor = 1u64 << opt.rush_bits;
        summary["rushing"] = serde_json::json!({
            "faulty": faulty,
            "rush_bits": opt.rush_bits,
            "ir": ExactValue::from_rational(&opt.ir),
            "qr": ExactValue::from_rational(&opt.qr),
            "lift_factor": factor,
            "lifted_ir": ExactValue::from_rational(&(&opt.ir * extractomat::BigRational::from_integer(factor.into()))),
            "lift_holds": opt.lift_holds(),
        });
        let ir = ExactValue::from_rational(&opt.ir).approx;
        let qr = ExactValue::from_rational(&opt.qr).approx;
        let rows = [("ir", ir, budget.ir), ("qr", qr, budget.qr)].map(|(view, value, bound)| Row {
            view: format!("{view}:{set:?}"),
            mode: "exact",
            value,
            exact: None,
            half_width: None,
            ci_low: None,
            ci_high: None,
            bound,
            holds: value <= bound,
            runs: model.outcome_count().unwrap_or(0),
        });
        ctx.write_csv("netsim/summary.csv", &rows)?;
        return Ok(summary);
    }

    let results: Vec<(RunStat, Option<ProtocolRun>)> = (0..a.runs)
        .into_par_iter()
        .map(|i| {
            let draw = draw_for(model, a.seed, i);
            let mut adv = adversary(a, corrupt);
            let r = run_geqr(cfg, &g, model, &draw, &mut adv, i as u64)?;
            let stat = RunStat { run: i, violation: rushing_violation(&r.run.events), measure: r.rushed_bits };
            Ok((stat, (i < a.log_runs).then_some(r.run)))
        })
        .collect::<Result<_>>()?;
    let logged: Vec<(usize, ProtocolRun)> = results.iter().filter_map(|(s, r)| r.clone().map(|r| (s.run, r))).collect();
    write_log(ctx, &logged)?;
    let stats: Vec<RunStat> = results.into_iter().map(|(s, _)| s).collect();
    summary["runs"] = stats.len().into();
    summary["adversary"] = adversary(a, corrupt).name().into();
    summary["rushing_violations"] = count_violations(&stats).into();
    summary["max_rushed_bits"] = stats.iter().map(|s| s.measure).max().into();

    let mut rows = Vec::new();
    let bound = budget.ir;
    if a.adv != AdvArg::Adaptive && !set.is_empty() {
        let m = cfg.gadgets.qtext_out * set.len() as u32;
        let d = evaluate_security(model, &format!("Z_{set:?}"), eval_mode(a, m), &|draw, s| {
            let mut adv = adversary(a, corrupt);
            observe_set(&run_geqr(cfg, &g, model, draw, &mut adv, s)?.run, draw, &set)
        })?;
        rows.push(Row::new(&d, bound));
    }
    if a.hybrid {
        let rep = hybrid_union(model, &set, &|draw, s| {
            let mut adv = adversary(a, corrupt);
            Ok(run_geqr(cfg, &g, model, draw, &mut adv, s)?.run)
        })?;
        summary["hybrid"] = serde_json::to_value(&rep).map_err(|e| Error::Format(e.to_string()))?;
    }
    ctx.write_csv("netsim/summary.csv", &rows)?;
    summary["distances"] = serde_json::to_value(&rows).map_err(|e| Error::Format(e.to_string()))?;
    Ok(summary)
}
