//! Security evaluation of honest outputs.
//!
//! A view maps one run to `(z, key)`. The reported quantity is
//! `Δ((Z, K), U_{|z|} ⊗ K)`, computed exactly by enumerating every source
//! outcome with integer counts, or estimated with `mc_distance`. Different
//! keys may carry different `z` widths, which happens when the faulty set
//! varies and is therefore part of the key.

use super::config::NetworkConfig;
use super::gadgets::GeqrGadgets;
use super::model::{Draw, SourceModel};
use super::protocols::run_geqr;
use super::sched::{Adversary, ProtocolRun};
use super::strategies::{FnIr, FnQr};
use crate::bits::BitString;
use crate::error::{invalid, Error, Result};
use crate::exact::ExactValue;
use crate::oracle::mc::{mc_distance, McReport};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::sync::Arc;

/// One equally weighted observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    pub z: u64,
    /// Zero when the tested set has no honest member in this run.
    pub z_width: u32,
    pub key: Vec<u64>,
}

fn event_words(run: &ProtocolRun, out: &mut Vec<u64>) {
    for e in &run.events {
        out.push((e.round as u64) << 56 | (e.sender as u64) << 40 | (e.faulty as u64) << 32 | e.msg.value() as u64);
    }
}

fn output_word(z: Option<BitString>) -> u64 {
    z.map(|z| 1 << 32 | z.value() as u64).unwrap_or(0)
}

fn concat_outputs(run: &ProtocolRun, players: &[usize]) -> Result<(u64, u32)> {
    let mut z = 0u64;
    let mut w = 0u32;
    for &i in players {
        let o = run.outputs[i].ok_or_else(|| Error::InvalidInput(format!("honest player {i} has no output")))?;
        w += o.width();
        if w > 32 {
            return invalid("tested outputs exceed 32 bits");
        }
        z = z << o.width() | o.value() as u64;
    }
    Ok((z, w))
}

/// `(Z_{S′}, (Z_{−S′}, T, E))` with `S′ = S ∖ Faulty`.
pub fn observe_set(run: &ProtocolRun, draw: &Draw, set: &[usize]) -> Result<Observation> {
    let honest: Vec<usize> = set.iter().copied().filter(|&i| !run.is_faulty(i)).collect();
    let (z, z_width) = concat_outputs(run, &honest)?;
    let mut key: Vec<u64> = (0..run.outputs.len()).filter(|i| !honest.contains(i)).map(|i| output_word(run.outputs[i])).collect();
    event_words(run, &mut key);
    key.extend(draw.e.iter().map(|&e| e as u64));
    Ok(Observation { z, z_width, key })
}

/// `(Z_i, (X_{−i}, T, E))`; empty when `i` is faulty.
pub fn observe_strong(run: &ProtocolRun, draw: &Draw, i: usize) -> Result<Observation> {
    let mut key: Vec<u64> = draw.x.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x as u64).collect();
    event_words(run, &mut key);
    key.extend(draw.e.iter().map(|&e| e as u64));
    if run.is_faulty(i) {
        return Ok(Observation { z: 0, z_width: 0, key });
    }
    let (z, z_width) = concat_outputs(run, &[i])?;
    Ok(Observation { z, z_width, key })
}

/// Integer counts of `(key, z)` with a common total.
#[derive(Clone, Debug, Default)]
pub struct CountTable {
    cells: HashMap<Vec<u64>, (u32, HashMap<u64, u64>)>,
    total: u64,
}

impl CountTable {
    pub fn add(&mut self, o: Observation) -> Result<()> {
        let entry = self.cells.entry(o.key).or_insert_with(|| (o.z_width, HashMap::new()));
        if entry.0 != o.z_width {
            return invalid("one key observed with two output widths");
        }
        *entry.1.entry(o.z).or_insert(0) += 1;
        self.total += 1;
        Ok(())
    }

    pub fn merge(mut self, other: CountTable) -> Result<CountTable> {
        for (key, (w, zs)) in other.cells {
            let entry = self.cells.entry(key).or_insert_with(|| (w, HashMap::new()));
            if entry.0 != w {
                return invalid("one key observed with two output widths");
            }
            for (z, c) in zs {
                *entry.1.entry(z).or_insert(0) += c;
            }
        }
        self.total += other.total;
        Ok(self)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `Σ_z |2^w·c(z) − c_key|` for one key.
    fn key_numerator(w: u32, zs: &HashMap<u64, u64>) -> u128 {
        let ck: u128 = zs.values().map(|&c| c as u128).sum();
        let scale = 1u128 << w;
        let seen: u128 = zs.values().map(|&c| (scale * c as u128).abs_diff(ck)).sum();
        seen + (scale - zs.len() as u128) * ck
    }

    /// Exact distance from `U ⊗ K`.
    pub fn distance(&self) -> BigRational {
        if self.total == 0 {
            return BigRational::from_integer(0.into());
        }
        let wmax = self.cells.values().map(|(w, _)| *w).max().unwrap_or(0);
        let mut num = BigInt::from(0);
        for (w, zs) in self.cells.values() {
            num += BigInt::from(Self::key_numerator(*w, zs)) << (wmax - w) as usize;
        }
        let den = BigInt::from(self.total) << (wmax as usize + 1);
        BigRational::new(num, den)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum EvalMode {
    /// Every source outcome; run `i` uses seed `i`.
    Exact,
    Sampled { runs: usize, tol: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub view: String,
    pub value: f64,
    pub exact: Option<ExactValue>,
    pub mc: Option<McReport>,
    pub runs: u64,
}

type ObserveFn<'a> = dyn Fn(&Draw, u64) -> Result<Observation> + Sync + 'a;

/// Exact counts over every outcome of `model`.
pub fn exact_counts(model: &SourceModel, observe: &ObserveFn) -> Result<CountTable> {
    let n = model.check_exact()?;
    (0..n)
        .into_par_iter()
        .try_fold(CountTable::default, |mut t, i| {
            t.add(observe(&model.outcome(i), i)?)?;
            Ok(t)
        })
        .try_reduce(CountTable::default, |a, b| a.merge(b))
}

fn key_hash(o: &Observation) -> u64 {
    let mut h = Sha256::new();
    h.update(o.z_width.to_le_bytes());
    for k in &o.key {
        h.update(k.to_le_bytes());
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// Distance of the view `observe` over the source model.
pub fn evaluate_security(model: &SourceModel, view: &str, mode: EvalMode, observe: &ObserveFn) -> Result<DistanceReport> {
    match mode {
        EvalMode::Exact => {
            let t = exact_counts(model, observe)?;
            let d = t.distance();
            let ev = ExactValue::from_rational(&d);
            Ok(DistanceReport { view: view.into(), value: ev.approx, exact: Some(ev), mc: None, runs: t.total() })
        }
        EvalMode::Sampled { runs, tol, seed } => {
            let probe = observe(&model.outcome(0), 0)?;
            let m = probe.z_width;
            if m == 0 || m > 16 {
                return invalid(format!("sampled evaluation needs a fixed output width in 1..=16, got {m}"));
            }
            let sampler = |rng: &mut ChaCha8Rng| {
                let draw = model.draw(rng);
                let run_seed: u64 = rng.gen();
                match observe(&draw, run_seed) {
                    Ok(o) if o.z_width == m => (o.z as u32, key_hash(&o)),
                    _ => (u32::MAX, 0),
                }
            };
            let r = mc_distance(sampler, m, runs, tol, seed).map_err(|e| match e {
                Error::InvalidInput(msg) if msg.contains("exceeds") => Error::InvalidInput("a sampled run failed or changed the output width".into()),
                e => e,
            })?;
            Ok(DistanceReport { view: view.into(), value: r.estimate, exact: None, mc: Some(r), runs: runs as u64 })
        }
    }
}

/// Set error against the sum of individual strong errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridReport {
    pub set: Vec<usize>,
    pub set_error: ExactValue,
    pub strong_errors: Vec<(usize, ExactValue)>,
    pub sum: ExactValue,
    pub holds: bool,
}

pub type RunFn<'a> = dyn Fn(&Draw, u64) -> Result<ProtocolRun> + Sync + 'a;

/// Exact `Δ(Z_{S′}, Z_{−S′}, T, E)` and `Σ_i Δ(Z_i, X_{−i}, T, E)` over `S`.
pub fn hybrid_union(model: &SourceModel, set: &[usize], run: &RunFn) -> Result<HybridReport> {
    let set_err = exact_counts(model, &|d, s| observe_set(&run(d, s)?, d, set))?.distance();
    let mut strong = Vec::new();
    let mut sum = BigRational::from_integer(0.into());
    for &i in set {
        let e = exact_counts(model, &|d, s| observe_strong(&run(d, s)?, d, i))?.distance();
        sum += &e;
        strong.push((i, ExactValue::from_rational(&e)));
    }
    Ok(HybridReport { set: set.to_vec(), holds: set_err <= sum, set_error: ExactValue::from_rational(&set_err), strong_errors: strong, sum: ExactValue::from_rational(&sum) })
}

/// Exact optimal rushing against GE-QR with one statically corrupted group
/// member, for IR and QR-analog adversaries.
#[derive(Clone, Debug)]
pub struct RushingOptimum {
    pub faulty: usize,
    pub set: Vec<usize>,
    pub ir: BigRational,
    pub qr: BigRational,
    /// Bits of `y` the faulty group controls.
    pub rush_bits: u32,
    /// Honest round-1 messages `τ` → rushed source.
    pub ir_table: HashMap<Vec<u32>, u32>,
    /// `(τ, e)` → rushed source.
    pub qr_table: HashMap<(Vec<u32>, Vec<u32>), u32>,
}

impl RushingOptimum {
    /// `QR ≤ 2^{rush bits}·IR`, as an exact comparison.
    pub fn lift_holds(&self) -> bool {
        self.qr <= &self.ir * BigRational::from_integer(BigInt::from(1) << self.rush_bits as usize)
    }

    fn tau(view: &super::sched::PublicView) -> Vec<u32> {
        let mut h: Vec<(usize, u32)> = view.honest_this_round().map(|e| (e.sender, e.msg.value())).collect();
        h.sort_unstable();
        h.into_iter().map(|(_, v)| v).collect()
    }

    pub fn ir_strategy(&self) -> FnIr {
        let table = Arc::new(self.ir_table.clone());
        FnIr {
            label: "ir-optimal".into(),
            players: vec![self.faulty],
            rush: Arc::new(move |view, req| {
                let v = table.get(&Self::tau(view)).copied().unwrap_or(0);
                BitString::new(req.width, v).expect("tabled value fits")
            }),
        }
    }

    pub fn qr_strategy(&self) -> FnQr {
        let table = Arc::new(self.qr_table.clone());
        FnQr {
            label: "qr-optimal".into(),
            players: vec![self.faulty],
            rush: Arc::new(move |view, side, req| {
                let v = table.get(&(Self::tau(view), side.values.to_vec())).copied().unwrap_or(0);
                BitString::new(req.width, v).expect("tabled value fits")
            }),
        }
    }
}

fn fixed_rush(faulty: usize, value: u32) -> Adversary {
    Adversary::Ir(Box::new(FnIr {
        label: "fixed".into(),
        players: vec![faulty],
        rush: Arc::new(move |_, req| BitString::new(req.width, value).expect("rush value fits")),
    }))
}

/// `IR* = Σ_τ max_r Σ_e d(τ,e,r)` and `QR* = Σ_{τ,e} max_r d(τ,e,r)`, where
/// `d(τ,e,r)` is the distance mass of `(Z_S, Z_{−S}, T, E)` at honest
/// transcript `τ` and leak `e` when the faulty member publishes `r`. Rushed
/// sources that give the same group seed are merged, so `r` ranges over at
/// most `2^{⌊k/s⌋}` values.
pub fn geqr_rushing_optimum(cfg: &NetworkConfig, gadgets: &GeqrGadgets, model: &SourceModel, faulty: usize, set: &[usize]) -> Result<RushingOptimum> {
    let groups = cfg.groups()?;
    let Some(gi) = groups.groups.iter().position(|g| g.contains(&faulty)) else {
        return invalid(format!("player {faulty} is not in a group"));
    };
    if set.iter().any(|i| !groups.b.contains(i)) {
        return invalid("tested players must lie in B");
    }
    let w = cfg.group_seed_width()?;
    let n = cfg.n;
    // The faulty member's own source never influences the fixed strategies.
    let mut fixed = model.clone();
    let keep = fixed.sources[faulty].support()[0];
    fixed.sources[faulty] = crate::source::FlatSource::new(n, vec![keep])?;
    let outcomes = fixed.check_exact()?;
    let senders: Vec<usize> = groups.groups.iter().flatten().copied().filter(|&i| i != faulty).collect();
    let group = &groups.groups[gi];

    // Representative rushed sources per τ: distinct group seeds.
    let reps = |draw: &Draw| -> Result<Vec<u32>> {
        let mut seen: Vec<(u32, u32)> = Vec::new();
        for r in 0..1u32 << n {
            let inputs: Vec<u32> = group.iter().map(|&i| if i == faulty { r } else { draw.x[i] }).collect();
            let y = gadgets.iext.eval_raw(&inputs) >> (gadgets.iext.out_width - w);
            if !seen.iter().any(|&(s, _)| s == y) {
                seen.push((y, r));
            }
        }
        Ok(seen.into_iter().map(|(_, r)| r).collect())
    };

    type Cell = HashMap<u32, CountTable>;
    let mut by_tau: HashMap<Vec<u32>, HashMap<Vec<u32>, Cell>> = HashMap::new();
    for idx in 0..outcomes {
        let draw = fixed.outcome(idx);
        let tau: Vec<u32> = senders.iter().map(|&i| draw.x[i]).collect();
        for r in reps(&draw)? {
            let mut adv = fixed_rush(faulty, r);
            let run = run_geqr(cfg, gadgets, &fixed, &draw, &mut adv, idx)?;
            let o = observe_set(&run.run, &draw, set)?;
            by_tau.entry(tau.clone()).or_default().entry(draw.e.clone()).or_default().entry(r).or_default().add(o)?;
        }
    }
    let (mut ir_num, mut qr_num) = (0u128, 0u128);
    let mut ir_table = HashMap::new();
    let mut qr_table = HashMap::new();
    let zw = set.len() as u32 * gadgets.qtext.out_width;
    for (tau, by_e) in &by_tau {
        let mut per_r: HashMap<u32, u128> = HashMap::new();
        for (e, by_r) in by_e {
            let mut best: Option<(u128, u32)> = None;
            let mut rs: Vec<&u32> = by_r.keys().collect();
            rs.sort_unstable();
            for r in rs {
                let t = &by_r[r];
                let num: u128 = t.cells.values().map(|(w, zs)| CountTable::key_numerator(*w, zs) << (zw - w)).sum();
                *per_r.entry(*r).or_insert(0) += num;
                if best.map(|(b, _)| num > b).unwrap_or(true) {
                    best = Some((num, *r));
                }
            }
            let (b, r) = best.expect("at least one rush value");
            qr_num += b;
            qr_table.insert((tau.clone(), e.clone()), r);
        }
        let mut rs: Vec<(&u32, &u128)> = per_r.iter().collect();
        rs.sort_unstable();
        let (r, b) = rs.into_iter().fold((0u32, None::<u128>), |(br, bb), (r, &v)| if bb.map(|b| v > b).unwrap_or(true) { (*r, Some(v)) } else { (br, bb) });
        ir_num += b.expect("at least one rush value");
        ir_table.insert(tau.clone(), r);
    }
    let den = BigInt::from(outcomes) << (zw as usize + 1);
    Ok(RushingOptimum {
        faulty,
        set: set.to_vec(),
        ir: BigRational::new(BigInt::from(ir_num), den.clone()),
        qr: BigRational::new(BigInt::from(qr_num), den),
        rush_bits: w,
        ir_table,
        qr_table,
    })
}
