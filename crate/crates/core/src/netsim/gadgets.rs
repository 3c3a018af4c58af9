//! Gadget slots for the network protocols, instantiated at desk scale.
//!
//! Extractor slots are random tables measured by the oracle. A slot whose
//! exact measurement exceeds the budget falls back to sampled measurement,
//! and its error is then a lower bound; `exact` records which one applies.

use super::config::{NetworkConfig, ProtocolKind};
use crate::combinatorics::search::{search_gadget, GadgetTarget, SearchOptions, SearchRecord};
use crate::combinatorics::BipartiteGraph;
use crate::error::{invalid, Error, Result};
use crate::exact::ExactValue;
use crate::extractors::certify::draw_table;
use crate::extractors::{certify_random_table, Arity, CertifyRequest, EvalFn, ExtractorHandle, Provenance};
use crate::oracle::{worst_case_error, OracleInput, OracleMode, OracleQuery, DEFAULT_BUDGET};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

/// Measured error of one slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotError {
    pub slot: String,
    pub handle: String,
    pub eps: f64,
    /// False when the value is a sampled lower bound.
    pub exact: bool,
}

fn slot_seed(seed: u64, slot: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ slot
}

fn sampled(cfg: &NetworkConfig, slot: u64) -> OracleMode {
    OracleMode::Sampled { samples: cfg.gadgets.certify_samples, seed: slot_seed(cfg.gadgets.seed, slot) }
}

/// Certifies a table, exactly when the budget allows.
fn certify_slot(cfg: &NetworkConfig, slot: &str, id: u64, req: CertifyRequest, cache: Option<&Path>) -> Result<(ExtractorHandle, SlotError)> {
    let c = match certify_random_table(&req, cache) {
        Err(Error::BudgetExceeded { .. }) => certify_random_table(&req.mode(sampled(cfg, id)), cache)?,
        r => r?,
    };
    let eps = c.record.measured_f64();
    let err = SlotError { slot: slot.into(), handle: c.handle.name.clone(), eps, exact: c.record.exact };
    Ok((c.handle, err))
}

/// Worst-case distance of the first `w` bits of a flat `k`-source on `n` bits.
fn prefix_error(n: u32, k: u32, w: u32) -> f64 {
    let buckets = 2f64.powi(k as i32 - n as i32 + w as i32).max(1.0);
    1.0 - buckets / 2f64.powi(w as i32)
}

/// `d`-source slot: the explicit prefix map at `d = 1`, else a certified table.
fn iext_slot(cfg: &NetworkConfig, d: usize, out: u32, cache: Option<&Path>) -> Result<(ExtractorHandle, SlotError)> {
    let (n, k) = (cfg.n, cfg.k);
    if out > n {
        return invalid(format!("IExt output {out} exceeds source width {n}"));
    }
    if d == 1 {
        let shift = n - out;
        let f: EvalFn = Arc::new(move |v: &[u32]| v[0] >> shift);
        let eps = prefix_error(n, k, out);
        let h = ExtractorHandle::from_fn("prefix", Arity::MultiSource, vec![n], out, vec![k], eps, vec![], Provenance::Explicit, f)?;
        return Ok((h, SlotError { slot: "iext".into(), handle: "prefix".into(), eps, exact: true }));
    }
    let arity = if d == 2 { Arity::TwoSource } else { Arity::MultiSource };
    let req = CertifyRequest::new(arity, vec![n; d], vec![k; d], out, 1.0, slot_seed(cfg.gadgets.seed, 1));
    certify_slot(cfg, "iext", 1, req, cache)
}

/// Gadgets of ExtPub and ExtPri.
#[derive(Clone, Debug)]
pub struct ExtPubGadgets {
    pub iext: ExtractorHandle,
    /// `G`: left `[N]`, right `A`, degree `d₁`.
    pub disperser: BipartiteGraph,
    pub disperser_search: SearchRecord,
    /// `H`: left `[N] ⊇ B`, right `[N]` (the left side of `G`).
    pub expander: BipartiteGraph,
    pub expander_search: SearchRecord,
    pub srext: ExtractorHandle,
    pub oaext: ExtractorHandle,
    pub errors: Vec<SlotError>,
}

/// Error budget of ExtPub followed by ExtPri.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtPubBudget {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    /// `ε₁ + ε₂` for each good `j ∈ B`.
    pub per_good: f64,
    /// `|B|·(ε₁ + ε₂)`.
    pub block: f64,
    /// `block + ε₃` for each honest `i ∈ B ∪ C`.
    pub private: f64,
    /// All three slot errors are exact.
    pub exact: bool,
}

impl ExtPubGadgets {
    pub fn build(cfg: &NetworkConfig, cache: Option<&Path>) -> Result<Self> {
        if cfg.protocol != ProtocolKind::ExtPub {
            return Err(Error::Config("ExtPub gadgets need protocol = ext-pub".into()));
        }
        let part = cfg.partition()?;
        let (a, b) = (part.a.len() as u32, part.b.len() as u32);
        let g = &cfg.gadgets;
        let d1 = cfg.d as u32;
        if d1 > a {
            return Err(Error::Config(format!("disperser degree d = {d1} exceeds |A| = {a}")));
        }
        let n_left = g.disperser_left.unwrap_or(a.max(b));
        if n_left < b {
            return Err(Error::Config(format!("disperser left side {n_left} smaller than |B| = {b}")));
        }
        let opts = SearchOptions::default();
        let dt = GadgetTarget::AndDisperser { l: n_left, r: a, d: d1, delta: g.disperser_delta, gamma: g.disperser_gamma };
        let (disperser, disperser_search) = search_gadget(&dt, slot_seed(g.seed, 10), opts)?;
        let d2 = g.expander_degree;
        if d2 == 0 || d2 > n_left {
            return Err(Error::Config(format!("expander degree {d2} outside 1..={n_left}")));
        }
        let et = GadgetTarget::Expander { l: n_left, r: n_left, d: d2, beta: g.expander_beta };
        let (expander, expander_search) = search_gadget(&et, slot_seed(g.seed, 11), opts)?;

        let m1 = g.iext_out;
        let (iext, e1) = iext_slot(cfg, cfg.d, m1, cache)?;
        let slice = cfg.slice_width();
        let seed_w = d2 * m1;
        let sr_req = CertifyRequest::new(Arity::TwoSource, vec![cfg.n, seed_w], vec![cfg.k, m1.min(seed_w)], 2 * slice, 1.0, slot_seed(g.seed, 2)).strong(vec![1]);
        let (srext, e2) = certify_slot(cfg, "srext", 2, sr_req, cache)?;
        let (oaext, e3) = oaext_slot(cfg, b)?;
        Ok(ExtPubGadgets { iext, disperser, disperser_search, expander, expander_search, srext, oaext, errors: vec![e1, e2, e3] })
    }

    pub fn budget(&self, b: usize) -> ExtPubBudget {
        let (e1, e2, e3) = (self.errors[0].eps, self.errors[1].eps, self.errors[2].eps);
        let block = b as f64 * (e1 + e2);
        ExtPubBudget { eps1: e1, eps2: e2, eps3: e3, per_good: e1 + e2, block, private: block + e3, exact: self.errors.iter().all(|e| e.exact) }
    }

    /// True when `G` can guarantee a non-empty good set against `t` faults:
    /// `⌈δ·|A|⌉ ≤ |A| − t`.
    pub fn disperser_applies(&self, cfg: &NetworkConfig) -> bool {
        let a = self.disperser.right() as u64;
        cfg.gadgets.disperser_delta.ceil_of(a) + cfg.t as u64 <= a
    }
}

/// `OAExt(x, y)` with `y` a two-block source of rate `½ + δ/4` per block,
/// strong in `y`.
fn oaext_slot(cfg: &NetworkConfig, b: u32) -> Result<(ExtractorHandle, SlotError)> {
    let half = b * cfg.slice_width();
    let rate = 0.5 + cfg.delta() / 4.0;
    let kb = ((rate * half as f64) - 1e-9).ceil().clamp(1.0, half as f64) as u32;
    let widths = vec![cfg.n, 2 * half];
    let m = cfg.gadgets.oaext_out;
    let table = draw_table(&widths, m, slot_seed(cfg.gadgets.seed, 3), 0)?;
    let inputs = vec![OracleInput::flat(cfg.n, cfg.k), OracleInput::block(half, half, kb, kb)];
    let q = OracleQuery::new(inputs).with_budget(DEFAULT_BUDGET);
    let report = match worst_case_error(&table, &q) {
        Err(Error::BudgetExceeded { .. }) => worst_case_error(&table, &q.with_mode(sampled(cfg, 3)))?,
        r => r?,
    };
    let exact = !report.lower_bound;
    let digest = table.digest();
    let prov = Provenance::CertifiedTable { record_id: format!("oaext-{}", &digest[..16]), measured: ExactValue::from_dyadic(report.value) };
    let eps = report.error_f64();
    let h = ExtractorHandle::from_table(format!("cert-{}", &digest[..12]), Arity::TwoSource, Arc::new(table), vec![cfg.k, 2 * kb], eps.min(1.0), vec![1], prov)?;
    Ok((h.clone(), SlotError { slot: "oaext".into(), handle: h.name, eps, exact }))
}

/// Gadgets of GE-QR.
#[derive(Clone, Debug)]
pub struct GeqrGadgets {
    pub iext: ExtractorHandle,
    /// `QTExt(x, y)`, strong in `y`.
    pub qtext: ExtractorHandle,
    pub errors: Vec<SlotError>,
}

/// Error budget of GE-QR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeqrBudget {
    pub eps1: f64,
    pub eps2: f64,
    /// `s·ε₁ + ε₂` against IR adversaries.
    pub ir: f64,
    /// Rushed bits of `y`, at most `⌊k/s⌋·t`.
    pub rush_bits: u32,
    /// `2^{rush bits}·ε₂ + s·ε₁` against QR-analog adversaries.
    pub qr: f64,
    pub exact: bool,
}

impl GeqrGadgets {
    pub fn build(cfg: &NetworkConfig, cache: Option<&Path>) -> Result<Self> {
        if cfg.protocol != ProtocolKind::Geqr {
            return Err(Error::Config("GE-QR gadgets need protocol = geqr".into()));
        }
        cfg.validate()?;
        let s = cfg.s.expect("validated") as u32;
        let w = cfg.group_seed_width()?;
        let (iext, e1) = iext_slot(cfg, cfg.d, w, cache)?;
        let yw = s * w;
        let ky = yw.saturating_sub(cfg.t.min(s as usize) as u32 * w).max(1);
        let req = CertifyRequest::new(Arity::TwoSource, vec![cfg.n, yw], vec![cfg.k, ky], cfg.gadgets.qtext_out, 1.0, slot_seed(cfg.gadgets.seed, 4)).strong(vec![1]);
        let (qtext, e2) = certify_slot(cfg, "qtext", 4, req, cache)?;
        Ok(GeqrGadgets { iext, qtext, errors: vec![e1, e2] })
    }

    pub fn budget(&self, cfg: &NetworkConfig) -> GeqrBudget {
        let s = cfg.s.unwrap_or(1);
        let w = cfg.group_seed_width().unwrap_or(1);
        let rush_bits = w * cfg.t.min(s) as u32;
        let (e1, e2) = (self.errors[0].eps, self.errors[1].eps);
        GeqrBudget {
            eps1: e1,
            eps2: e2,
            ir: s as f64 * e1 + e2,
            rush_bits,
            qr: 2f64.powi(rush_bits as i32) * e2 + s as f64 * e1,
            exact: self.errors.iter().all(|e| e.exact),
        }
    }
}
