//! Compositions of extractor handles and the parameter ledger.
//!
//! Every composition is a pure function of its component handles, so its
//! truth table is the object the oracle measures. Declared errors come from
//! an [`ErrorBudget`] over the components' ε values.

pub mod budget;
pub mod ledger;

pub use budget::{BudgetReport, ErrorBudget, ResidualConstants};
pub use ledger::{ledger_lift_one_bit, ledger_theorem, LedgerDefaults, LedgerEntry, TheoremId, TwoSourceParams};

use crate::bits::{mask, BitString};
use crate::error::{invalid, Result};
use crate::exact::ExactValue;
use crate::extractors::xtab::{write_xtab, XtabHeader};
use crate::extractors::{Arity, EvalFn, ExtractorHandle, Provenance};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

/// Constants for desk-scale instantiation of the compositions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionConfig {
    /// The fraction of `k₃` spent on the first-stage seed (`0.05` in the
    /// asymptotic statements).
    pub seed_fraction: f64,
    pub residuals: ResidualConstants,
    /// `C` in the weak-seed precondition `d ≤ k/C`.
    pub weak_seed_c: f64,
}

impl Default for CompositionConfig {
    fn default() -> Self {
        CompositionConfig { seed_fraction: 0.05, residuals: ResidualConstants::default(), weak_seed_c: 64.0 }
    }
}

impl CompositionConfig {
    /// `⌊seed_fraction·k₃⌋`, at least one bit.
    pub fn seed_width(&self, k3: u32) -> u32 {
        ((self.seed_fraction * k3 as f64).floor() as u32).max(1)
    }

    pub fn ledger_defaults(&self) -> LedgerDefaults {
        LedgerDefaults { residuals: self.residuals.clone(), seed_fraction: self.seed_fraction, weak_seed_c: self.weak_seed_c }
    }
}

/// A composed handle with its declared error budget.
#[derive(Clone, Debug)]
pub struct Composite {
    pub handle: ExtractorHandle,
    pub budget: ErrorBudget,
    /// Component ε values per budget symbol.
    pub assignment: BTreeMap<String, ExactValue>,
    pub constants: ResidualConstants,
}

impl Composite {
    pub fn total(&self) -> Result<f64> {
        self.budget.total(&self.assignment, &self.constants)
    }

    pub fn report(&self) -> Result<BudgetReport> {
        self.budget.report(&self.assignment, &self.constants)
    }

    /// Exact `measured ≤ budget total`.
    pub fn admits(&self, measured: &BigRational) -> Result<bool> {
        self.budget.admits(measured, &self.assignment, &self.constants)
    }

    /// Writes the composed truth table as an uncertified XTAB file.
    pub fn export_xtab(&self, path: &Path) -> Result<()> {
        let h = &self.handle;
        let table = h.truth_table()?;
        let header = XtabHeader {
            arity: h.arity,
            widths: h.input_widths.clone(),
            k: h.k.clone(),
            m: h.out_width,
            seed: 0,
            mode: 3,
            strong: h.strong.clone(),
        };
        let meta = serde_json::json!({
            "name": h.name,
            "provenance": h.provenance,
            "budget": self.report()?,
            "assignment": self.assignment,
            "digest": table.digest(),
        });
        write_xtab(path, &header, &table, &meta)
    }
}

/// The ε a component contributes: its measured value when certified.
pub fn component_eps(h: &ExtractorHandle) -> ExactValue {
    match &h.provenance {
        Provenance::CertifiedTable { measured, .. } => measured.clone(),
        _ => budget::declared(h.eps),
    }
}

fn seed_of(h: &ExtractorHandle, role: &str) -> Result<u32> {
    h.seed_width().map_or_else(|| invalid(format!("{role} ({}) must be a seeded extractor", h.name)), Ok)
}

fn composite_handle(
    name: String,
    arity: Arity,
    widths: Vec<u32>,
    out_width: u32,
    k: Vec<u32>,
    eps: f64,
    strong: Vec<usize>,
    parts: &[&ExtractorHandle],
    func: EvalFn,
) -> Result<ExtractorHandle> {
    let prov = Provenance::Composite { components: parts.iter().map(|h| h.name.clone()).collect() };
    ExtractorHandle::from_fn(name, arity, widths, out_width, k, eps.clamp(0.0, 1.0), strong, prov, func)
}

fn check_inputs(h: &ExtractorHandle, xs: &[BitString]) -> Result<Vec<u32>> {
    if xs.len() != h.input_widths.len() {
        return invalid(format!("{} takes {} inputs, got {}", h.name, h.input_widths.len(), xs.len()));
    }
    for (i, (x, &w)) in xs.iter().zip(&h.input_widths).enumerate() {
        if x.width() != w {
            return invalid(format!("{} input {i}: width {} vs {w}", h.name, x.width()));
        }
    }
    Ok(xs.iter().map(|x| x.value()).collect())
}

/// `Z = extq(X_{t+1}, iext(X₁, …, X_t))`, strong in `X₁..X_t`, error `ε₁+ε₂`.
pub fn qmext_handle(iext: &ExtractorHandle, extq: &ExtractorHandle, cfg: &CompositionConfig) -> Result<Composite> {
    let d = seed_of(extq, "extq")?;
    if iext.out_width != d {
        return invalid(format!("iext output width {} ≠ extq seed width {d}", iext.out_width));
    }
    let t = iext.input_widths.len();
    let mut widths = iext.input_widths.clone();
    widths.push(extq.input_widths[0]);
    let mut k = iext.k.clone();
    k.push(extq.k[0]);
    let (f1, f2) = (iext.func(), extq.func());
    let func: EvalFn = Arc::new(move |xs: &[u32]| f2(&[xs[t], f1(&xs[..t])]));
    let budget = ErrorBudget::new().term(1, "ε₁").term(1, "ε₂");
    let assignment: BTreeMap<String, ExactValue> =
        [("ε₁".to_string(), component_eps(iext)), ("ε₂".to_string(), component_eps(extq))].into();
    let eps = budget.total(&assignment, &cfg.residuals)?;
    let handle = composite_handle(
        format!("qmext({},{})", iext.name, extq.name),
        Arity::MultiSource,
        widths,
        extq.out_width,
        k,
        eps,
        (0..t).collect(),
        &[iext, extq],
        func,
    )?;
    Ok(Composite { handle, budget, assignment, constants: cfg.residuals.clone() })
}

pub fn qmext(iext: &ExtractorHandle, extq: &ExtractorHandle, inputs: &[BitString]) -> Result<BitString> {
    let c = qmext_handle(iext, extq, &CompositionConfig::default())?;
    let raw = check_inputs(&c.handle, inputs)?;
    BitString::new(c.handle.out_width, c.handle.eval_raw(&raw))
}

/// Alternating extraction over inputs `[X₁, X₂, X₃]`:
/// `R` = first `r` bits of `bext(X₁, X₃)`, `T = extc(X₂, R)`, `Z = extq(X₃, T)`.
///
/// Strong in the block `(X₁, X₂)`, error `4ε₁+2ε₂+ε₃+2^{−Ω(k₃)}`.
pub fn qbext_handle(bext: &ExtractorHandle, extc: &ExtractorHandle, extq: &ExtractorHandle, cfg: &CompositionConfig) -> Result<Composite> {
    if bext.input_widths.len() != 2 {
        return invalid("bext takes (X₁, X₃)");
    }
    let (n1, n3) = (bext.input_widths[0], bext.input_widths[1]);
    let k3 = bext.k[1];
    let r = seed_of(extc, "extc")?;
    let want = cfg.seed_width(k3);
    if r != want {
        return invalid(format!("extc seed width {r} ≠ ⌊{}·k₃⌋ = {want}", cfg.seed_fraction));
    }
    if r > bext.out_width {
        return invalid(format!("bext output width {} shorter than the seed {r}", bext.out_width));
    }
    let d3 = seed_of(extq, "extq")?;
    if extc.out_width != d3 {
        return invalid(format!("extc output width {} ≠ extq seed width {d3}", extc.out_width));
    }
    if extq.input_widths[0] != n3 {
        return invalid(format!("extq source width {} ≠ n₃ = {n3}", extq.input_widths[0]));
    }
    let n2 = extc.input_widths[0];
    let shift = bext.out_width - r;
    let (fb, fc, fq) = (bext.func(), extc.func(), extq.func());
    let func: EvalFn = Arc::new(move |xs: &[u32]| {
        let rr = fb(&[xs[0], xs[2]]) >> shift;
        let t = fc(&[xs[1], rr]);
        fq(&[xs[2], t])
    });
    let budget = ErrorBudget::new().term(4, "ε₁").term(2, "ε₂").term(1, "ε₃").residual("2^{-Ω(k₃)}", k3);
    let assignment: BTreeMap<String, ExactValue> = [
        ("ε₁".to_string(), component_eps(bext)),
        ("ε₂".to_string(), component_eps(extc)),
        ("ε₃".to_string(), component_eps(extq)),
    ]
    .into();
    let eps = budget.total(&assignment, &cfg.residuals)?;
    let handle = composite_handle(
        format!("qbext({},{},{})", bext.name, extc.name, extq.name),
        Arity::MultiSource,
        vec![n1, n2, n3],
        extq.out_width,
        vec![bext.k[0], extc.k[0], k3],
        eps,
        vec![0, 1],
        &[bext, extc, extq],
        func,
    )?;
    Ok(Composite { handle, budget, assignment, constants: cfg.residuals.clone() })
}

#[allow(clippy::too_many_arguments)]
pub fn qbext(
    bext: &ExtractorHandle,
    extc: &ExtractorHandle,
    extq: &ExtractorHandle,
    x1: &BitString,
    x2: &BitString,
    x3: &BitString,
    r_width: u32,
    cfg: &CompositionConfig,
) -> Result<BitString> {
    if extc.seed_width() != Some(r_width) {
        return invalid(format!("r_width {r_width} ≠ extc seed width"));
    }
    let c = qbext_handle(bext, extc, extq, cfg)?;
    let raw = check_inputs(&c.handle, &[x1.clone(), x2.clone(), x3.clone()])?;
    BitString::new(c.handle.out_width, c.handle.eval_raw(&raw))
}

/// A somewhere condenser: one input mapped to `rows` equal-width rows,
/// row 0 in the most significant bits.
#[derive(Clone, Debug)]
pub struct Condenser {
    pub handle: ExtractorHandle,
    pub rows: u32,
}

impl Condenser {
    pub fn new(handle: ExtractorHandle, rows: u32) -> Result<Self> {
        if handle.input_widths.len() != 1 {
            return invalid("a condenser takes one input");
        }
        if rows == 0 || handle.out_width % rows != 0 {
            return invalid(format!("output width {} does not split into {rows} rows", handle.out_width));
        }
        Ok(Condenser { handle, rows })
    }

    /// The single-row identity condenser.
    pub fn identity(n: u32) -> Result<Self> {
        let h = ExtractorHandle::from_fn("id", Arity::MultiSource, vec![n], n, vec![n], 0.0, vec![], Provenance::Explicit, Arc::new(|xs: &[u32]| xs[0]))?;
        Self::new(h, 1)
    }

    pub fn row_width(&self) -> u32 {
        self.handle.out_width / self.rows
    }
}

/// The condenser → Raz → SRExt stages of the block extractor.
#[derive(Clone, Debug)]
pub struct BextSlots {
    pub cond: Condenser,
    /// Two-source `(Y_i, X₃)`; the first `ℓ` output bits are kept.
    pub raz: ExtractorHandle,
    /// Two-source `(X₂, W₃)` with `W₃` of width `D·ℓ`.
    pub srext: ExtractorHandle,
}

struct BextPlan {
    widths: [u32; 3],
    ell: u32,
}

fn bext_plan(s: &BextSlots, ext_last: &ExtractorHandle, k3: u32, cfg: &CompositionConfig) -> Result<BextPlan> {
    let n1 = s.cond.handle.input_widths[0];
    if s.raz.input_widths.len() != 2 || s.raz.input_widths[0] != s.cond.row_width() {
        return invalid(format!("raz slot must take (row of width {}, X₃)", s.cond.row_width()));
    }
    let n3 = s.raz.input_widths[1];
    if s.srext.input_widths.len() != 2 {
        return invalid("srext slot takes (X₂, W₃)");
    }
    let (n2, w3) = (s.srext.input_widths[0], s.srext.input_widths[1]);
    let d = s.cond.rows;
    if w3 % d != 0 {
        return invalid(format!("srext SR width {w3} is not a multiple of the {d} condenser rows"));
    }
    let ell = w3 / d;
    if ell > s.raz.out_width {
        return invalid(format!("ℓ = {ell} exceeds raz output width {}", s.raz.out_width));
    }
    let budget = cfg.seed_width(k3);
    if d * ell > budget {
        return invalid(format!("Dℓ ≤ {}·k₃ violated: D·ℓ = {} > {budget}", cfg.seed_fraction, d * ell));
    }
    let v = seed_of(ext_last, "ext_last")?;
    if s.srext.out_width != v {
        return invalid(format!("srext output width {} ≠ ext_last seed width {v}", s.srext.out_width));
    }
    if ext_last.input_widths[0] != n3 {
        return invalid(format!("ext_last source width {} ≠ n₃ = {n3}", ext_last.input_widths[0]));
    }
    Ok(BextPlan { widths: [n1, n2, n3], ell })
}

fn bext_func(s: &BextSlots, ext_last: &ExtractorHandle, ell: u32) -> EvalFn {
    let (fc, fr, fs, fz) = (s.cond.handle.func(), s.raz.func(), s.srext.func(), ext_last.func());
    let (rows, rw, raz_shift) = (s.cond.rows, s.cond.row_width(), s.raz.out_width - ell);
    Arc::new(move |xs: &[u32]| {
        let y = fc(&[xs[0]]);
        let mut w3 = 0u32;
        for i in 0..rows {
            let row = (y >> (rw * (rows - 1 - i))) & mask(rw);
            w3 = (w3 << ell) | (fr(&[row, xs[2]]) >> raz_shift);
        }
        let v = fs(&[xs[1], w3]);
        fz(&[xs[2], v])
    })
}

/// The block+general extractor over `[X₁, X₂, X₃]` with block `(X₁, X₂)`;
/// `k` is the block profile `[k₁, k₂, k₃]`. Error `2^{−Ω(k)}+ε` with
/// `k = min(k₁, k₂, k₃)` and `ε` the last stage's error.
pub fn bext_handle(slots: &BextSlots, ext_last: &ExtractorHandle, k: [u32; 3], cfg: &CompositionConfig) -> Result<Composite> {
    let plan = bext_plan(slots, ext_last, k[2], cfg)?;
    if k.iter().zip(&plan.widths).any(|(k, w)| k > w) {
        return invalid("block profile exceeds input widths");
    }
    let func = bext_func(slots, ext_last, plan.ell);
    let kmin = *k.iter().min().unwrap();
    let budget = ErrorBudget::new().term(1, "ε").residual("2^{-Ω(k)}", kmin);
    let assignment: BTreeMap<String, ExactValue> = [("ε".to_string(), component_eps(ext_last))].into();
    let eps = budget.total(&assignment, &cfg.residuals)?;
    let handle = composite_handle(
        format!("bext({},{},{},{})", slots.cond.handle.name, slots.raz.name, slots.srext.name, ext_last.name),
        Arity::MultiSource,
        plan.widths.to_vec(),
        ext_last.out_width,
        k.to_vec(),
        eps,
        vec![0, 1],
        &[&slots.cond.handle, &slots.raz, &slots.srext, ext_last],
        func,
    )?;
    Ok(Composite { handle, budget, assignment, constants: cfg.residuals.clone() })
}

pub fn bext_three_source(
    slots: &BextSlots,
    ext_last: &ExtractorHandle,
    x1: &BitString,
    x2: &BitString,
    x3: &BitString,
    cfg: &CompositionConfig,
) -> Result<BitString> {
    let plan = bext_plan(slots, ext_last, x3.width(), cfg)?;
    let xs = [x1.clone(), x2.clone(), x3.clone()];
    for (i, (x, w)) in xs.iter().zip(plan.widths).enumerate() {
        if x.width() != w {
            return invalid(format!("input {i}: width {} vs {w}", x.width()));
        }
    }
    let f = bext_func(slots, ext_last, plan.ell);
    BitString::new(ext_last.out_width, f(&[x1.value(), x2.value(), x3.value()]))
}

/// Seeded extractor `[X, R]` whose weak seed `R` of width `d′` is split into
/// halves `(R₁, R₂)` and fed as the block source of the block extractor, with
/// `base` as its last stage. Declared error `ε+2^{−Ω(d)}`, strong in the seed.
pub fn weak_seed_transform(base: &ExtractorHandle, slots: &BextSlots, delta: f64, cfg: &CompositionConfig) -> Result<Composite> {
    let d = seed_of(base, "base")?;
    let (n, k) = (base.input_widths[0], base.k[0]);
    if d as f64 > k as f64 / cfg.weak_seed_c {
        return invalid(format!("d ≤ k/C violated: d = {d}, k = {k}, C = {}", cfg.weak_seed_c));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return invalid(format!("δ = {delta} outside (0, 1/2)"));
    }
    let half = slots.cond.handle.input_widths[0];
    if slots.srext.input_widths[0] != half {
        return invalid(format!("seed halves differ: {half} vs {}", slots.srext.input_widths[0]));
    }
    let dp = 2 * half;
    if dp > cfg.residuals.big_o * d {
        return invalid(format!("d′ = {dp} exceeds O(d) = {}·{d}", cfg.residuals.big_o));
    }
    let bk1 = (delta * dp as f64).ceil() as u32;
    let bk2 = (delta * dp as f64 / 2.0).ceil() as u32;
    let inner = bext_handle(slots, base, [bk1.min(half), bk2.min(half), k], cfg)?;
    let f = inner.handle.func();
    let func: EvalFn = Arc::new(move |xs: &[u32]| f(&[xs[1] >> half, xs[1] & mask(half), xs[0]]));
    let budget = ErrorBudget::new().term(1, "ε").residual("2^{-Ω(d)}", d);
    let assignment: BTreeMap<String, ExactValue> = [("ε".to_string(), component_eps(base))].into();
    let eps = budget.total(&assignment, &cfg.residuals)?;
    let k_out = ((1.2 * k as f64).ceil() as u32).min(n);
    let seed_k = (((0.5 + delta) * dp as f64).ceil() as u32).min(dp);
    let handle = composite_handle(
        format!("weak-seed({})", base.name),
        Arity::Seeded,
        vec![n, dp],
        base.out_width,
        vec![k_out, seed_k],
        eps,
        vec![1],
        &[base, &slots.cond.handle, &slots.raz, &slots.srext],
        func,
    )?;
    Ok(Composite { handle, budget, assignment, constants: cfg.residuals.clone() })
}

/// The block extractor with two independent short seeds `(X₁, X₂)` as the
/// block and `X₃` as the general source; strong in `(X₁, X₂)`.
pub fn three_source_handle(slots: &BextSlots, ext_last: &ExtractorHandle, delta: f64, k3: u32, cfg: &CompositionConfig) -> Result<Composite> {
    let d = slots.cond.handle.input_widths[0];
    if slots.srext.input_widths[0] != d {
        return invalid("short seeds must share one width d");
    }
    let bk = ((delta * d as f64).ceil() as u32).min(d);
    let mut c = bext_handle(slots, ext_last, [bk, bk, k3], cfg)?;
    c.handle.name = format!("three-source({})", ext_last.name);
    Ok(c)
}

pub fn three_source_short_seeds(
    x1: &BitString,
    x2: &BitString,
    x3: &BitString,
    slots: &BextSlots,
    ext_last: &ExtractorHandle,
    cfg: &CompositionConfig,
) -> Result<BitString> {
    if x1.width() != x2.width() {
        return invalid("short seeds must share one width d");
    }
    bext_three_source(slots, ext_last, x1, x2, x3, cfg)
}
