//! Ground truth for extractor error.
//!
//! [`worst_case_error`] maximizes over flat sources (and, optionally, a finite
//! leakage family) with exact dyadic arithmetic. Flat sources suffice: the
//! statistical distance is convex in each source distribution, and every
//! min-entropy-`k` distribution is a convex combination of flat `k`-sources.
//! [`mc`] estimates distances by sampling; [`lemmas`] evaluates both sides of
//! the supporting inequalities.

mod flat;
pub mod lemmas;
pub mod mc;

pub use lemmas::{check_lemma, lemma_trials, random_joint, LemmaId, LemmaInstance, LemmaVerdict, TrialSummary};
pub use mc::{mc_distance, McReport};

use crate::error::{invalid, Result};
use crate::exact::{Dyadic, ExactValue};
use crate::extractors::{Arity, ExtractorHandle, TruthTable};
use crate::leakage::LeakModel;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Default step budget.
pub const DEFAULT_BUDGET: u128 = 20_000_000_000;

/// Largest leak width enumerated over all maps.
pub const MAX_ENUMERATED_LEAK_BITS: u32 = 2;

/// How the maximization is carried out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    /// Every configuration of every input, including strong inputs.
    Exhaustive,
    /// Exact, with strong or test-set inputs solved by top-`2^k` selection.
    Reduced,
    /// Random configurations plus local search; a lower bound.
    Sampled { samples: usize, seed: u64 },
}

impl OracleMode {
    pub fn is_exact(&self) -> bool {
        !matches!(self, OracleMode::Sampled { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum InputClass {
    /// Flat `k`-sources.
    Flat { k: u32 },
    /// Two-block source: `k1` bits in the first `first_width` bits, then `k2`
    /// bits conditioned on any prefix.
    Block { first_width: u32, k1: u32, k2: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleInput {
    pub width: u32,
    pub class: InputClass,
    /// Included in the conditioning part of the distance.
    pub strong: bool,
}

impl OracleInput {
    pub fn flat(width: u32, k: u32) -> Self {
        OracleInput { width, class: InputClass::Flat { k }, strong: false }
    }

    /// A uniform seed.
    pub fn uniform(width: u32) -> Self {
        Self::flat(width, width)
    }

    pub fn block(first_width: u32, second_width: u32, k1: u32, k2: u32) -> Self {
        OracleInput { width: first_width + second_width, class: InputClass::Block { first_width, k1, k2 }, strong: true }
    }

    pub fn strong(mut self, strong: bool) -> Self {
        self.strong = strong;
        self
    }
}

/// Entropy accounting for a leaked input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accounting {
    /// `H_min(X | E) ≥ k`: supports of size `2^j`, `j ≥ k`, with at most
    /// `2^{j−k}` leak values.
    Conditional,
    /// `H_min(X) ≥ k` before the leak: supports of size `2^k`.
    Marginal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum MapFamily {
    /// Every deterministic map into `bits` bits, up to relabeling.
    AllUpTo { bits: u32 },
    /// Explicit maps, each a table of `2^width` leak values.
    Explicit { e_width: u32, maps: Vec<Vec<u32>> },
}

/// Finite leakage family; one target leaks at a time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakFamily {
    pub targets: Vec<usize>,
    pub maps: MapFamily,
    pub accounting: Accounting,
    pub model: LeakModel,
}

impl LeakFamily {
    /// OA leakage from any of `targets` through every map into `bits` bits.
    pub fn oa_all_maps(targets: Vec<usize>, bits: u32, accounting: Accounting) -> Result<Self> {
        if bits > MAX_ENUMERATED_LEAK_BITS {
            return invalid(format!("b={bits} exceeds the enumerable cap {MAX_ENUMERATED_LEAK_BITS}; pass explicit maps"));
        }
        Ok(LeakFamily { targets, maps: MapFamily::AllUpTo { bits }, accounting, model: LeakModel::Oa })
    }

    pub fn explicit(targets: Vec<usize>, e_width: u32, maps: Vec<Vec<u32>>, accounting: Accounting) -> Result<Self> {
        if e_width > 8 {
            return invalid("explicit leak width above 8 bits");
        }
        if maps.iter().flatten().any(|&e| (e as u64) >> e_width != 0) {
            return invalid("leakage map output exceeds declared width");
        }
        Ok(LeakFamily { targets, maps: MapFamily::Explicit { e_width, maps }, accounting, model: LeakModel::Oa })
    }

    fn validate(&self, inputs: &[OracleInput]) -> Result<()> {
        if self.targets.iter().any(|&t| t >= inputs.len()) {
            return invalid("leak target outside inputs");
        }
        if let MapFamily::Explicit { maps, .. } = &self.maps {
            for &t in &self.targets {
                if maps.iter().any(|m| m.len() != 1usize << inputs[t].width) {
                    return invalid(format!("explicit map length must be 2^{}", inputs[t].width));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessLeak {
    pub input: usize,
    /// Leak value of each support element, in support order.
    pub labels: Vec<u8>,
}

/// The maximizing configuration.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Witness {
    /// Flat support per input; for a block input, the first-block support.
    pub supports: Vec<Vec<u32>>,
    /// Second-block supports, one per first-block value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_children: Option<Vec<Vec<u32>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leak: Option<WitnessLeak>,
    /// Distinguishing output sets per leak value (bitmask over outputs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_sets: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleQuery {
    pub inputs: Vec<OracleInput>,
    pub leak: Option<LeakFamily>,
    pub mode: OracleMode,
    pub budget: u128,
}

impl OracleQuery {
    pub fn new(inputs: Vec<OracleInput>) -> Self {
        OracleQuery { inputs, leak: None, mode: OracleMode::Reduced, budget: DEFAULT_BUDGET }
    }

    pub fn with_leak(mut self, leak: LeakFamily) -> Self {
        self.leak = Some(leak);
        self
    }

    pub fn with_mode(mut self, mode: OracleMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    /// Same query with exactly `strong` in the conditioning part.
    pub fn with_strong(&self, strong: &[usize]) -> Self {
        let mut q = self.clone();
        for (i, inp) in q.inputs.iter_mut().enumerate() {
            inp.strong = strong.contains(&i);
        }
        q
    }
}

/// Mode and budget shared by the handle-level entry points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub mode: OracleMode,
    pub budget: u128,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { mode: OracleMode::Reduced, budget: DEFAULT_BUDGET }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportMode {
    Exhaustive,
    Sampled,
}

/// Sampled reports: the measured value is attained, so it lower-bounds the
/// worst case; with 99% confidence at most `exceed_fraction` of random
/// configurations do better than the search's starting draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Confidence {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub exceed_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongError {
    pub index: usize,
    pub error: ExactValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub mode: ReportMode,
    pub error: ExactValue,
    /// True for sampled searches and GE leakage families.
    pub lower_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<Confidence>,
    pub witness: Witness,
    /// Error with each strong index alone in the conditioning part.
    pub strong_errors: Vec<StrongError>,
    pub enumerated: u64,
    pub steps: u64,
    pub wall_ms: u64,
    #[serde(skip)]
    pub value: Dyadic,
}

impl OracleReport {
    pub fn error_f64(&self) -> f64 {
        self.value.to_f64()
    }

    /// Largest per-index strong error, or the plain error when none is declared.
    pub fn max_strong(&self) -> Dyadic {
        self.strong_errors.iter().map(|s| dyadic_of(&s.error)).max().unwrap_or(self.value)
    }
}

fn dyadic_of(v: &ExactValue) -> Dyadic {
    let r = v.parse().expect("oracle values are well formed");
    let den = r.denom().clone();
    let exp = den.bits() - 1;
    let num: u128 = r.numer().try_into().expect("oracle numerators fit u128");
    Dyadic::new(num, exp as u32)
}

/// Total steps for a query (max over leak targets).
pub fn estimate_steps(table: &TruthTable, q: &OracleQuery) -> Result<u128> {
    let mut total: u128 = 0;
    for t in leak_targets(q)? {
        let plan = flat::Plan::new(table.words(), table.out_width(), &q.inputs, q.leak.as_ref(), t, q.mode)?;
        total = total.saturating_add(plan.cost().0);
    }
    Ok(total)
}

fn leak_targets(q: &OracleQuery) -> Result<Vec<Option<usize>>> {
    let Some(l) = &q.leak else { return Ok(vec![None]) };
    l.validate(&q.inputs)?;
    let mut t: Vec<Option<usize>> = l
        .targets
        .iter()
        .copied()
        .filter(|&i| !q.inputs[i].strong && matches!(q.inputs[i].class, InputClass::Flat { .. }))
        .map(Some)
        .collect();
    t.sort_unstable();
    t.dedup();
    if t.is_empty() {
        t.push(None);
    }
    Ok(t)
}

fn run_one(table: &TruthTable, q: &OracleQuery) -> Result<flat::Found> {
    let targets = leak_targets(q)?;
    let mut plans = Vec::with_capacity(targets.len());
    let mut steps: u128 = 0;
    for &t in &targets {
        let p = flat::Plan::new(table.words(), table.out_width(), &q.inputs, q.leak.as_ref(), t, q.mode)?;
        steps = steps.saturating_add(p.cost().0);
        plans.push(p);
    }
    if q.mode.is_exact() {
        flat::budget_check(steps, q.budget)?;
    }
    let mut best: Option<flat::Found> = None;
    let mut configs: u128 = 0;
    for p in plans {
        let f = match q.mode {
            OracleMode::Sampled { samples, seed } => p.run_sampled(samples.max(1), seed)?,
            _ => p.run()?,
        };
        configs = configs.saturating_add(f.configs);
        if best.as_ref().map(|b| f.value > b.value).unwrap_or(true) {
            best = Some(f);
        }
    }
    let mut best = best.expect("at least one leak target");
    best.configs = configs;
    best.steps = steps;
    Ok(best)
}

/// Worst-case distance of the table's output from uniform, jointly with
/// every strong input (and the leak, if any).
pub fn worst_case_error(table: &TruthTable, q: &OracleQuery) -> Result<OracleReport> {
    let start = Instant::now();
    if q.inputs.len() != table.widths().len() || q.inputs.iter().zip(table.widths()).any(|(i, &w)| i.width != w) {
        return invalid("query inputs do not match the table's widths");
    }
    let main = run_one(table, q)?;
    let strong: Vec<usize> = (0..q.inputs.len()).filter(|&i| q.inputs[i].strong).collect();
    let mut strong_errors = Vec::new();
    let mut enumerated = main.configs;
    let mut steps = main.steps;
    for &s in &strong {
        let v = if strong.len() == 1 {
            main.value
        } else {
            let f = run_one(table, &q.with_strong(&[s]))?;
            enumerated = enumerated.saturating_add(f.configs);
            steps = steps.saturating_add(f.steps);
            f.value
        };
        strong_errors.push(StrongError { index: s, error: ExactValue::from_dyadic(v) });
    }
    let sampled = matches!(q.mode, OracleMode::Sampled { .. });
    let ge = q.leak.as_ref().map(|l| l.model == LeakModel::Ge).unwrap_or(false);
    let confidence = match q.mode {
        OracleMode::Sampled { samples, .. } => Some(Confidence {
            level: 0.99,
            lower: main.value.to_f64(),
            upper: 1.0,
            exceed_fraction: (4.6 / samples.max(1) as f64).min(1.0),
        }),
        _ => None,
    };
    Ok(OracleReport {
        mode: if sampled { ReportMode::Sampled } else { ReportMode::Exhaustive },
        error: ExactValue::from_dyadic(main.value),
        lower_bound: sampled || ge,
        confidence,
        witness: main.witness,
        strong_errors,
        enumerated: enumerated.min(u64::MAX as u128) as u64,
        steps: steps.min(u64::MAX as u128) as u64,
        wall_ms: start.elapsed().as_millis() as u64,
        value: main.value,
    })
}

fn check_k(h: &ExtractorHandle, i: usize, k: u32) -> Result<()> {
    if k > h.input_widths[i] {
        return invalid(format!("k={k} exceeds input {i} width {}", h.input_widths[i]));
    }
    Ok(())
}

/// Two independent flat sources, optionally strong in one of them.
pub fn worst_case_error_2source(h: &ExtractorHandle, k1: u32, k2: u32, strong: Option<usize>, opts: OracleOptions) -> Result<OracleReport> {
    if h.input_widths.len() != 2 {
        return invalid(format!("{} is not a two-input extractor", h.name));
    }
    check_k(h, 0, k1)?;
    check_k(h, 1, k2)?;
    if strong.is_some_and(|s| s > 1) {
        return invalid("strong index must be 0 or 1");
    }
    let inputs = vec![
        OracleInput::flat(h.input_widths[0], k1).strong(strong == Some(0)),
        OracleInput::flat(h.input_widths[1], k2).strong(strong == Some(1)),
    ];
    let q = OracleQuery::new(inputs).with_mode(opts.mode).with_budget(opts.budget);
    worst_case_error(&*h.truth_table()?, &q)
}

/// Flat `k`-source with a uniform seed; strong means jointly with the seed.
pub fn worst_case_error_seeded(h: &ExtractorHandle, k: u32, strong: bool, opts: OracleOptions) -> Result<OracleReport> {
    if h.arity != Arity::Seeded {
        return invalid(format!("{} is not seeded", h.name));
    }
    check_k(h, 0, k)?;
    let inputs = vec![OracleInput::flat(h.input_widths[0], k), OracleInput::uniform(h.input_widths[1]).strong(strong)];
    let q = OracleQuery::new(inputs).with_mode(opts.mode).with_budget(opts.budget);
    worst_case_error(&*h.truth_table()?, &q)
}

/// Flat sources plus a leakage family on the non-strong inputs.
pub fn worst_case_error_leaked(
    h: &ExtractorHandle,
    family: &LeakFamily,
    k: &[u32],
    strong: &[usize],
    opts: OracleOptions,
) -> Result<OracleReport> {
    if k.len() != h.input_widths.len() {
        return invalid("k profile must match the inputs");
    }
    for (i, &ki) in k.iter().enumerate() {
        check_k(h, i, ki)?;
    }
    let inputs = (0..k.len()).map(|i| OracleInput::flat(h.input_widths[i], k[i]).strong(strong.contains(&i))).collect();
    let q = OracleQuery::new(inputs).with_leak(family.clone()).with_mode(opts.mode).with_budget(opts.budget);
    worst_case_error(&*h.truth_table()?, &q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractors::explicit::{ip_handle, toeplitz_handle};
    use crate::extractors::{EvalFn, Provenance};
    use std::sync::Arc;

    fn identity(n: u32) -> ExtractorHandle {
        let f: EvalFn = Arc::new(|v: &[u32]| v[0]);
        ExtractorHandle::from_fn("id", Arity::Seeded, vec![n, 1], n, vec![n, 1], 1.0, vec![], Provenance::Explicit, f).unwrap()
    }

    #[test]
    fn identity_error_closed_form() {
        for k in 0..4 {
            let r = worst_case_error_seeded(&identity(3), k, false, OracleOptions::default()).unwrap();
            let expect = 1.0 - 2f64.powi(k as i32 - 3);
            assert!((r.error_f64() - expect).abs() < 1e-15, "k={k}");
        }
    }

    #[test]
    fn full_entropy_is_single_pair() {
        let h = ip_handle(3).unwrap();
        let r = worst_case_error_2source(&h, 3, 3, None, OracleOptions::default()).unwrap();
        let t = h.truth_table().unwrap();
        let ones = t.words().iter().filter(|&&w| w == 1).count() as f64;
        assert!((r.error_f64() - (ones / 64.0 - 0.5).abs()).abs() < 1e-15);
        assert_eq!(r.enumerated, 1);
    }

    #[test]
    fn modes_agree_on_small_tables() {
        let h = ip_handle(3).unwrap();
        for strong in [None, Some(0), Some(1)] {
            let a = worst_case_error_2source(&h, 2, 1, strong, OracleOptions { mode: OracleMode::Exhaustive, budget: DEFAULT_BUDGET }).unwrap();
            let b = worst_case_error_2source(&h, 2, 1, strong, OracleOptions::default()).unwrap();
            assert_eq!(a.value, b.value, "strong={strong:?}");
        }
        let t = toeplitz_handle(3, 1).unwrap();
        let a = worst_case_error_seeded(&t, 1, true, OracleOptions { mode: OracleMode::Exhaustive, budget: DEFAULT_BUDGET }).unwrap();
        let b = worst_case_error_seeded(&t, 1, true, OracleOptions::default()).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn budget_is_enforced() {
        let h = ip_handle(4).unwrap();
        let e = worst_case_error_2source(&h, 2, 2, None, OracleOptions { mode: OracleMode::Reduced, budget: 10 }).unwrap_err();
        assert!(matches!(e, crate::Error::BudgetExceeded { .. }));
    }

    #[test]
    fn zero_bit_leak_is_no_leak() {
        let h = ip_handle(3).unwrap();
        let plain = worst_case_error_2source(&h, 2, 2, Some(1), OracleOptions::default()).unwrap();
        let fam = LeakFamily::oa_all_maps(vec![0], 0, Accounting::Marginal).unwrap();
        let leaked = worst_case_error_leaked(&h, &fam, &[2, 2], &[1], OracleOptions::default()).unwrap();
        assert_eq!(plain.value, leaked.value);
    }
}
