//! Bipartite gadgets: AND-dispersers, edge expanders and extractor graphs.
//!
//! Verification is exhaustive over subsets in colex order and counts with
//! integers only, so verdicts never depend on rounding. Candidate sets are
//! scanned in parallel batches; the reported witness is always the first
//! violation in colex order, whatever the thread count.

pub mod search;

pub use search::{search_gadget, GadgetTarget, SearchRecord};

use crate::enumerate::{binomial, mask_elements, ColexMasks};
use crate::error::{invalid, Error, Result};
use num_integer::Integer;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Default verification budget in elementary steps.
pub const DEFAULT_GRAPH_BUDGET: u128 = 20_000_000_000;

const BATCH: usize = 1 << 14;

/// A non-negative rational parameter such as δ or γ, kept exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Frac {
    pub num: u64,
    pub den: u64,
}

impl Frac {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return invalid("zero denominator");
        }
        let g = num.gcd(&den).max(1);
        Ok(Frac { num: num / g, den: den / g })
    }

    /// `⌈self · n⌉`.
    pub fn ceil_of(&self, n: u64) -> u64 {
        (self.num * n).div_ceil(self.den)
    }

    /// True when `self · n` is an integer.
    pub fn integral_on(&self, n: u64) -> bool {
        (self.num * n) % self.den == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Accepts `p/q`, a terminating decimal such as `0.3`, or an integer.
impl FromStr for Frac {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("not a fraction: {s}"));
        if let Some((p, q)) = s.split_once('/') {
            return Frac::new(p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let i: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let f: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        Frac::new(i.checked_mul(den).and_then(|v| v.checked_add(f)).ok_or_else(bad)?, den)
    }
}

impl Serialize for Frac {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Frac {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Left-regular bipartite graph with neighbor lists sorted and duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct BipartiteGraph {
    l: u32,
    r: u32,
    d: u32,
    adj: Vec<Vec<u32>>,
    masks: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    left: u32,
    right: u32,
    degree: u32,
    adjacency: Vec<Vec<u32>>,
}

impl TryFrom<GraphJson> for BipartiteGraph {
    type Error = Error;
    fn try_from(g: GraphJson) -> Result<Self> {
        let b = BipartiteGraph::new(g.right, g.adjacency)?;
        if b.l != g.left || b.d != g.degree {
            return invalid("declared left count or degree disagrees with adjacency");
        }
        Ok(b)
    }
}

impl From<BipartiteGraph> for GraphJson {
    fn from(g: BipartiteGraph) -> Self {
        GraphJson { left: g.l, right: g.r, degree: g.d, adjacency: g.adj }
    }
}

impl BipartiteGraph {
    /// Graph with `adj.len()` left vertices over `r ≤ 64` right vertices.
    pub fn new(r: u32, adj: Vec<Vec<u32>>) -> Result<Self> {
        if r == 0 || r > 64 {
            return invalid(format!("right side {r} outside 1..=64"));
        }
        if adj.is_empty() || adj.len() > 64 {
            return invalid("left side must have 1..=64 vertices");
        }
        let d = adj[0].len() as u32;
        let mut sorted = Vec::with_capacity(adj.len());
        let mut masks = Vec::with_capacity(adj.len());
        for (u, ns) in adj.into_iter().enumerate() {
            if ns.len() as u32 != d {
                return invalid(format!("left vertex {u} has degree {} instead of {d}", ns.len()));
            }
            let mut m = 0u64;
            for &v in &ns {
                if v >= r {
                    return invalid(format!("neighbor {v} of left vertex {u} is not below {r}"));
                }
                if m >> v & 1 == 1 {
                    return invalid(format!("multi-edge {u}–{v}"));
                }
                m |= 1 << v;
            }
            masks.push(m);
            sorted.push(mask_elements(m));
        }
        Ok(BipartiteGraph { l: sorted.len() as u32, r, d, adj: sorted, masks })
    }

    /// `u ↦ u` on `n` vertices.
    pub fn identity(n: u32) -> Result<Self> {
        Self::new(n, (0..n).map(|u| vec![u]).collect())
    }

    pub fn complete(l: u32, r: u32) -> Result<Self> {
        Self::new(r, (0..l).map(|_| (0..r).collect()).collect())
    }

    /// Every left vertex picks `d` distinct neighbors uniformly; stream `stream`
    /// of the generator seeded by `seed`.
    pub fn random(l: u32, r: u32, d: u32, seed: u64, stream: u64) -> Result<Self> {
        if d == 0 || d > r {
            return invalid(format!("degree {d} must be in 1..={r}"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let adj = (0..l).map(|_| sample(&mut rng, r as usize, d as usize).into_iter().map(|v| v as u32).collect()).collect();
        Self::new(r, adj)
    }

    pub fn left(&self) -> u32 {
        self.l
    }

    pub fn right(&self) -> u32 {
        self.r
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.adj[u as usize]
    }

    /// Neighborhood of `u` as a right-side bitmask.
    pub fn neighbor_mask(&self, u: u32) -> u64 {
        self.masks[u as usize]
    }

    /// `N(U)` for a left-side bitmask.
    pub fn neighborhood(&self, left: u64) -> u64 {
        mask_elements(left).iter().fold(0, |acc, &u| acc | self.masks[u as usize])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    /// No violation among the sampled sets.
    Probably,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyMode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub mode: VerifyMode,
    pub budget: u128,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { mode: VerifyMode::Exhaustive, budget: DEFAULT_GRAPH_BUDGET }
    }
}

impl VerifyOptions {
    pub fn sampled(samples: u64, seed: u64) -> Self {
        VerifyOptions { mode: VerifyMode::Sampled { samples, seed }, ..Self::default() }
    }
}

/// How a fractional set size became an integer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetSize {
    pub name: String,
    pub fraction: Frac,
    pub of: u64,
    /// `⌈fraction · of⌉`.
    pub size: u64,
    /// True when `fraction · of` was not an integer.
    pub rounded: bool,
}

impl SetSize {
    fn new(name: &str, fraction: Frac, of: u64) -> Self {
        SetSize { name: name.into(), fraction, of, size: fraction.ceil_of(of), rounded: !fraction.integral_on(of) }
    }
}

/// A violating configuration: left and right vertex sets plus the count that fell short.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphWitness {
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphVerdict {
    pub property: String,
    pub verdict: Verdict,
    pub sizes: Vec<SetSize>,
    pub witness: Option<GraphWitness>,
    /// Candidate sets examined.
    pub checked: u64,
}

impl GraphVerdict {
    /// True only for an exhaustive pass.
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

/// Scans `masks` in order and returns the first mask for which `bad` yields a
/// witness, together with the number of masks examined up to it.
fn first_violation<I, F>(masks: I, bad: F) -> (Option<GraphWitness>, u64)
where
    I: Iterator<Item = u64>,
    F: Fn(u64) -> Option<GraphWitness> + Sync,
{
    let mut masks = masks.peekable();
    let mut checked = 0u64;
    let mut batch = Vec::with_capacity(BATCH);
    while masks.peek().is_some() {
        batch.clear();
        batch.extend(masks.by_ref().take(BATCH));
        let hit = batch.par_iter().enumerate().find_map_first(|(i, &m)| bad(m).map(|w| (i, w)));
        if let Some((i, w)) = hit {
            return (Some(w), checked + i as u64 + 1);
        }
        checked += batch.len() as u64;
    }
    (None, checked)
}

fn random_masks(n: u32, k: u32, samples: u64, seed: u64) -> impl Iterator<Item = u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).map(move |_| sample(&mut rng, n as usize, k as usize).into_iter().fold(0u64, |m, i| m | 1 << i))
}

fn check_budget(required: u128, budget: u128) -> Result<()> {
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(())
}

fn finish(property: &str, sizes: Vec<SetSize>, found: (Option<GraphWitness>, u64), sampled: bool) -> GraphVerdict {
    let (witness, checked) = found;
    let verdict = match (&witness, sampled) {
        (Some(_), _) => Verdict::Fails,
        (None, false) => Verdict::Holds,
        (None, true) => Verdict::Probably,
    };
    GraphVerdict { property: property.into(), verdict, sizes, witness, checked }
}

fn unit_interval(name: &str, f: Frac) -> Result<()> {
    if f.num == 0 || f.num > f.den {
        return invalid(format!("{name} = {f} must lie in (0, 1]"));
    }
    Ok(())
}

/// AND-disperser test: every right set `V` with `|V| = ⌈δr⌉` fully contains
/// the neighborhoods of at least `⌈γl⌉` left vertices.
pub fn verify_and_disperser(g: &BipartiteGraph, delta: Frac, gamma: Frac, opts: VerifyOptions) -> Result<GraphVerdict> {
    unit_interval("δ", delta)?;
    unit_interval("γ", gamma)?;
    let v = SetSize::new("V", delta, g.r as u64);
    let u = SetSize::new("U", gamma, g.l as u64);
    let need = u.size;
    let bad = |vm: u64| {
        let inside = g.masks.iter().filter(|&&n| n & !vm == 0).count() as u64;
        (inside < need).then(|| GraphWitness { left: vec![], right: mask_elements(vm), count: inside })
    };
    let vs = v.size as u32;
    let found = match opts.mode {
        VerifyMode::Exhaustive => {
            check_budget(binomial(g.r as u64, vs as u64).saturating_mul(g.l as u128), opts.budget)?;
            first_violation(ColexMasks::new(g.r, vs), bad)
        }
        VerifyMode::Sampled { samples, seed } => first_violation(random_masks(g.r, vs, samples, seed), bad),
    };
    Ok(finish("and-disperser", vec![v, u], found, matches!(opts.mode, VerifyMode::Sampled { .. })))
}

/// Edge-expander test: every `U` of size `⌈βl⌉` and `V` of size `⌈βr⌉` share
/// an edge. Equivalent to `|N(U)| > r − |V|` for every `U`; the witness `V` is
/// the colex-first subset of the complement of `N(U)`.
pub fn verify_expander(g: &BipartiteGraph, beta: Frac, opts: VerifyOptions) -> Result<GraphVerdict> {
    unit_interval("β", beta)?;
    let u = SetSize::new("U", beta, g.l as u64);
    let v = SetSize::new("V", beta, g.r as u64);
    let vs = v.size;
    let r = g.r;
    let bad = |um: u64| {
        let n = g.neighborhood(um);
        let missing = r as u64 - n.count_ones() as u64;
        (missing >= vs).then(|| {
            let outside: Vec<u32> = (0..r).filter(|&i| n >> i & 1 == 0).take(vs as usize).collect();
            GraphWitness { left: mask_elements(um), right: outside, count: 0 }
        })
    };
    let us = u.size as u32;
    let found = match opts.mode {
        VerifyMode::Exhaustive => {
            check_budget(binomial(g.l as u64, us as u64).saturating_mul(us as u128), opts.budget)?;
            first_violation(ColexMasks::new(g.l, us), bad)
        }
        VerifyMode::Sampled { samples, seed } => first_violation(random_masks(g.l, us, samples, seed), bad),
    };
    Ok(finish("expander", vec![u, v], found, matches!(opts.mode, VerifyMode::Sampled { .. })))
}

/// Extractor-graph test with left side `[N]`, right side `[M]`: for every
/// `T ⊆ [M]`, at most `K` left vertices have `|frac_T(u) − |T|/M| > ε`,
/// where `frac_T(u) = |N(u) ∩ T| / D`. The deviation is two-sided and
/// compared as integers: `|D·|T| − M·c| ≤ ε·M·D`.
pub fn verify_extractor_graph(g: &BipartiteGraph, k: u32, eps: Frac, opts: VerifyOptions) -> Result<GraphVerdict> {
    if eps.num == 0 {
        return invalid("ε must be positive");
    }
    let (m, d) = (g.r as u64, g.d as u64);
    // |D·|T| − M·c| ≤ ε·M·D  ⇔  den·|D·|T| − M·c| ≤ num·M·D.
    let bound = eps.num as u128 * m as u128 * d as u128;
    let bad = |t: u64| {
        let size = t.count_ones() as u64;
        let off: Vec<u32> = (0..g.l)
            .filter(|&u| {
                let c = (g.masks[u as usize] & t).count_ones() as u64;
                let dev = (d * size).abs_diff(m * c) as u128;
                eps.den as u128 * dev > bound
            })
            .collect();
        (off.len() as u32 > k).then(|| GraphWitness { count: off.len() as u64, left: off, right: mask_elements(t) })
    };
    let sizes = vec![SetSize::new("K", Frac { num: k as u64, den: g.l as u64 }, g.l as u64)];
    let found = match opts.mode {
        VerifyMode::Exhaustive => {
            if g.r > 40 {
                return Err(Error::BudgetExceeded { required: u128::MAX, budget: opts.budget });
            }
            check_budget((1u128 << g.r).saturating_mul(g.l as u128), opts.budget)?;
            let all = (0..=g.r).flat_map(move |s| ColexMasks::new(m as u32, s));
            first_violation(all, bad)
        }
        VerifyMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let full = if g.r == 64 { u64::MAX } else { (1u64 << g.r) - 1 };
            let draws: Vec<u64> = (0..samples).map(|_| rand::Rng::gen::<u64>(&mut rng) & full).collect();
            first_violation(draws.into_iter(), bad)
        }
    };
    Ok(finish("extractor-graph", sizes, found, matches!(opts.mode, VerifyMode::Sampled { .. })))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Frac {
        s.parse().unwrap()
    }

    #[test]
    fn fractions_parse_exactly() {
        assert_eq!(f("0.3"), Frac { num: 3, den: 10 });
        assert_eq!(f("1/8"), Frac { num: 1, den: 8 });
        assert_eq!(f("1"), Frac { num: 1, den: 1 });
        assert_eq!(f("0.3").ceil_of(10), 3);
        assert_eq!(f("1/3").ceil_of(10), 4);
        assert!("x".parse::<Frac>().is_err());
    }

    #[test]
    fn identity_is_a_disperser() {
        let g = BipartiteGraph::identity(8).unwrap();
        for d in ["1/8", "1/4", "1/2", "3/4", "1"] {
            let v = verify_and_disperser(&g, f(d), f(d), VerifyOptions::default()).unwrap();
            assert!(v.holds(), "δ={d}");
        }
    }

    #[test]
    fn complete_graph_fails_disperser_with_first_witness() {
        let g = BipartiteGraph::complete(4, 6).unwrap();
        let v = verify_and_disperser(&g, f("1/2"), f("1/4"), VerifyOptions::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Fails);
        let w = v.witness.unwrap();
        assert_eq!(w.right, vec![0, 1, 2]);
        assert_eq!(w.count, 0);
        assert_eq!(v.checked, 1);
    }

    #[test]
    fn expander_extremes() {
        let g = BipartiteGraph::complete(5, 5).unwrap();
        for b in ["1/5", "0.5", "1"] {
            assert!(verify_expander(&g, f(b), VerifyOptions::default()).unwrap().holds());
        }
        // All edges into one right vertex: the first U misses V = {1, 2}.
        let star = BipartiteGraph::new(5, vec![vec![0]; 5]).unwrap();
        let v = verify_expander(&star, f("0.4"), VerifyOptions::default()).unwrap();
        let w = v.witness.unwrap();
        assert_eq!((w.left, w.right), (vec![0, 1], vec![1, 2]));
    }

    #[test]
    fn rounding_is_reported() {
        let g = BipartiteGraph::identity(10).unwrap();
        let v = verify_expander(&g, f("0.25"), VerifyOptions::default()).unwrap();
        assert_eq!(v.sizes[0].size, 3);
        assert!(v.sizes[0].rounded);
    }

    #[test]
    fn malformed_graphs_are_rejected() {
        assert!(BipartiteGraph::new(4, vec![vec![0, 0]]).is_err());
        assert!(BipartiteGraph::new(4, vec![vec![4]]).is_err());
        assert!(BipartiteGraph::new(4, vec![vec![0], vec![1, 2]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = BipartiteGraph::random(6, 5, 2, 3, 0).unwrap();
        let s = g.to_json();
        assert!(s.contains("\"adjacency\""));
        assert_eq!(BipartiteGraph::from_json(&s).unwrap(), g);
        assert!(BipartiteGraph::from_json(r#"{"left":2,"right":3,"degree":1,"adjacency":[[0]]}"#).is_err());
    }

    #[test]
    fn sampled_mode_says_probably() {
        let g = BipartiteGraph::identity(8).unwrap();
        let v = verify_and_disperser(&g, f("1/2"), f("1/2"), VerifyOptions::sampled(50, 1)).unwrap();
        assert_eq!(v.verdict, Verdict::Probably);
        assert!(!v.holds());
    }

    #[test]
    fn budget_is_enforced() {
        let g = BipartiteGraph::identity(40).unwrap();
        let opts = VerifyOptions { budget: 1000, ..VerifyOptions::default() };
        assert!(matches!(verify_and_disperser(&g, f("1/2"), f("1/2"), opts), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn extractor_graph_two_sided() {
        // Complete graph: every left vertex sees exactly |T|/M.
        let g = BipartiteGraph::complete(4, 4).unwrap();
        assert!(verify_extractor_graph(&g, 0, f("1/100"), VerifyOptions::default()).unwrap().holds());
        // Identity with D = 1: for |T| = 2 of 4, every vertex deviates by ½.
        let id = BipartiteGraph::identity(4).unwrap();
        let v = verify_extractor_graph(&id, 1, f("1/4"), VerifyOptions::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Fails);
        assert_eq!(v.witness.unwrap().right, vec![0, 1]);
    }
}
