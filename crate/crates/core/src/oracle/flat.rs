//! Worst-case error over flat sources by enumeration.
//!
//! The objective for one configuration is
//! `Δ((Z, X_S, E), (U_m, X_S, E))` where `S` is the strong set and `E` the
//! leak. With flat supports of power-of-two size this is a dyadic rational
//! `Σ |2^m·C[s,e,z] − C[s,e]| / 2^{m+1+log N}`, with `C` the counts over the
//! product of supports.
//!
//! All inputs but one ("inner") are enumerated. The inner input is then either
//! enumerated as well, or optimized exactly:
//! - a strong inner input enters the objective linearly, so the best flat
//!   support is the top-`2^k` values of a per-value score;
//! - with no strong input and no leak on the inner input, the objective is a
//!   maximum over test sets `T_e ⊆ {0,1}^m` of linear functionals, and each one
//!   is again maximized by a top-`2^k` selection.
//!
//! Extreme points of the min-entropy-`k` ball are flat `k`-sources and the
//! objective is convex in each enumerated input, so the enumeration is exact
//! over all min-entropy sources; with leakage it is exact over the enumerated
//! leak family.

use super::{Accounting, InputClass, LeakFamily, MapFamily, OracleInput, OracleMode, Witness, WitnessLeak};
use crate::enumerate::{binomial, count_set_partitions, for_each_k_subset, k_subsets, set_partitions};
use crate::error::{invalid, Error, Result};
use crate::exact::Dyadic;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// One enumerated configuration of an input: a flat support plus, for the
/// leaked input, the leak label of each support element.
#[derive(Clone, Debug)]
pub(crate) struct Cfg {
    pub support: Vec<u32>,
    pub labels: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum InnerRule {
    /// Strong inner input: per-value scores, top-K.
    StrongLinear,
    /// Strong inner input: per-value scores summed over every K-subset.
    StrongEnumerate,
    /// No strong inputs, inner not leaked: test-set linearization.
    TestSets,
    /// Full enumeration of inner configurations.
    Enumerate,
}

pub(crate) struct Plan<'a> {
    table: &'a [u32],
    m: u32,
    inputs: &'a [OracleInput],
    offsets: Vec<u32>,
    leak_target: Option<usize>,
    leak: Option<&'a LeakFamily>,
    inner: usize,
    rule: InnerRule,
    outer: Vec<usize>,
    outer_cfgs: Vec<Vec<Cfg>>,
    inner_cfgs: Vec<Cfg>,
    e_dim: usize,
}

/// Best configuration found for one leak choice.
#[derive(Clone, Debug)]
pub(crate) struct Found {
    pub value: Dyadic,
    pub witness: Witness,
    pub configs: u128,
    pub steps: u128,
}

fn log2_exact(n: usize) -> u32 {
    debug_assert!(n.is_power_of_two());
    n.trailing_zeros()
}

/// Maximum number of leak blocks allowed on a support of size `2^j`.
fn block_limit(leak: &LeakFamily, k: u32, j: u32) -> usize {
    let by_bits = match &leak.maps {
        MapFamily::AllUpTo { bits } => 1usize << bits,
        MapFamily::Explicit { .. } => usize::MAX,
    };
    match leak.accounting {
        Accounting::Conditional => by_bits.min(1usize << (j - k)),
        Accounting::Marginal => by_bits,
    }
}

fn support_sizes(leak: Option<&LeakFamily>, leaked: bool, k: u32, w: u32) -> Vec<u32> {
    match (leak, leaked) {
        (Some(l), true) if l.accounting == Accounting::Conditional => (k..=w).collect(),
        _ => vec![k],
    }
}

/// Number of configurations of a flat input.
fn count_cfgs(inp: &OracleInput, leak: Option<&LeakFamily>, leaked: bool) -> u128 {
    let InputClass::Flat { k } = inp.class else { return 1 };
    let dom = 1u64 << inp.width;
    let mut total: u128 = 0;
    for j in support_sizes(leak, leaked, k, inp.width) {
        let supports = binomial(dom, 1u64 << j);
        let maps = match (leak, leaked) {
            (Some(l), true) => match &l.maps {
                MapFamily::AllUpTo { .. } => count_set_partitions(1u64 << j, block_limit(l, k, j) as u64),
                MapFamily::Explicit { maps, .. } => maps.len() as u128,
            },
            _ => 1,
        };
        total = total.saturating_add(supports.saturating_mul(maps));
    }
    total
}

fn build_cfgs(inp: &OracleInput, leak: Option<&LeakFamily>, leaked: bool) -> Vec<Cfg> {
    let InputClass::Flat { k } = inp.class else { unreachable!("block inputs are never enumerated") };
    let dom = 1u32 << inp.width;
    let mut out = Vec::new();
    for j in support_sizes(leak, leaked, k, inp.width) {
        let supports = k_subsets(dom, 1 << j);
        match (leak, leaked) {
            (Some(l), true) => {
                let limit = block_limit(l, k, j);
                match &l.maps {
                    MapFamily::AllUpTo { .. } => {
                        let parts = set_partitions(1usize << j, limit);
                        for s in &supports {
                            for p in &parts {
                                out.push(Cfg { support: s.clone(), labels: p.clone() });
                            }
                        }
                    }
                    MapFamily::Explicit { maps, .. } => {
                        for s in &supports {
                            for map in maps {
                                let labels: Vec<u8> = s.iter().map(|&v| map[v as usize] as u8).collect();
                                let mut distinct = labels.clone();
                                distinct.sort_unstable();
                                distinct.dedup();
                                if distinct.len() <= limit {
                                    out.push(Cfg { support: s.clone(), labels });
                                }
                            }
                        }
                    }
                }
            }
            _ => out.extend(supports.into_iter().map(|s| Cfg { support: s, labels: vec![] })),
        }
    }
    out
}

fn e_dim_of(leak: Option<&LeakFamily>) -> usize {
    match leak {
        None => 1,
        Some(l) => match &l.maps {
            MapFamily::AllUpTo { bits } => 1usize << bits,
            MapFamily::Explicit { e_width, .. } => 1usize << e_width,
        },
    }
}

const MAX_TEST_VECTORS: usize = 1 << 12;

impl<'a> Plan<'a> {
    pub(crate) fn new(
        table: &'a [u32],
        m: u32,
        inputs: &'a [OracleInput],
        leak: Option<&'a LeakFamily>,
        leak_target: Option<usize>,
        mode: OracleMode,
    ) -> Result<Self> {
        let total: u32 = inputs.iter().map(|i| i.width).sum();
        if table.len() != 1usize << total {
            return invalid("table size does not match input widths");
        }
        let mut offsets = Vec::with_capacity(inputs.len());
        let mut acc = total;
        for i in inputs {
            acc -= i.width;
            offsets.push(acc);
        }
        let leak = if leak_target.is_some() { leak } else { None };
        let count = |i: usize| count_cfgs(&inputs[i], leak, leak_target == Some(i));
        let any_strong = inputs.iter().any(|i| i.strong);
        let n = inputs.len();

        let (inner, rule) = match mode {
            OracleMode::Exhaustive => {
                // Prefer a block input: it is always optimized per prefix.
                let g = (0..n).find(|&i| matches!(inputs[i].class, InputClass::Block { .. })).unwrap_or(n - 1);
                let rule = match (inputs[g].strong, &inputs[g].class) {
                    (true, InputClass::Block { .. }) => InnerRule::StrongLinear,
                    (true, InputClass::Flat { .. }) => InnerRule::StrongEnumerate,
                    (false, _) => InnerRule::Enumerate,
                };
                (g, rule)
            }
            OracleMode::Reduced | OracleMode::Sampled { .. } => {
                if any_strong {
                    let g = (0..n)
                        .filter(|&i| inputs[i].strong)
                        .max_by_key(|&i| (matches!(inputs[i].class, InputClass::Block { .. }), count(i), std::cmp::Reverse(i)))
                        .unwrap();
                    (g, InnerRule::StrongLinear)
                } else {
                    let tests = (1usize << (1usize << m)).checked_pow(e_dim_of(leak) as u32).unwrap_or(usize::MAX);
                    let g = (0..n).filter(|&i| leak_target != Some(i)).max_by_key(|&i| (count(i), std::cmp::Reverse(i)));
                    match g {
                        Some(g) if tests <= MAX_TEST_VECTORS => (g, InnerRule::TestSets),
                        _ => (n - 1, InnerRule::Enumerate),
                    }
                }
            }
        };
        for (i, inp) in inputs.iter().enumerate() {
            if let InputClass::Block { first_width, k1, k2 } = inp.class {
                if !inp.strong {
                    return invalid("block inputs must be strong");
                }
                if i != inner {
                    return invalid("at most one block input is supported");
                }
                if first_width >= inp.width || k1 > first_width || k2 > inp.width - first_width {
                    return invalid("block thresholds exceed block widths");
                }
            } else if let InputClass::Flat { k } = inp.class {
                if k > inp.width {
                    return invalid(format!("k={k} exceeds width {}", inp.width));
                }
            }
        }
        let outer: Vec<usize> = (0..n).filter(|&i| i != inner).collect();
        Ok(Plan {
            table,
            m,
            inputs,
            offsets,
            leak_target,
            leak,
            inner,
            rule,
            outer,
            outer_cfgs: vec![],
            inner_cfgs: vec![],
            e_dim: e_dim_of(leak),
        })
    }

    /// Estimated evaluation steps and outer configuration count.
    pub(crate) fn cost(&self) -> (u128, u128) {
        let leak = self.leak;
        let mut outer_count: u128 = 1;
        let mut outer_elems: u128 = 1;
        for &i in &self.outer {
            outer_count = outer_count.saturating_mul(count_cfgs(&self.inputs[i], leak, self.leak_target == Some(i)));
            let k = match self.inputs[i].class {
                InputClass::Flat { k } => k,
                InputClass::Block { .. } => unreachable!(),
            };
            let top = if self.leak_target == Some(i) && leak.map(|l| l.accounting) == Some(Accounting::Conditional) {
                self.inputs[i].width
            } else {
                k
            };
            outer_elems = outer_elems.saturating_mul(1u128 << top);
        }
        let dom = 1u128 << self.inputs[self.inner].width;
        let cells = outer_elems.saturating_mul(self.e_dim as u128) << self.m;
        let inner_cost = match self.rule {
            InnerRule::StrongLinear => dom.saturating_mul(cells),
            InnerRule::StrongEnumerate => {
                let InputClass::Flat { k } = self.inputs[self.inner].class else { unreachable!() };
                dom.saturating_mul(cells).saturating_add(binomial(dom as u64, 1u64 << k).saturating_mul(1u128 << k))
            }
            InnerRule::TestSets => {
                let tests = (1u128 << (1u128 << self.m)).saturating_pow(self.e_dim as u32);
                dom.saturating_mul(tests).saturating_add(dom.saturating_mul(cells))
            }
            InnerRule::Enumerate => {
                let ic = count_cfgs(&self.inputs[self.inner], leak, self.leak_target == Some(self.inner));
                let k = match self.inputs[self.inner].class {
                    InputClass::Flat { k } => k,
                    _ => 0,
                };
                ic.saturating_mul((1u128 << k).saturating_mul(cells))
            }
        };
        let per_outer = dom.saturating_mul(outer_elems).saturating_add(inner_cost);
        (outer_count.saturating_mul(per_outer), outer_count)
    }

    fn materialize(&mut self) {
        let leak = self.leak;
        self.outer_cfgs = self.outer.iter().map(|&i| build_cfgs(&self.inputs[i], leak, self.leak_target == Some(i))).collect();
        if self.rule == InnerRule::Enumerate {
            self.inner_cfgs = build_cfgs(&self.inputs[self.inner], leak, self.leak_target == Some(self.inner));
        }
    }

    fn decode(&self, mut idx: u128) -> Vec<&Cfg> {
        let mut out = Vec::with_capacity(self.outer.len());
        for list in self.outer_cfgs.iter().rev() {
            let n = list.len() as u128;
            out.push(&list[(idx % n) as usize]);
            idx /= n;
        }
        out.reverse();
        out
    }

    /// Per-inner-value counts over the product of the outer supports.
    /// Layout: `cnt[v][s][e][z]`.
    fn counts(&self, cfgs: &[&Cfg]) -> Counts {
        let zdim = 1usize << self.m;
        let strong_pos: Vec<usize> = (0..self.outer.len()).filter(|&p| self.inputs[self.outer[p]].strong).collect();
        let ps: usize = strong_pos.iter().map(|&p| cfgs[p].support.len()).product();
        let ns: usize = (0..self.outer.len()).filter(|&p| !self.inputs[self.outer[p]].strong).map(|p| cfgs[p].support.len()).product();
        let leak_pos = self.leak_target.and_then(|t| self.outer.iter().position(|&i| i == t));
        let e_dim = if leak_pos.is_some() { self.e_dim } else { 1 };
        let cells = ps * e_dim * zdim;
        let g = self.inner;
        let dom = 1usize << self.inputs[g].width;
        let goff = self.offsets[g];
        let mut cnt = vec![0u32; dom * cells];

        let k = cfgs.len();
        let mut digit = vec![0usize; k];
        loop {
            let mut base = 0usize;
            let mut s_idx = 0usize;
            for &p in &strong_pos {
                s_idx = s_idx * cfgs[p].support.len() + digit[p];
            }
            for p in 0..k {
                base |= (cfgs[p].support[digit[p]] as usize) << self.offsets[self.outer[p]];
            }
            let e = leak_pos.map(|p| cfgs[p].labels[digit[p]] as usize).unwrap_or(0);
            let cell = (s_idx * e_dim + e) * zdim;
            for v in 0..dom {
                let z = self.table[base | (v << goff)] as usize;
                cnt[v * cells + cell + z] += 1;
            }
            // Odometer over outer supports.
            let mut p = k;
            loop {
                if p == 0 {
                    return Counts { cnt, cells, e_dim, log_ps: log2_exact(ps), log_ns: log2_exact(ns) };
                }
                p -= 1;
                digit[p] += 1;
                if digit[p] < cfgs[p].support.len() {
                    break;
                }
                digit[p] = 0;
            }
        }
    }

    /// Exact value of the best inner choice for one outer configuration, plus
    /// the inner witness when `want_witness`.
    fn inner_best(&self, c: &Counts, want_witness: bool) -> (Dyadic, Option<InnerWitness>) {
        let zdim = 1usize << self.m;
        let zu = zdim as i64;
        let inp = &self.inputs[self.inner];
        let dom = 1usize << inp.width;
        match self.rule {
            InnerRule::StrongLinear | InnerRule::StrongEnumerate => {
                let mut d = vec![0u64; dom];
                for (v, dv) in d.iter_mut().enumerate() {
                    let row = &c.cnt[v * c.cells..(v + 1) * c.cells];
                    let mut acc = 0u64;
                    for chunk in row.chunks(zdim) {
                        let tot: i64 = chunk.iter().map(|&x| x as i64).sum();
                        for &x in chunk {
                            acc += (zu * x as i64 - tot).unsigned_abs();
                        }
                    }
                    *dv = acc;
                }
                match inp.class {
                    InputClass::Flat { k } if self.rule == InnerRule::StrongEnumerate => {
                        let mut best = 0u64;
                        let mut best_sub: Vec<u32> = Vec::new();
                        let mut first = true;
                        for_each_k_subset(dom as u32, 1u32 << k, |sub| {
                            let s: u64 = sub.iter().map(|&v| d[v as usize]).sum();
                            if first || s > best {
                                best = s;
                                best_sub = sub.to_vec();
                                first = false;
                            }
                        });
                        let value = Dyadic::new(best as u128, self.m + 1 + c.log_ns + c.log_ps + k);
                        (value, want_witness.then(|| InnerWitness::Support(best_sub)))
                    }
                    InputClass::Flat { k } => {
                        let kk = 1usize << k;
                        let (sum, support) = top_k(&d, kk);
                        let value = Dyadic::new(sum as u128, self.m + 1 + c.log_ns + c.log_ps + k);
                        (value, want_witness.then(|| InnerWitness::Support(support)))
                    }
                    InputClass::Block { first_width, k1, k2 } => {
                        let w2 = inp.width - first_width;
                        let n2 = 1usize << w2;
                        let mut h = vec![0u64; 1usize << first_width];
                        let mut child = Vec::new();
                        for (x1, hv) in h.iter_mut().enumerate() {
                            let (s, sup) = top_k(&d[x1 * n2..(x1 + 1) * n2], 1 << k2);
                            *hv = s;
                            if want_witness {
                                child.push(sup);
                            }
                        }
                        let (sum, parents) = top_k(&h, 1 << k1);
                        let value = Dyadic::new(sum as u128, self.m + 1 + c.log_ns + c.log_ps + k1 + k2);
                        let w = want_witness.then(|| InnerWitness::Block {
                            parents: parents.clone(),
                            children: parents.iter().map(|&p| child[p as usize].clone()).collect(),
                        });
                        (value, w)
                    }
                }
            }
            InnerRule::TestSets => {
                let InputClass::Flat { k } = inp.class else { unreachable!() };
                let kk = 1usize << k;
                let e_dim = c.e_dim;
                // a_v(τ) = Σ_e Σ_{z∈τ_e} (2^m·cnt[v,e,z] − cnt[v,e]).
                let n_sets = 1usize << zdim;
                let mut per_e = vec![0i64; dom * e_dim * n_sets];
                for v in 0..dom {
                    let row = &c.cnt[v * c.cells..(v + 1) * c.cells];
                    for e in 0..e_dim {
                        let chunk = &row[e * zdim..(e + 1) * zdim];
                        let tot: i64 = chunk.iter().map(|&x| x as i64).sum();
                        for t in 1..n_sets {
                            let mut s = 0i64;
                            for (z, &x) in chunk.iter().enumerate() {
                                if t >> z & 1 == 1 {
                                    s += zu * x as i64 - tot;
                                }
                            }
                            per_e[(v * e_dim + e) * n_sets + t] = s;
                        }
                    }
                }
                let total_vectors = n_sets.pow(e_dim as u32);
                let mut best = 0i64;
                let mut best_tau = 0usize;
                let mut a = vec![0i64; dom];
                for tau in 1..total_vectors {
                    for (v, av) in a.iter_mut().enumerate() {
                        let mut s = 0i64;
                        let mut t = tau;
                        for e in 0..e_dim {
                            s += per_e[(v * e_dim + e) * n_sets + t % n_sets];
                            t /= n_sets;
                        }
                        *av = s;
                    }
                    let s = top_k_signed(&a, kk);
                    if s > best {
                        best = s;
                        best_tau = tau;
                    }
                }
                let value = Dyadic::new(best as u128, self.m + c.log_ns + k);
                let w = want_witness.then(|| {
                    let mut t = best_tau;
                    for (v, av) in a.iter_mut().enumerate() {
                        let mut s = 0i64;
                        let mut tt = best_tau;
                        for e in 0..e_dim {
                            s += per_e[(v * e_dim + e) * n_sets + tt % n_sets];
                            tt /= n_sets;
                        }
                        *av = s;
                    }
                    let support = top_k_signed_support(&a, kk);
                    let mut sets = Vec::new();
                    for _ in 0..e_dim {
                        sets.push(t % n_sets);
                        t /= n_sets;
                    }
                    InnerWitness::TestSets { support, sets }
                });
                (value, w)
            }
            InnerRule::Enumerate => {
                let leaked_inner = self.leak_target == Some(self.inner);
                let cell_dim = if leaked_inner { c.cells * self.e_dim } else { c.cells };
                let mut agg = vec![0u32; cell_dim];
                let mut best = Dyadic::ZERO;
                let mut best_i = 0usize;
                for (ci, cfg) in self.inner_cfgs.iter().enumerate() {
                    agg.iter_mut().for_each(|x| *x = 0);
                    for (pos, &v) in cfg.support.iter().enumerate() {
                        let row = &c.cnt[v as usize * c.cells..(v as usize + 1) * c.cells];
                        if leaked_inner {
                            // Outer has no leak, so row is [s][z]; spread into [s][e][z].
                            let e = cfg.labels[pos] as usize;
                            for (cell, &x) in row.iter().enumerate() {
                                let s = cell / zdim;
                                let z = cell % zdim;
                                agg[(s * self.e_dim + e) * zdim + z] += x;
                            }
                        } else {
                            for (a, &x) in agg.iter_mut().zip(row) {
                                *a += x;
                            }
                        }
                    }
                    let mut num = 0u64;
                    for chunk in agg.chunks(zdim) {
                        let tot: i64 = chunk.iter().map(|&x| x as i64).sum();
                        for &x in chunk {
                            num += (zu * x as i64 - tot).unsigned_abs();
                        }
                    }
                    let log_k = log2_exact(cfg.support.len());
                    let value = Dyadic::new(num as u128, self.m + 1 + c.log_ns + c.log_ps + log_k);
                    if value > best {
                        best = value;
                        best_i = ci;
                    }
                }
                let w = want_witness.then(|| {
                    let cfg = &self.inner_cfgs[best_i];
                    InnerWitness::Leaked { support: cfg.support.clone(), labels: cfg.labels.clone() }
                });
                (best, w)
            }
        }
    }

    fn witness(&self, cfgs: &[&Cfg], inner: InnerWitness) -> Witness {
        let mut supports = vec![Vec::new(); self.inputs.len()];
        let mut leak = None;
        for (p, &i) in self.outer.iter().enumerate() {
            supports[i] = cfgs[p].support.clone();
            if self.leak_target == Some(i) {
                leak = Some(WitnessLeak { input: i, labels: cfgs[p].labels.clone() });
            }
        }
        let mut block_children = None;
        let mut test_sets = None;
        match inner {
            InnerWitness::Support(s) => supports[self.inner] = s,
            InnerWitness::Block { parents, children } => {
                supports[self.inner] = parents;
                block_children = Some(children);
            }
            InnerWitness::TestSets { support, sets } => {
                supports[self.inner] = support;
                test_sets = Some(sets);
            }
            InnerWitness::Leaked { support, labels } => {
                if self.leak_target == Some(self.inner) {
                    leak = Some(WitnessLeak { input: self.inner, labels });
                }
                supports[self.inner] = support;
            }
        }
        Witness { supports, block_children, leak, test_sets }
    }

    /// Exhaustive (or linearly reduced) maximization over all outer configurations.
    pub(crate) fn run(mut self) -> Result<Found> {
        self.materialize();
        let outer_count: u128 = self.outer_cfgs.iter().map(|l| l.len() as u128).product();
        let (steps, _) = self.cost();
        let plan = &self;
        let best = (0..outer_count as u64)
            .into_par_iter()
            .map(|idx| {
                let cfgs = plan.decode(idx as u128);
                let c = plan.counts(&cfgs);
                (plan.inner_best(&c, false).0, idx)
            })
            .reduce(|| (Dyadic::ZERO, u64::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        let idx = if best.1 == u64::MAX { 0 } else { best.1 };
        let cfgs = plan.decode(idx as u128);
        let c = plan.counts(&cfgs);
        let (value, w) = plan.inner_best(&c, true);
        let inner_cfg_count = match plan.rule {
            InnerRule::Enumerate => plan.inner_cfgs.len() as u128,
            _ => 1,
        };
        Ok(Found {
            value,
            witness: plan.witness(&cfgs, w.unwrap()),
            configs: outer_count * inner_cfg_count,
            steps,
        })
    }

    fn random_cfg(&self, i: usize, rng: &mut ChaCha8Rng) -> Cfg {
        let inp = &self.inputs[i];
        let InputClass::Flat { k } = inp.class else { unreachable!() };
        let leaked = self.leak_target == Some(i);
        let sizes = support_sizes(self.leak, leaked, k, inp.width);
        let j = sizes[rng.gen_range(0..sizes.len())];
        let mut all: Vec<u32> = (0..1u32 << inp.width).collect();
        all.shuffle(rng);
        let mut support: Vec<u32> = all[..1 << j].to_vec();
        support.sort_unstable();
        let labels = match (self.leak, leaked) {
            (Some(l), true) => {
                let limit = block_limit(l, k, j);
                match &l.maps {
                    MapFamily::AllUpTo { .. } => support.iter().map(|_| rng.gen_range(0..limit) as u8).collect(),
                    MapFamily::Explicit { maps, .. } => loop {
                        let map = &maps[rng.gen_range(0..maps.len())];
                        let labels: Vec<u8> = support.iter().map(|&v| map[v as usize] as u8).collect();
                        let mut d = labels.clone();
                        d.sort_unstable();
                        d.dedup();
                        if d.len() <= limit {
                            break labels;
                        }
                    },
                }
            }
            _ => vec![],
        };
        Cfg { support, labels }
    }

    /// Random search plus single-swap hill climbing; a lower bound on the worst case.
    pub(crate) fn run_sampled(mut self, samples: usize, seed: u64) -> Result<Found> {
        if self.rule == InnerRule::Enumerate {
            self.inner_cfgs = build_cfgs(&self.inputs[self.inner], self.leak, self.leak_target == Some(self.inner));
        }
        let plan = &self;
        let eval = |cfgs: &[Cfg]| -> Dyadic {
            let refs: Vec<&Cfg> = cfgs.iter().collect();
            plan.inner_best(&plan.counts(&refs), false).0
        };
        // Per-worker streams derived from the master seed by fixed offsets.
        let draws: Vec<(Dyadic, Vec<Cfg>)> = (0..samples as u64)
            .into_par_iter()
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(s);
                let cfgs: Vec<Cfg> = plan.outer.iter().map(|&i| plan.random_cfg(i, &mut rng)).collect();
                (eval(&cfgs), cfgs)
            })
            .collect();
        let mut order: Vec<usize> = (0..draws.len()).collect();
        order.sort_by(|&a, &b| draws[b].0.cmp(&draws[a].0).then(a.cmp(&b)));
        let climbs = order.len().min(4);
        let mut best: Option<(Dyadic, Vec<Cfg>)> = None;
        let mut evals = samples as u128;
        for &start in &order[..climbs] {
            let (mut v, mut cfgs) = draws[start].clone();
            loop {
                let mut improved = false;
                for p in 0..cfgs.len() {
                    let i = plan.outer[p];
                    let dom = 1u32 << plan.inputs[i].width;
                    for pos in 0..cfgs[p].support.len() {
                        for cand in 0..dom {
                            if cfgs[p].support.binary_search(&cand).is_ok() {
                                continue;
                            }
                            let mut trial = cfgs.clone();
                            trial[p].support[pos] = cand;
                            let mut pairs: Vec<(u32, u8)> = trial[p]
                                .support
                                .iter()
                                .copied()
                                .zip(trial[p].labels.iter().copied().chain(std::iter::repeat(0)))
                                .collect();
                            pairs.sort_unstable();
                            trial[p].support = pairs.iter().map(|x| x.0).collect();
                            if !trial[p].labels.is_empty() {
                                trial[p].labels = pairs.iter().map(|x| x.1).collect();
                            }
                            let tv = eval(&trial);
                            evals += 1;
                            if tv > v {
                                v = tv;
                                cfgs = trial;
                                improved = true;
                            }
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            if best.as_ref().map(|b| v > b.0).unwrap_or(true) {
                best = Some((v, cfgs));
            }
        }
        let (_, cfgs) = best.unwrap_or_else(|| (Dyadic::ZERO, plan.outer.iter().map(|&i| plan.random_cfg(i, &mut ChaCha8Rng::seed_from_u64(seed))).collect()));
        let refs: Vec<&Cfg> = cfgs.iter().collect();
        let (value, w) = plan.inner_best(&plan.counts(&refs), true);
        Ok(Found { value, witness: plan.witness(&refs, w.unwrap()), configs: evals, steps: 0 })
    }
}

struct Counts {
    cnt: Vec<u32>,
    cells: usize,
    e_dim: usize,
    log_ps: u32,
    log_ns: u32,
}

enum InnerWitness {
    Support(Vec<u32>),
    Block { parents: Vec<u32>, children: Vec<Vec<u32>> },
    TestSets { support: Vec<u32>, sets: Vec<usize> },
    Leaked { support: Vec<u32>, labels: Vec<u8> },
}

/// Sum of the `k` largest scores and their indices (ties to the smaller index).
fn top_k(d: &[u64], k: usize) -> (u64, Vec<u32>) {
    let mut idx: Vec<u32> = (0..d.len() as u32).collect();
    idx.sort_by(|&a, &b| d[b as usize].cmp(&d[a as usize]).then(a.cmp(&b)));
    idx.truncate(k);
    let s = idx.iter().map(|&i| d[i as usize]).sum();
    idx.sort_unstable();
    (s, idx)
}

fn top_k_signed(a: &[i64], k: usize) -> i64 {
    let mut v = a.to_vec();
    v.select_nth_unstable_by(k - 1, |x, y| y.cmp(x));
    v[..k].iter().sum()
}

fn top_k_signed_support(a: &[i64], k: usize) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..a.len() as u32).collect();
    idx.sort_by(|&x, &y| a[y as usize].cmp(&a[x as usize]).then(x.cmp(&y)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

pub(crate) fn budget_check(steps: u128, budget: u128) -> Result<()> {
    if steps > budget {
        return Err(Error::BudgetExceeded { required: steps, budget });
    }
    Ok(())
}
