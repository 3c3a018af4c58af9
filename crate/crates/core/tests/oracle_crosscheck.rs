//! The flat-source oracle against a naive enumeration built on exact joint
//! distributions.

use extractomat::enumerate::k_subsets;
use extractomat::extractors::certify::draw_table;
use extractomat::leakage::LeakModel;
use extractomat::oracle::{worst_case_error, Accounting, LeakFamily, MapFamily, OracleInput, OracleMode, OracleQuery};
use extractomat::{JointDistribution, Part, TruthTable};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

type Q = BigRational;

/// One concrete source choice: support plus optional leak label per element.
#[derive(Clone)]
struct Choice {
    support: Vec<u32>,
    labels: Option<Vec<u32>>,
}

fn all_functions(len: usize, range: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|v| (0..range).map(move |x| [v.clone(), vec![x]].concat())).collect();
    }
    out
}

fn distinct(v: &[u32]) -> usize {
    let mut d = v.to_vec();
    d.sort_unstable();
    d.dedup();
    d.len()
}

fn choices(width: u32, k: u32, leak: Option<(u32, Accounting)>) -> Vec<Choice> {
    let mut out = Vec::new();
    match leak {
        None => {
            for s in k_subsets(1 << width, 1 << k) {
                out.push(Choice { support: s, labels: None });
            }
        }
        Some((bits, acc)) => {
            let sizes: Vec<u32> = match acc {
                Accounting::Conditional => (k..=width).collect(),
                Accounting::Marginal => vec![k],
            };
            for j in sizes {
                let limit = match acc {
                    Accounting::Conditional => (1usize << bits).min(1 << (j - k)),
                    Accounting::Marginal => 1 << bits,
                };
                for s in k_subsets(1 << width, 1 << j) {
                    for f in all_functions(s.len(), 1 << bits) {
                        if distinct(&f) <= limit {
                            out.push(Choice { support: s.clone(), labels: Some(f) });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Distance of `(Z, strong inputs, E)` from `(U, strong inputs, E)`.
fn distance(table: &TruthTable, picks: &[Choice], strong: &[bool], e_bits: u32) -> Q {
    let n = picks.len();
    let mut parts = vec![];
    for i in 0..n {
        if strong[i] {
            parts.push(Part::new(&format!("X{i}"), table.widths()[i]));
        }
    }
    if e_bits > 0 {
        parts.push(Part::new("E", e_bits));
    }
    parts.push(Part::new("Z", table.out_width()));
    let total: usize = picks.iter().map(|c| c.support.len()).product();
    let p = Q::new(BigInt::from(1), BigInt::from(total));
    let mut outcomes = Vec::new();
    let mut digit = vec![0usize; n];
    loop {
        let xs: Vec<u32> = (0..n).map(|i| picks[i].support[digit[i]]).collect();
        let mut vals: Vec<u32> = (0..n).filter(|&i| strong[i]).map(|i| xs[i]).collect();
        if e_bits > 0 {
            let e = (0..n).find_map(|i| picks[i].labels.as_ref().map(|l| l[digit[i]])).unwrap_or(0);
            vals.push(e);
        }
        vals.push(table.eval(&xs).unwrap());
        outcomes.push((vals, p.clone()));
        let mut i = n;
        loop {
            if i == 0 {
                let j = JointDistribution::from_outcomes(parts, outcomes).unwrap();
                return j.distance_from_uniform("Z").unwrap();
            }
            i -= 1;
            digit[i] += 1;
            if digit[i] < picks[i].support.len() {
                break;
            }
            digit[i] = 0;
        }
    }
}

fn naive(table: &TruthTable, k: &[u32], strong: &[bool], leak: Option<(usize, u32, Accounting)>) -> Q {
    let lists: Vec<Vec<Choice>> = (0..k.len())
        .map(|i| {
            let l = leak.filter(|l| l.0 == i).map(|l| (l.1, l.2));
            choices(table.widths()[i], k[i], l)
        })
        .collect();
    let e_bits = leak.map(|l| l.1).unwrap_or(0);
    let mut best = Q::zero();
    let mut idx = vec![0usize; lists.len()];
    loop {
        let picks: Vec<Choice> = idx.iter().zip(&lists).map(|(&i, l)| l[i].clone()).collect();
        let d = distance(table, &picks, strong, e_bits);
        if d > best {
            best = d;
        }
        let mut p = lists.len();
        loop {
            if p == 0 {
                return best;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < lists[p].len() {
                break;
            }
            idx[p] = 0;
        }
    }
}

fn oracle(table: &TruthTable, k: &[u32], strong: &[bool], leak: Option<(usize, u32, Accounting)>, mode: OracleMode) -> Q {
    let inputs = (0..k.len()).map(|i| OracleInput::flat(table.widths()[i], k[i]).strong(strong[i])).collect();
    let mut q = OracleQuery::new(inputs).with_mode(mode);
    if let Some((t, bits, acc)) = leak {
        q = q.with_leak(LeakFamily { targets: vec![t], maps: MapFamily::AllUpTo { bits }, accounting: acc, model: LeakModel::Oa });
    }
    worst_case_error(table, &q).unwrap().value.to_rational()
}

#[test]
fn two_source_tables_match_naive_enumeration() {
    for seed in 0..6u64 {
        for m in [1u32, 2] {
            let t = draw_table(&[3, 2], m, seed, 0).unwrap();
            for k in [[1u32, 1], [2, 1], [1, 0]] {
                for strong in [[false, false], [true, false], [false, true]] {
                    let want = naive(&t, &k, &strong, None);
                    for mode in [OracleMode::Reduced, OracleMode::Exhaustive] {
                        assert_eq!(oracle(&t, &k, &strong, None, mode), want, "seed={seed} m={m} k={k:?} strong={strong:?} {mode:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn leaked_tables_match_naive_enumeration() {
    for seed in 0..4u64 {
        let t = draw_table(&[2, 2], 1, seed, 3).unwrap();
        for acc in [Accounting::Marginal, Accounting::Conditional] {
            for (k, strong) in [([1u32, 1], [false, true]), ([1, 1], [false, false]), ([0, 1], [false, true])] {
                let leak = Some((0usize, 1u32, acc));
                let want = naive(&t, &k, &strong, leak);
                for mode in [OracleMode::Reduced, OracleMode::Exhaustive] {
                    assert_eq!(oracle(&t, &k, &strong, leak, mode), want, "seed={seed} {acc:?} k={k:?} strong={strong:?} {mode:?}");
                }
            }
        }
    }
}

#[test]
fn three_input_table_matches_naive_enumeration() {
    let t = draw_table(&[2, 2, 2], 1, 21, 0).unwrap();
    for strong in [[true, false, false], [true, true, false], [false, false, false]] {
        let want = naive(&t, &[1, 1, 1], &strong, None);
        assert_eq!(oracle(&t, &[1, 1, 1], &strong, None, OracleMode::Reduced), want, "strong={strong:?}");
    }
}

/// Block input `X1‖X2` (each 2 bits, one bit of entropy per block) with a
/// general 2-bit `X3`, strong in the block.
#[test]
fn block_input_matches_naive_enumeration() {
    for seed in 0..3u64 {
        let t = draw_table(&[4, 2], 1, seed, 7).unwrap();
        let mut want = Q::zero();
        let children = k_subsets(4, 2);
        for parents in k_subsets(4, 2) {
            for c0 in &children {
                for c1 in &children {
                    let support: Vec<u32> = [(parents[0], c0), (parents[1], c1)].iter().flat_map(|(p, c)| c.iter().map(move |x| p << 2 | x)).collect();
                    for s3 in k_subsets(4, 2) {
                        let picks = [Choice { support: support.clone(), labels: None }, Choice { support: s3, labels: None }];
                        let d = distance(&t, &picks, &[true, false], 0);
                        if d > want {
                            want = d;
                        }
                    }
                }
            }
        }
        let q = OracleQuery::new(vec![OracleInput::block(2, 2, 1, 1), OracleInput::flat(2, 1)]);
        let got = worst_case_error(&t, &q).unwrap().value.to_rational();
        assert_eq!(got, want, "seed={seed}");
    }
}
