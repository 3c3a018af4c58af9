use extractomat::leakage::{LeakMap, LeakModel, LeakageScenario};
use extractomat::netsim::EvalMode;
use extractomat::oracle::{Accounting, LeakFamily, OracleMode};
use extractomat::pa::*;
use extractomat::{BitString, ExtractorHandle, FlatSource};
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn prefix_map(width: u32, b: u32) -> Vec<u32> {
    (0..1u32 << width).map(|x| if b == 0 { 0 } else { x >> (width - b) }).collect()
}

fn prefix_family(protocol: PaProtocol, width: u32, b: u32) -> Option<LeakFamily> {
    (b > 0).then(|| LeakFamily::explicit(vec![protocol.secret_index()], b, vec![prefix_map(width, b)], Accounting::Marginal).unwrap())
}

fn prefix_scenario(widths: &[u32], b: u32) -> LeakageScenario {
    let mut sc = LeakageScenario::trivial(widths);
    if b > 0 {
        let w = widths[0];
        sc.maps[0] = LeakMap::from_fn(w, 0, b, move |x, _| x >> (w - b)).unwrap();
        sc.model = LeakModel::Oa;
    }
    sc
}

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// `2·Δ` numerator over `|S|·2^m` for a one-bit key of `x` uniform on `xs`,
/// conditioned on the leak label.
fn leaked_bias(xs: &[u32], labels: &[u32], key: impl Fn(u32) -> u32) -> (i64, i64) {
    let mut cells = std::collections::BTreeMap::<u32, [i64; 2]>::new();
    for &x in xs {
        cells.entry(labels[x as usize]).or_default()[key(x) as usize] += 1;
    }
    let num: i64 = cells.values().map(|c| (c[0] - c[1]).abs()).sum();
    (num, 2 * xs.len() as i64)
}

fn subsets(n: u32, size: usize) -> Vec<Vec<u32>> {
    (0u32..1 << n).filter(|m| m.count_ones() as usize == size).map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect()).collect()
}

/// Independent worst case for protocol 1: X uniform on 6 bits, Y flat of
/// size 8 on 4 bits. Strong in Y, so the worst support averages the 8
/// largest per-seed distances.
fn brute_one_source(h: &ExtractorHandle, b: u32) -> BigRational {
    let labels = prefix_map(6, b);
    let xs: Vec<u32> = (0..64).collect();
    let mut per_y: Vec<BigRational> = (0..16u32)
        .map(|y| {
            let (n, d) = leaked_bias(&xs, &labels, |x| h.eval_raw(&[x, y]));
            rational(n, d)
        })
        .collect();
    per_y.sort();
    per_y.iter().rev().take(8).sum::<BigRational>() / rational(8, 1)
}

/// Independent worst case for protocol 2: Y₁, Y₂ flat of size 2 on 2 bits,
/// X flat of size 8 on 4 bits.
fn brute_three_source(h: &ExtractorHandle, b: u32) -> BigRational {
    let labels = prefix_map(4, b);
    let ys = subsets(4, 2);
    let mut best = rational(0, 1);
    for xs in subsets(16, 8) {
        let d: Vec<Vec<BigRational>> = (0..4u32)
            .map(|y1| {
                (0..4u32)
                    .map(|y2| {
                        let (n, den) = leaked_bias(&xs, &labels, |x| h.eval_raw(&[y1, y2, x]));
                        rational(n, den)
                    })
                    .collect()
            })
            .collect();
        for s1 in &ys {
            for s2 in &ys {
                let sum: BigRational = s1.iter().flat_map(|&a| s2.iter().map(move |&c| (a, c))).map(|(a, c)| d[a as usize][c as usize].clone()).sum();
                best = best.max(sum / rational(4, 1));
            }
        }
    }
    best
}

#[test]
fn keys_agree_on_every_run() {
    let one = micro_weak_seed(1).unwrap().handle;
    let three = micro_three_source(1).unwrap().handle;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100_000 {
        let x = BitString::new(6, rng.gen_range(0..64)).unwrap();
        let y = BitString::new(4, rng.gen_range(0..16)).unwrap();
        let s = pa_one_source(&x, &x, &y, &one).unwrap();
        assert!(s.keys_agree());
        let x = BitString::new(4, rng.gen_range(0..16)).unwrap();
        let (y1, y2) = (BitString::new(2, rng.gen_range(0..4)).unwrap(), BitString::new(2, rng.gen_range(0..4)).unwrap());
        let s = pa_two_sources(&x, &y1, &y2, &three).unwrap();
        assert!(s.keys_agree());
    }
}

#[test]
fn transcripts_have_protocol_length() {
    let one = micro_weak_seed(1).unwrap().handle;
    let three = micro_three_source(1).unwrap().handle;
    let x6 = BitString::new(6, 41).unwrap();
    let s = pa_one_source(&x6, &x6, &BitString::new(4, 9).unwrap(), &one).unwrap();
    assert_eq!(s.transcript.len(), 1);
    assert_eq!(s.transcript[0].from, Party::Alice);
    let y = |v| BitString::new(2, v).unwrap();
    let s = pa_two_sources(&BitString::new(4, 3).unwrap(), &y(1), &y(2), &three).unwrap();
    assert_eq!(s.transcript.len(), 2);
    assert_eq!((s.transcript[0].from, s.transcript[1].from), (Party::Alice, Party::Bob));
}

#[test]
fn one_source_worst_case_matches_brute_force() {
    let c = micro_weak_seed(1).unwrap();
    let h = &c.handle;
    let frozen = [rational(3, 32), rational(3, 32), rational(1, 8)];
    for b in 0..3 {
        let r = eavesdropper_worst_case(PaProtocol::OneSource, h, &[6, 3], prefix_family(PaProtocol::OneSource, 6, b), OracleMode::Exhaustive).unwrap();
        let brute = brute_one_source(h, b);
        assert_eq!(r.error.parse().unwrap(), brute, "b={b}");
        assert_eq!(brute, frozen[b as usize], "b={b}");
    }
    let r0 = eavesdropper_worst_case(PaProtocol::OneSource, h, &[6, 3], None, OracleMode::Exhaustive).unwrap();
    assert!(c.admits(&r0.error.parse().unwrap()).unwrap());
}

#[test]
fn three_source_worst_case_matches_brute_force() {
    let c = micro_three_source(1).unwrap();
    let h = &c.handle;
    for b in 0..3 {
        let r = eavesdropper_worst_case(PaProtocol::TwoSources, h, &[1, 1, 3], prefix_family(PaProtocol::TwoSources, 4, b), OracleMode::Reduced).unwrap();
        assert_eq!(r.error.parse().unwrap(), brute_three_source(h, b), "b={b}");
        if b == 0 {
            assert!(c.admits(&r.error.parse().unwrap()).unwrap());
        }
    }
}

fn one_source_model(b: u32) -> PaModel {
    let x = FlatSource::new(6, (0..64).collect()).unwrap();
    let y = FlatSource::new(4, vec![0, 2, 3, 5, 8, 11, 12, 15]).unwrap();
    PaModel::new(PaProtocol::OneSource, x, vec![y]).unwrap().with_leakage(prefix_scenario(&[6, 4], b)).unwrap()
}

fn three_source_model(b: u32) -> PaModel {
    let x = FlatSource::new(4, vec![1, 2, 4, 7, 8, 11, 13, 14]).unwrap();
    let y = |s: Vec<u32>| FlatSource::new(2, s).unwrap();
    PaModel::new(PaProtocol::TwoSources, x, vec![y(vec![0, 3]), y(vec![1, 2])]).unwrap().with_leakage(prefix_scenario(&[4, 2, 2], b)).unwrap()
}

#[test]
fn exact_eavesdropper_distance_within_budget() {
    let c = micro_weak_seed(1).unwrap();
    let d = eavesdropper_distance(&one_source_model(0), &c.handle, EvalMode::Exact).unwrap();
    let exact = d.exact.unwrap().parse().unwrap();
    assert!(c.admits(&exact).unwrap());
    let worst = eavesdropper_worst_case(PaProtocol::OneSource, &c.handle, &[6, 3], None, OracleMode::Exhaustive).unwrap();
    assert!(exact <= worst.error.parse().unwrap());

    let c = micro_three_source(1).unwrap();
    let d = eavesdropper_distance(&three_source_model(0), &c.handle, EvalMode::Exact).unwrap();
    let exact = d.exact.unwrap().parse().unwrap();
    assert!(c.admits(&exact).unwrap());
    let worst = eavesdropper_worst_case(PaProtocol::TwoSources, &c.handle, &[1, 1, 3], None, OracleMode::Reduced).unwrap();
    assert!(exact <= worst.error.parse().unwrap());
}

#[test]
fn distance_is_monotone_in_leak_width() {
    let one = micro_weak_seed(1).unwrap().handle;
    let three = micro_three_source(1).unwrap().handle;
    let mut prev = (rational(-1, 1), rational(-1, 1));
    for b in 0..3 {
        let a = eavesdropper_distance(&one_source_model(b), &one, EvalMode::Exact).unwrap().exact.unwrap().parse().unwrap();
        let t = eavesdropper_distance(&three_source_model(b), &three, EvalMode::Exact).unwrap().exact.unwrap().parse().unwrap();
        assert!(a >= prev.0 && t >= prev.1, "b={b}");
        prev = (a, t);
    }
}

#[test]
fn sampled_distance_brackets_exact() {
    let h = micro_weak_seed(1).unwrap().handle;
    let model = one_source_model(1);
    let exact = eavesdropper_distance(&model, &h, EvalMode::Exact).unwrap().value;
    let mc = eavesdropper_distance(&model, &h, EvalMode::Sampled { runs: 80_000, tol: 0.05, seed: 3 }).unwrap();
    let r = mc.mc.unwrap();
    assert!((r.estimate - exact).abs() <= r.half_width, "exact {exact}, estimate {} ± {}", r.estimate, r.half_width);
}

#[test]
fn seeds_are_revealed_in_the_measured_view() {
    // Eve's view includes the transcript, so hiding it can only help her less.
    let h = micro_weak_seed(1).unwrap().handle;
    let model = one_source_model(0);
    let with = eavesdropper_distance(&model, &h, EvalMode::Exact).unwrap().exact.unwrap().parse().unwrap();
    let without = extractomat::netsim::evaluate_security(&model.sources, "key-only", EvalMode::Exact, &|d, _| {
        let mut o = eve_observation(&model.session(d, &h)?);
        o.key.clear();
        Ok(o)
    })
    .unwrap()
    .exact
    .unwrap()
    .parse()
    .unwrap();
    assert!(with >= without);
}

proptest! {
    #[test]
    fn sending_order_leaves_keys_unchanged(x in 0u32..16, y1 in 0u32..4, y2 in 0u32..4) {
        let h = micro_three_source(1).unwrap().handle;
        let b = |w, v| BitString::new(w, v).unwrap();
        let a = pa_two_sources_ordered(&b(4, x), &b(2, y1), &b(2, y2), &h, Party::Alice).unwrap();
        let z = pa_two_sources_ordered(&b(4, x), &b(2, y1), &b(2, y2), &h, Party::Bob).unwrap();
        prop_assert_eq!(a.alice_key, z.alice_key);
        prop_assert_eq!(a.bob_key, z.bob_key);
        prop_assert_eq!(z.transcript[0].from, Party::Bob);
    }

    #[test]
    fn one_source_keys_agree(x in 0u32..64, y in 0u32..16) {
        let h = micro_weak_seed(2).unwrap().handle;
        let xs = BitString::new(6, x).unwrap();
        let s = pa_one_source(&xs, &xs, &BitString::new(4, y).unwrap(), &h).unwrap();
        prop_assert!(s.keys_agree());
        prop_assert_eq!(s.sent_by(Party::Alice), Some(BitString::new(4, y).unwrap()));
    }
}
