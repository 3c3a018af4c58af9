//! Searched gadgets re-verify, and verdicts behave monotonically.

use extractomat::combinatorics::search::{replay, SearchOptions};
use extractomat::combinatorics::{search_gadget, verify_and_disperser, BipartiteGraph, Frac, GadgetTarget, VerifyOptions, DEFAULT_GRAPH_BUDGET};
use proptest::prelude::*;

fn f(s: &str) -> Frac {
    s.parse().unwrap()
}

fn targets() -> Vec<GadgetTarget> {
    vec![
        GadgetTarget::AndDisperser { l: 12, r: 8, d: 2, delta: f("1/2"), gamma: f("1/8") },
        GadgetTarget::Expander { l: 10, r: 10, d: 4, beta: f("0.3") },
        GadgetTarget::ExtractorGraph { n: 16, m: 8, k: 3, d: 4, eps: f("1/4") },
    ]
}

#[test]
fn every_search_output_reverifies() {
    for t in targets() {
        for seed in 0..3 {
            let (g, rec) = search_gadget(&t, seed, SearchOptions::default()).unwrap();
            println!("{} seed={seed} attempts={} moves={}", t.kind(), rec.attempts, rec.moves);
            assert!(t.verify(&g, DEFAULT_GRAPH_BUDGET).unwrap().holds());
            assert_eq!(replay(&rec, DEFAULT_GRAPH_BUDGET).unwrap(), g);
            assert_eq!(BipartiteGraph::from_json(&g.to_json()).unwrap(), g);
        }
    }
}

#[test]
fn searched_disperser_is_monotone_in_delta() {
    let t = &targets()[0];
    for seed in 0..3 {
        let (g, _) = search_gadget(t, seed, SearchOptions::default()).unwrap();
        for delta in ["1/2", "5/8", "3/4", "7/8", "1"] {
            assert!(verify_and_disperser(&g, f(delta), f("1/8"), VerifyOptions::default()).unwrap().holds(), "seed={seed} δ={delta}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn disperser_monotone_on_random_graphs(seed in any::<u64>(), d in 1u32..=3, a in 1u64..=8, b in 1u64..=8, c in 1u64..=8) {
        let g = BipartiteGraph::random(8, 8, d, seed, 0).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let gamma = Frac::new(c, 8).unwrap();
        let weak = verify_and_disperser(&g, Frac::new(lo, 8).unwrap(), gamma, VerifyOptions::default()).unwrap();
        let strong = verify_and_disperser(&g, Frac::new(hi, 8).unwrap(), gamma, VerifyOptions::default()).unwrap();
        prop_assert!(!weak.holds() || strong.holds());
    }

    #[test]
    fn verdict_independent_of_thread_count(seed in any::<u64>()) {
        let g = BipartiteGraph::random(12, 8, 2, seed, 0).unwrap();
        let run = || verify_and_disperser(&g, Frac::new(1, 2).unwrap(), Frac::new(1, 8).unwrap(), VerifyOptions::default()).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
        prop_assert_eq!(one, many);
    }
}

/// At `[16, 8, 2, 4, ¼]` the two-sided target is infeasible: for `|T| = 5`
/// a vertex deviates iff `N(u) ⊆ T` or `N(u) ⊇ T^c`, and each 4-set does so
/// for exactly 4 + 4 of the 56 such `T`. The 16·8 = 128 deviations force some
/// `T` to have at least ⌈128/56⌉ = 3 > K of them.
#[test]
fn two_sided_extractor_graph_needs_k_at_least_three() {
    for seed in 0..5 {
        let g = BipartiteGraph::random(16, 8, 4, seed, 0).unwrap();
        let mut total = 0;
        let mut worst = 0;
        for t in 0u64..256 {
            if t.count_ones() != 5 {
                continue;
            }
            let off = (0..16).filter(|&u| {
                let c = (g.neighbor_mask(u) & t).count_ones();
                // |c/4 − 5/8| > 1/4
                (2 * c as i32 - 5).abs() > 2
            });
            let n = off.count();
            total += n;
            worst = worst.max(n);
        }
        assert_eq!(total, 128);
        assert!(worst >= 3);
    }
    let t = GadgetTarget::ExtractorGraph { n: 16, m: 8, k: 2, d: 4, eps: f("1/4") };
    let opts = SearchOptions { max_attempts: 2, moves_per_attempt: 2000, ..SearchOptions::default() };
    assert!(matches!(search_gadget(&t, 0, opts), Err(extractomat::Error::TargetUnreachable { .. })));
}
