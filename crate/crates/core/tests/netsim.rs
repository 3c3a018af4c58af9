use extractomat::combinatorics::Frac;
use extractomat::leakage::{LeakMap, LeakModel, LeakageScenario};
use extractomat::netsim::security::exact_counts;
use extractomat::netsim::strategies::{AdaptiveRandom, Blind, FnIr, FnQr, RushRule, StaticCorruption};
use extractomat::netsim::*;
use extractomat::BitString;
use num_rational::BigRational;
use proptest::prelude::*;
use std::sync::{Arc, OnceLock};

fn toy() -> &'static (NetworkConfig, ExtPubGadgets, SourceModel) {
    static CELL: OnceLock<(NetworkConfig, ExtPubGadgets, SourceModel)> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = NetworkConfig::toy_ext_pub();
        let g = ExtPubGadgets::build(&cfg, None).unwrap();
        let model = SourceModel::random_flat(cfg.p, cfg.n, cfg.k, 3).unwrap();
        (cfg, g, model)
    })
}

/// OA leak of one bit (the parity) from player `target`.
fn parity_leak(model: SourceModel, target: usize) -> SourceModel {
    let widths: Vec<u32> = model.sources.iter().map(|s| s.width()).collect();
    let maps = widths
        .iter()
        .enumerate()
        .map(|(i, &w)| if i == target { LeakMap::from_fn(w, 0, 1, |x, _| x.count_ones() & 1).unwrap() } else { LeakMap::trivial(w, 0) })
        .collect();
    let sc = LeakageScenario { shared_widths: vec![0; widths.len()], source_widths: widths, maps, model: LeakModel::Oa };
    model.with_leakage(sc).unwrap()
}

fn micro_geqr() -> (NetworkConfig, GeqrGadgets, SourceModel) {
    let cfg = NetworkConfig::micro_geqr();
    let g = GeqrGadgets::build(&cfg, None).unwrap();
    let model = parity_leak(SourceModel::random_flat(cfg.p, cfg.n, cfg.k, 8).unwrap(), 2);
    (cfg, g, model)
}

#[test]
fn ext_pub_width_and_replay() {
    let (cfg, g, model) = toy();
    let draw = model.outcome(777);
    let a = run_ext_net(cfg, g, model, &draw, &mut Adversary::None, 5).unwrap();
    let b = run_ext_net(cfg, g, model, &draw, &mut Adversary::None, 5).unwrap();
    let c = run_ext_net(cfg, g, model, &draw, &mut Adversary::None, 6).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.y().unwrap(), c.y().unwrap(), "honest y depends only on the sources");
    assert_eq!(a.y_width(), 2 * 3 * 2);
    assert_eq!(a.y().unwrap().width(), 12);
    assert_eq!((a.run.rounds, a.run.local_steps), (EXT_PUB_ROUNDS, 1));
    assert!(a.run.outputs[..2].iter().all(|o| o.is_none()));
    assert!(a.run.outputs[2..].iter().all(|o| o.is_some()));
}

#[test]
fn ext_pri_ignores_own_component() {
    let (cfg, g, model) = toy();
    let draw = model.outcome(4242);
    let run = run_ext_net(cfg, g, model, &draw, &mut Adversary::None, 1).unwrap();
    for (pos, &j) in run.partition.b.iter().enumerate() {
        let mut altered = run.clone();
        altered.y1[pos] = BitString::new(run.slice, run.y1[pos].value() ^ 1).unwrap();
        altered.y2[pos] = BitString::new(run.slice, run.y2[pos].value() ^ 2).unwrap();
        run_ext_pri(cfg, g, &mut altered, &draw).unwrap();
        assert_eq!(altered.run.outputs[j], run.run.outputs[j], "player {j}");
    }
}

#[test]
fn adaptive_runs_keep_rushing_order() {
    let (cfg, g, model) = toy();
    let mut corrupted = 0;
    for s in 0..2000u64 {
        let mut adv = Adversary::Ir(Box::new(AdaptiveRandom { rate: 0.4, rule: RushRule::Random }));
        let draw = model.outcome(s * 104_729 % model.outcome_count().unwrap());
        let r = run_ext_net(cfg, g, model, &draw, &mut adv, s).unwrap();
        assert_eq!(rushing_violation(&r.run.events), None);
        assert!(r.run.faulty.len() <= cfg.t);
        corrupted += r.run.faulty.len();
        for e in &r.run.events {
            assert_eq!(e.faulty, r.run.corruptions.iter().any(|&(round, p)| p == e.sender && round <= e.round));
        }
    }
    assert!(corrupted > 0);
}

#[test]
fn event_log_is_json_lines() {
    let (cfg, g, model) = toy();
    let mut adv = Adversary::Ir(Box::new(StaticCorruption { players: vec![3], rule: RushRule::Flip }));
    let r = run_ext_net(cfg, g, model, &model.outcome(9), &mut adv, 2).unwrap();
    let lines: Vec<EventRecord> = r.run.to_json_lines().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines, r.run.records());
    assert_eq!(lines.len(), 2 + 3 + 3);
    let faulty: Vec<_> = lines.iter().filter(|e| e.faulty).map(|e| (e.round, e.order)).collect();
    assert_eq!(faulty, vec![(2, 4), (3, 7)]);
}

/// `t = 2`, `|A| = 3`, degree-1 disperser at `δ = 1/3`: the good set
/// guarantee applies, so every run must find a non-empty `V`.
fn guaranteed() -> &'static (NetworkConfig, ExtPubGadgets, SourceModel) {
    static CELL: OnceLock<(NetworkConfig, ExtPubGadgets, SourceModel)> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut cfg = NetworkConfig { p: 9, t: 2, n: 3, k: 2, d: 1, ..NetworkConfig::toy_ext_pub() };
        cfg.gadgets.disperser_delta = Frac::new(1, 3).unwrap();
        cfg.gadgets.disperser_gamma = Frac::new(1, 5).unwrap();
        cfg.gadgets.expander_degree = 2;
        cfg.gadgets.oaext_out = 1;
        let g = ExtPubGadgets::build(&cfg, None).unwrap();
        assert!(g.disperser_applies(&cfg));
        let model = SourceModel::random_flat(cfg.p, cfg.n, cfg.k, 1).unwrap();
        (cfg, g, model)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn good_set_nonempty_under_corruption(seed in any::<u64>(), idx in any::<u64>(), rate in 0.1f64..1.0) {
        let (cfg, g, model) = guaranteed();
        let draw = model.outcome(idx % model.outcome_count().unwrap());
        let mut adv = Adversary::Ir(Box::new(AdaptiveRandom { rate, rule: RushRule::Random }));
        let r = run_ext_pub(cfg, g, model, &draw, &mut adv, seed).unwrap();
        prop_assert!(!r.good_v.is_empty());
        prop_assert!(r.good_b.iter().all(|j| !r.run.is_faulty(*j)));
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>(), idx in any::<u64>()) {
        let (cfg, g, model) = toy();
        let draw = model.outcome(idx % model.outcome_count().unwrap());
        let mk = || Adversary::Ir(Box::new(AdaptiveRandom { rate: 0.5, rule: RushRule::Random }));
        let a = run_ext_net(cfg, g, model, &draw, &mut mk(), seed).unwrap();
        let b = run_ext_net(cfg, g, model, &draw, &mut mk(), seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ir_rushing_ignores_side_information(idx in any::<u64>(), e in any::<u32>(), seed in any::<u64>()) {
        let (cfg, g, model) = micro_geqr();
        let draw = model.outcome(idx % model.outcome_count().unwrap());
        let mut other = draw.clone();
        other.e = vec![e & 1];
        let mk = || Adversary::Qr(Box::new(Blind(AdaptiveRandom { rate: 0.7, rule: RushRule::Random })));
        let a = run_geqr(&cfg, &g, &model, &draw, &mut mk(), seed).unwrap();
        let b = run_geqr(&cfg, &g, &model, &other, &mut mk(), seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn geqr_rushing_width_is_bounded(idx in any::<u64>(), seed in any::<u64>(), rate in 0.0f64..1.0) {
        let cfg = NetworkConfig::toy_geqr();
        let g = geqr_toy();
        let model = SourceModel::random_flat(cfg.p, cfg.n, cfg.k, 2).unwrap();
        let draw = model.outcome(idx % model.outcome_count().unwrap());
        let mut adv = Adversary::Ir(Box::new(AdaptiveRandom { rate, rule: RushRule::Random }));
        let r = run_geqr(&cfg, g, &model, &draw, &mut adv, seed).unwrap();
        prop_assert!(r.rushed_bits <= cfg.group_seed_width().unwrap() * cfg.t as u32);
        prop_assert_eq!(r.y.width(), 2 * 2);
    }
}

fn geqr_toy() -> &'static GeqrGadgets {
    static CELL: OnceLock<GeqrGadgets> = OnceLock::new();
    CELL.get_or_init(|| GeqrGadgets::build(&NetworkConfig::toy_geqr(), None).unwrap())
}

#[test]
fn geqr_honest_y_is_group_concatenation() {
    let cfg = NetworkConfig::toy_geqr();
    let g = geqr_toy();
    let model = SourceModel::random_flat(cfg.p, cfg.n, cfg.k, 2).unwrap();
    let draw = model.outcome(31);
    let r = run_geqr(&cfg, g, &model, &draw, &mut Adversary::None, 0).unwrap();
    let groups = cfg.groups().unwrap();
    let parts: Vec<BitString> = groups.groups.iter().map(|m| BitString::new(2, g.iext.eval_raw(&[draw.x[m[0]], draw.x[m[1]]])).unwrap()).collect();
    assert_eq!(r.y, BitString::concat_all(&parts).unwrap());
    assert_eq!(r.rushed_bits, 0);
    assert!(groups.groups.iter().flatten().all(|&i| r.run.outputs[i].is_none()));
    assert!(groups.b.iter().all(|&i| r.run.outputs[i].is_some()));
}

#[test]
fn qr_strategy_reads_the_register() {
    let (cfg, g, model) = micro_geqr();
    let draw = model.outcome(100);
    let mut other = draw.clone();
    other.e = vec![draw.e[0] ^ 1];
    let strat = FnQr { label: "echo".into(), players: vec![1], rush: Arc::new(|_, side, req| BitString::new(req.width, side.values[0] << (req.width - 1)).unwrap()) };
    let a = run_geqr(&cfg, &g, &model, &draw, &mut Adversary::Qr(Box::new(strat.clone())), 0).unwrap();
    let b = run_geqr(&cfg, &g, &model, &other, &mut Adversary::Qr(Box::new(strat)), 0).unwrap();
    assert_ne!(a.y, b.y);
    assert_eq!(a.rushed_bits, 2);
}

fn exact_set_error(cfg: &NetworkConfig, g: &GeqrGadgets, model: &SourceModel, set: &[usize], mk: &(dyn Fn() -> Adversary + Sync)) -> BigRational {
    exact_counts(model, &|d, s| observe_set(&run_geqr(cfg, g, model, d, &mut mk(), s)?.run, d, set)).unwrap().distance()
}

#[test]
fn rushing_optimum_matches_simulation() {
    let (cfg, g, model) = micro_geqr();
    let opt = geqr_rushing_optimum(&cfg, &g, &model, 1, &[2]).unwrap();
    assert_eq!(opt.rush_bits, 2);
    assert!(opt.lift_holds());
    assert!(opt.ir <= opt.qr);
    let ir = opt.ir_strategy();
    let qr = opt.qr_strategy();
    assert_eq!(exact_set_error(&cfg, &g, &model, &[2], &|| Adversary::Ir(Box::new(ir.clone()))), opt.ir);
    assert_eq!(exact_set_error(&cfg, &g, &model, &[2], &|| Adversary::Qr(Box::new(qr.clone()))), opt.qr);
    for rule in [RushRule::Honest, RushRule::Zero, RushRule::Flip, RushRule::Random] {
        let e = exact_set_error(&cfg, &g, &model, &[2], &|| Adversary::Ir(Box::new(StaticCorruption { players: vec![1], rule })));
        assert!(e <= opt.ir, "{rule:?}");
    }
    let parity = FnIr {
        label: "parity".into(),
        players: vec![1],
        rush: Arc::new(|view, req| BitString::new(req.width, view.honest_this_round().map(|e| e.msg.value()).sum::<u32>() & 0x18).unwrap()),
    };
    assert!(exact_set_error(&cfg, &g, &model, &[2], &|| Adversary::Ir(Box::new(parity.clone()))) <= opt.ir);
}

#[test]
fn hybrid_union_bound_holds_exactly() {
    let cfg = NetworkConfig::micro_hybrid();
    let g = GeqrGadgets::build(&cfg, None).unwrap();
    let model = parity_leak(SourceModel::random_flat(cfg.p, cfg.n, cfg.k, 4).unwrap(), 2);
    let groups = cfg.groups().unwrap();
    assert_eq!(groups.b, vec![2, 3]);
    let rep = hybrid_union(&model, &groups.b, &|d, s| {
        let mut adv = Adversary::Ir(Box::new(StaticCorruption { players: vec![0], rule: RushRule::Flip }));
        Ok(run_geqr(&cfg, &g, &model, d, &mut adv, s)?.run)
    })
    .unwrap();
    assert!(rep.holds, "{rep:?}");
}
