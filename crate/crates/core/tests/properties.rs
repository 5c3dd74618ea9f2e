use cu_bound::binom::binomial;
use cu_bound::markov::{
    build_kernel, build_kernel_with, expected_error, expected_error_on, ChainParams, Evolution,
    KernelDump, StateSpace, Variant,
};
use cu_bound::simulate::{
    brute_force_expected_error, estimate_error, estimate_error_with, kernel_event_check,
    run_trajectory, sandwich_trace, SimConfig, StreamMode,
};
use cu_bound::sketch::{Rule, Sketch, SketchConfig, UniformSelector};
use cu_bound::Execution;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn m_d() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=8).prop_flat_map(|m| (Just(m), 1..=m))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sandwich_holds((m, d) in m_d(), g in 1u64..=3, t in 1u64..=50, seed in any::<u64>()) {
        let r = sandwich_trace(m, d, g, t, seed).unwrap();
        prop_assert!(r.violation.is_none(), "{:?}", r.violation);
        if t <= g {
            prop_assert!(r.identical_throughout);
        }
    }

    #[test]
    fn caps_bound_the_gap((m, d) in m_d(), g in 1u64..=4, t in 1u64..=80, seed in any::<u64>()) {
        let cfg = SketchConfig::new(m, d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sel = UniformSelector::new(cfg);
        let mut lb = Sketch::new(&cfg, Rule::lower(g)).unwrap();
        let mut ub = Sketch::new(&cfg, Rule::upper(g)).unwrap();
        for _ in 0..t {
            let s = sel.select(&mut rng);
            lb.update(&s).unwrap();
            ub.update(&s).unwrap();
            prop_assert!(lb.counters().gap() <= g);
            prop_assert!(ub.counters().gap() <= g);
        }
        prop_assert_eq!(lb.counters().steps(), t);
    }

    #[test]
    fn delta_representation_invariants((m, d) in m_d(), t in 0u64..=60, seed in any::<u64>()) {
        let cfg = SketchConfig::new(m, d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sel = UniformSelector::new(cfg);
        let mut cu = Sketch::conservative(&cfg);
        for _ in 0..t {
            cu.update(&sel.select(&mut rng)).unwrap();
            let c = cu.counters();
            let k = c.delta();
            prop_assert_eq!(k.total(), m as u64);
            prop_assert!(k.get(0) >= 1);
            prop_assert_eq!(k.top_level() as u64, c.gap());
            prop_assert!(k.get(k.top_level()) as usize >= d);
            let g = (c.gap() as usize).max(1);
            prop_assert!(k.is_member(&ChainParams::new(m, d, g).unwrap()));
        }
    }

    #[test]
    fn state_count_matches_binomial(m in 2usize..=10, dd in 0usize..10, g in 1usize..=4) {
        let d = 1 + dd % m;
        let space = StateSpace::enumerate(ChainParams::new(m, d, g).unwrap()).unwrap();
        let want = binomial((m + g - d) as u64, g as u64).unwrap();
        prop_assert_eq!(space.len() as u128, want);
        for (i, k) in space.iter().enumerate() {
            prop_assert_eq!(space.index_of(&k), Some(i));
        }
    }

    #[test]
    fn monotone_in_gap_cap((m, d) in (3usize..=10).prop_flat_map(|m| (Just(m), 1..m)), t in 1u64..=30) {
        let mut prev: Option<(f64, f64)> = None;
        for g in 1..=4 {
            let p = ChainParams::new(m, d, g).unwrap();
            let l = expected_error(p, t, Variant::Lower).unwrap();
            let u = expected_error(p, t, Variant::Upper).unwrap();
            prop_assert!(l <= u + 1e-12);
            if let Some((pl, pu)) = prev {
                prop_assert!(pl <= l + 1e-12, "g={}: {} < {}", g, l, pl);
                prop_assert!(u <= pu + 1e-12, "g={}: {} > {}", g, u, pu);
            }
            prev = Some((l, u));
        }
    }
}

#[test]
fn oracle_agreement_small_instances() {
    for m in 2..=4 {
        for t in 1..=4u64 {
            let exact = brute_force_expected_error(m, 2, t)
                .unwrap()
                .expected_error_rate();
            let p = ChainParams::new(m, 2, t as usize).unwrap();
            for variant in [Variant::Lower, Variant::Upper] {
                let got = expected_error(p, t, variant).unwrap();
                assert!(
                    (got - exact).abs() < 1e-12,
                    "m={m} T={t} {variant:?}: {got} vs {exact}"
                );
            }
            let looser = ChainParams::new(m, 2, 1).unwrap();
            let l = expected_error(looser, t, Variant::Lower).unwrap();
            let u = expected_error(looser, t, Variant::Upper).unwrap();
            assert!(
                l <= exact + 1e-12 && exact <= u + 1e-12,
                "m={m} T={t}: {l} {exact} {u}"
            );
        }
    }
}

#[test]
fn empirical_kernel_events() {
    for (m, d, g, seed) in [(6, 3, 2, 1u64), (9, 4, 3, 2), (5, 2, 4, 3), (12, 6, 2, 4)] {
        let space = StateSpace::enumerate(ChainParams::new(m, d, g).unwrap()).unwrap();
        for i in [0, space.len() / 2, space.len() - 1] {
            let r = kernel_event_check(&space, i, 20_000, seed * 31 + i as u64).unwrap();
            assert!(r.within(4.0), "m={m} d={d} g={g}: {r:?}");
        }
    }
}

#[test]
fn simulation_agrees_with_exact_value() {
    let exact = brute_force_expected_error(3, 2, 2)
        .unwrap()
        .expected_error_rate();
    let cfg = SimConfig::uniform(3, 2, 2, 100_000, 11, Rule::Conservative);
    let s = estimate_error(&cfg).unwrap();
    assert!(
        (s.mean_error_rate - exact).abs() <= 3.0 * s.error_rate_std_error,
        "{} ± {} vs {exact}",
        s.mean_error_rate,
        s.error_rate_std_error
    );

    let one = estimate_error(&SimConfig::uniform(3, 2, 1, 1000, 5, Rule::Conservative)).unwrap();
    assert!((one.mean_error_rate - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn full_selection_is_degenerate() {
    for m in [2, 4, 7] {
        for g in 1..=3 {
            for variant in [Variant::Lower, Variant::Upper] {
                let e = expected_error(ChainParams::new(m, m, g).unwrap(), 9, variant).unwrap();
                assert!((e - 1.0).abs() < 1e-14);
            }
        }
        if m <= 4 {
            let r = brute_force_expected_error(m, m, 3).unwrap();
            assert_eq!((r.numerator, r.denominator), (3, 1));
        }
        let tr =
            run_trajectory(&SimConfig::uniform(m, m, 25, 1, 0, Rule::Conservative), 0).unwrap();
        assert_eq!(tr.counters.gap(), 0);
        assert!((tr.error_rate() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn distinct_stream_matches_uniform_selection() {
    let uniform = SimConfig::uniform(7, 3, 40, 50, 99, Rule::upper(2));
    let mut hashed = uniform.clone();
    hashed.stream = StreamMode::Items((0..40).collect());
    let a = estimate_error(&uniform).unwrap();
    let b = estimate_error(&hashed).unwrap();
    assert_eq!(a.mean_error_rate, b.mean_error_rate);
    assert_eq!(a.gap_tail, b.gap_tail);
}

#[test]
fn sequential_and_parallel_agree() {
    let space = StateSpace::enumerate(ChainParams::new(10, 3, 3).unwrap()).unwrap();
    for variant in [Variant::Lower, Variant::Upper] {
        let seq = build_kernel_with(&space, variant, Execution::Sequential).unwrap();
        let par = build_kernel_with(&space, variant, Execution::Parallel).unwrap();
        assert_eq!(seq.expected_increment(), par.expected_increment());
        assert_eq!(KernelDump::new(&space, &seq), KernelDump::new(&space, &par));
        let a = expected_error_on(&seq, 40, Execution::Sequential).unwrap();
        let b = expected_error_on(&par, 40, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let mut ea = Evolution::new(&seq, Execution::Sequential);
        let mut eb = Evolution::new(&par, Execution::Parallel);
        for _ in 0..10 {
            ea.step();
            eb.step();
        }
        assert_eq!(ea.probs(), eb.probs());
    }
    let cfg = SimConfig::uniform(8, 3, 100, 16, 3, Rule::lower(2));
    assert_eq!(
        estimate_error_with(&cfg, Execution::Sequential).unwrap(),
        estimate_error_with(&cfg, Execution::Parallel).unwrap()
    );
}

#[test]
fn kernel_dump_round_trip() {
    let space = StateSpace::enumerate(ChainParams::new(5, 2, 2).unwrap()).unwrap();
    let k = build_kernel(&space, Variant::Upper).unwrap();
    let dump = KernelDump::new(&space, &k);
    let mut buf = Vec::new();
    dump.write_json(&mut buf).unwrap();
    let back = KernelDump::read_json(buf.as_slice()).unwrap();
    assert_eq!(back, dump);
    assert_eq!(back.states.len(), space.len());
    assert!(back.states.iter().all(|s| s.len() == 3));
    assert_eq!(back.edges.len(), k.num_edges());
}
