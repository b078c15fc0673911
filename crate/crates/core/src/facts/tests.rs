use std::collections::BTreeSet;
use std::f64::consts::{FRAC_1_SQRT_2 as H, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::quantum::{basis_weights, max_cross_amplitude, BasisSpec, C64};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ledger(mode: Mode) -> Ledger {
    Ledger::new(mode, LedgerConfig::default())
}

fn plus() -> Vec<C64> {
    vec![c(H), c(H)]
}

/// S in |+⟩ measured by A in z: the pair ends up in a Bell state.
fn measured_pair(mode: Mode, seed: u64) -> (Ledger, ObserverId, ObserverId, ChaCha8Rng) {
    let mut l = ledger(mode);
    let s = l.register_prepared(plus()).unwrap();
    let a = l.register_system(2).unwrap();
    let mut r = rng(seed);
    l.interact(a, s, &InteractionSpec::pointer("z"), &mut r).unwrap();
    (l, s, a, r)
}

/// 5σ binomial band around n·p.
fn within_5_sigma(count: usize, n: usize, p: f64) -> bool {
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - n as f64 * p).abs() <= 5.0 * sigma
}

/// CNOT on [x, y] ordering with y as control.
fn cnot_y_controls_x() -> Coupling {
    let mut rows = vec![vec![[0.0, 0.0]; 4]; 4];
    // |x y⟩ index = 2x + y; |0 0⟩→|0 0⟩, |1 0⟩→|1 0⟩, |0 1⟩→|1 1⟩, |1 1⟩→|0 1⟩
    for (to, from) in [(0, 0), (2, 2), (3, 1), (1, 3)] {
        rows[to][from] = [1.0, 0.0];
    }
    Coupling::Matrix(rows)
}

fn check_single_liveness(l: &Ledger) {
    let mut seen = BTreeSet::new();
    for f in l.facts().iter().filter(|f| f.live) {
        assert!(seen.insert((f.holder, f.target)), "two live facts for {:?}", (f.holder, f.target));
    }
}

#[test]
fn registration() {
    let mut l = ledger(Mode::Cpl);
    let q = l.register_system(2).unwrap();
    assert!(l.facts_of(q, false).unwrap().is_empty());
    assert_eq!(l.observer(q).unwrap().members.len(), 1);

    let mut l = ledger(Mode::Cpl);
    let a = l.register_system(3).unwrap();
    let b = l.register_system(2).unwrap();
    assert_ne!(a, b);
    assert_eq!(l.observer(a).unwrap().dim, 3);
    assert!(matches!(l.register_system(1), Err(LedgerError::Quantum(_))));
}

#[test]
fn thirteenth_qubit_exceeds_cap() {
    let mut l = ledger(Mode::Cpl);
    for _ in 0..12 {
        l.register_system(2).unwrap();
    }
    assert!(matches!(l.register_system(2), Err(LedgerError::CapacityExceeded { dim: 8192, cap: 4096 })));
}

#[test]
fn pointer_interaction_makes_bell_and_reciprocal_facts() {
    let (l, s, a, _) = measured_pair(Mode::Cpl, 3);
    let st = l.state();
    assert_eq!(st.dim(), 4);
    let amps: Vec<f64> = st.amplitudes().iter().map(|z| z.norm()).collect();
    assert!((amps[0] - H).abs() < 1e-12 && (amps[3] - H).abs() < 1e-12);

    let fa = l.facts_of(a, true).unwrap();
    let fs = l.facts_of(s, true).unwrap();
    assert_eq!((fa.len(), fs.len()), (1, 1));
    assert_eq!((fa[0].target, fa[0].basis.as_str()), (s, "z"));
    assert_eq!((fs[0].target, fs[0].basis.as_str()), (a, "z"));
    assert_eq!(fa[0].value, fs[0].value);

    let LedgerEvent::Interaction(e) = &l.events()[0] else { panic!("expected interaction") };
    assert_eq!(e.schmidt.coefficients.len(), 2);
    assert_eq!(e.schmidt.degeneracy_classes, vec![vec![0, 1]]);
    assert!(e.weights.iter().all(|w| (w - 0.5).abs() < 1e-12));
}

#[test]
fn pointer_interaction_values_are_fair() {
    let n = 10_000;
    let mut ones = 0;
    for t in 0..n {
        let (l, _, a, _) = measured_pair(Mode::Cpl, t);
        ones += l.facts_of(a, true).unwrap()[0].value;
    }
    assert!(within_5_sigma(ones, n as usize, 0.5), "{ones}");
}

#[test]
fn identity_coupling_on_product_state() {
    let mut l = ledger(Mode::Cpl);
    let a = l.register_system(2).unwrap();
    let b = l.register_system(3).unwrap();
    let spec = InteractionSpec { coupling: Coupling::Identity, ..InteractionSpec::pointer("z") };
    let e = l.interact(a, b, &spec, &mut rng(0)).unwrap();
    assert_eq!(e.schmidt.coefficients.len(), 1);
    assert_eq!(e.sampled_index, 0);
    assert_eq!(l.facts_of(a, true).unwrap()[0].value, 0);
    assert_eq!(l.facts_of(b, true).unwrap()[0].value, 0);
}

#[test]
fn bell_coupling_supports_x_facts() {
    let n = 10_000;
    let spec = InteractionSpec { coupling: cnot_y_controls_x(), ..InteractionSpec::pointer("x") };
    let mut ones = 0;
    for t in 0..n {
        let mut l = ledger(Mode::Cpl);
        let s = l.register_prepared(plus()).unwrap();
        let a = l.register_system(2).unwrap();
        l.interact(a, s, &spec, &mut rng(t)).unwrap();
        let f = &l.facts_of(a, true).unwrap()[0];
        assert_eq!(f.basis, "x");
        ones += f.value;
    }
    assert!(within_5_sigma(ones, n as usize, 0.5), "{ones}");
}

#[test]
fn non_schmidt_declaration_is_rejected_atomically() {
    let mut l = ledger(Mode::Cpl);
    let (sn, cs) = (PI / 8.0).sin_cos();
    let s = l.register_prepared(vec![c(cs), c(sn)]).unwrap();
    let a = l.register_system(2).unwrap();
    let spec = InteractionSpec { coupling: cnot_y_controls_x(), ..InteractionSpec::pointer("x") };
    let before = l.state().clone();
    match l.interact(a, s, &spec, &mut rng(1)) {
        Err(LedgerError::BasisNotSchmidt { defect }) => assert!((defect - (cs - sn).abs() / 2.0).abs() < 1e-12),
        other => panic!("expected BasisNotSchmidt, got {other:?}"),
    }
    assert_eq!(l.state(), &before);
    assert!(l.events().is_empty() && l.facts().is_empty());
    // the same state is fine in z
    let spec = InteractionSpec { coupling: cnot_y_controls_x(), ..InteractionSpec::pointer("z") };
    assert!(l.interact(a, s, &spec, &mut rng(1)).is_ok());
}

#[test]
fn successful_interactions_pass_cross_term_check() {
    let mut r = rng(9);
    for _ in 0..50 {
        let mut l = ledger(Mode::Cpl);
        let theta: f64 = r.random::<f64>() * PI;
        let s = l.register_prepared(vec![c(theta.cos()), c(theta.sin())]).unwrap();
        let a = l.register_system(2).unwrap();
        let e = l.interact(a, s, &InteractionSpec::pointer("z"), &mut r).unwrap().clone();
        let (ma, ms) = (l.observer(a).unwrap().members.clone(), l.observer(s).unwrap().members.clone());
        let z = BasisSpec::computational(2);
        let w = basis_weights(l.state(), &ma, &ms, &z, &z).unwrap();
        assert!(max_cross_amplitude(&w) <= 1e-10);
        assert!(e.weights[e.sampled_index] > 0.0);
    }
}

#[test]
fn overlapping_and_unknown_observers() {
    let mut l = ledger(Mode::Cpl);
    let a = l.register_system(2).unwrap();
    let b = l.register_system(2).unwrap();
    let g = l.register_group(&[a, b]).unwrap();
    assert_eq!(l.observer(g).unwrap().dim, 4);
    let spec = InteractionSpec::pointer("z");
    assert!(matches!(l.interact(a, a, &spec, &mut rng(0)), Err(LedgerError::OverlappingObservers(..))));
    assert!(matches!(l.interact(g, a, &spec, &mut rng(0)), Err(LedgerError::OverlappingObservers(..))));
    assert!(matches!(l.interact(a, ObserverId(99), &spec, &mut rng(0)), Err(LedgerError::UnknownObserver(_))));
    assert!(matches!(l.facts_of(ObserverId(99), true), Err(LedgerError::UnknownObserver(_))));
}

#[test]
fn group_observer_measures_a_qubit() {
    let mut l = ledger(Mode::Cpl);
    let s = l.register_prepared(plus()).unwrap();
    let a = l.register_system(2).unwrap();
    let b = l.register_system(2).unwrap();
    let g = l.register_group(&[a, b]).unwrap();
    l.interact(g, s, &InteractionSpec::pointer("z"), &mut rng(4)).unwrap();
    let f = &l.facts_of(g, true).unwrap()[0];
    let rho = l.marginal(g).unwrap();
    // the group's record lives in its first two basis states
    assert!((rho.matrix[(f.value, f.value)].re - 0.5).abs() < 1e-12);
}

#[test]
fn unknown_basis_is_reported() {
    let mut l = ledger(Mode::Cpl);
    let a = l.register_system(3).unwrap();
    let b = l.register_system(3).unwrap();
    let spec = InteractionSpec::pointer("y");
    assert!(matches!(l.interact(a, b, &spec, &mut rng(0)), Err(LedgerError::UnknownBasis { dim: 3, .. })));
    l.register_basis(BasisSpec::computational(3).with_label("y"));
    assert!(l.interact(a, b, &spec, &mut rng(0)).is_ok());
}

#[test]
fn cpl_matching_readout_reveals_stored_value() {
    for seed in 0..1000 {
        let (mut l, s, a, mut r) = measured_pair(Mode::Cpl, seed);
        let b = l.register_system(2).unwrap();
        let stored = l.live_fact(a, s).unwrap().value;
        let out = l.cpl_readout(b, a, s, "z", &mut r).unwrap();
        assert!(out.matched);
        assert_eq!(out.outcome, stored);
        let fb = l.live_fact(b, s).unwrap();
        assert_eq!((fb.value, fb.via), (stored, Some(a)));
        assert!(l.live_fact(a, s).unwrap().live);
        check_single_liveness(&l);
    }
}

#[test]
fn cpl_mismatch_destroys_and_rereads_at_chance() {
    let n = 10_000;
    let mut agree = 0;
    for seed in 0..n {
        let (mut l, s, a, mut r) = measured_pair(Mode::Cpl, seed);
        let b = l.register_system(2).unwrap();
        let old = l.live_fact(a, s).unwrap().clone();
        let out = l.cpl_readout(b, a, s, "x", &mut r).unwrap();
        assert!(!out.matched);
        assert!(!l.fact(old.id).unwrap().live);
        let all = l.facts_of(a, false).unwrap();
        let live = l.facts_of(a, true).unwrap();
        assert!(all.iter().any(|f| f.id == old.id));
        assert!(live.iter().all(|f| f.id != old.id));
        let c2 = l.register_system(2).unwrap();
        let again = l.cpl_readout(c2, a, s, "z", &mut r).unwrap();
        assert!(!again.matched);
        agree += usize::from(again.outcome == old.value);
        check_single_liveness(&l);
    }
    assert!(within_5_sigma(agree, n as usize, 0.5), "{agree}");
}

#[test]
fn cpl_readout_errors() {
    let (mut l, s, a, mut r) = measured_pair(Mode::Cpl, 0);
    let b = l.register_system(2).unwrap();
    assert!(matches!(l.cpl_readout(b, s, b, "z", &mut r), Err(LedgerError::NoLiveFact { .. })));
    assert!(matches!(l.orthodox_readout(b, a, s, "z", &mut r), Err(LedgerError::WrongMode { expected: Mode::Orthodox })));
    let q = l.register_system(3).unwrap();
    let small = l.register_system(2).unwrap();
    l.interact(q, s, &InteractionSpec::pointer("z"), &mut r).unwrap();
    assert!(matches!(l.cpl_readout(small, q, s, "z", &mut r), Err(LedgerError::InvalidSpec(_))));
}

#[test]
fn orthodox_readout_is_independent_of_stored_fact() {
    let n = 10_000;
    let mut ones_given_one = 0;
    let mut given_one = 0;
    for seed in 0..n {
        let (mut l, s, a, mut r) = measured_pair(Mode::Orthodox, seed);
        let b = l.register_system(2).unwrap();
        let stored = l.live_fact(a, s).unwrap().value;
        let before = l.facts_of(a, false).unwrap().into_iter().cloned().collect::<Vec<_>>();
        let out = l.orthodox_readout(b, a, s, "z", &mut r).unwrap();
        let after = l.facts_of(a, false).unwrap().into_iter().cloned().collect::<Vec<_>>();
        assert_eq!(before, after);
        if stored == 1 {
            given_one += 1;
            ones_given_one += out.outcome;
        }
    }
    assert!(within_5_sigma(ones_given_one, given_one, 0.5), "{ones_given_one}/{given_one}");
}

#[test]
fn orthodox_rank_one_and_replay() {
    let mut l = ledger(Mode::Orthodox);
    let s = l.register_system(2).unwrap();
    let a = l.register_system(2).unwrap();
    let b = l.register_system(2).unwrap();
    let mut r = rng(5);
    l.interact(a, s, &InteractionSpec::pointer("z"), &mut r).unwrap();
    for _ in 0..20 {
        assert_eq!(l.orthodox_readout(b, a, s, "z", &mut r).unwrap().outcome, 0);
    }

    let (mut l, s, a, mut r) = measured_pair(Mode::Orthodox, 11);
    let b = l.register_system(2).unwrap();
    let first = l.orthodox_readout(b, a, s, "z", &mut r).unwrap().outcome;
    for _ in 0..20 {
        assert_eq!(l.orthodox_readout(b, a, s, "z", &mut r).unwrap().outcome, first);
    }
    let LedgerEvent::Readout(e) = l.events().last().unwrap() else { panic!() };
    assert!(e.replayed && e.analysis_only);
    assert!(matches!(l.cpl_readout(b, a, s, "z", &mut r), Err(LedgerError::WrongMode { expected: Mode::Cpl })));
}

#[test]
fn facts_of_ordering_and_filtering() {
    let mut l = ledger(Mode::Cpl);
    let a = l.register_system(2).unwrap();
    assert!(l.facts_of(a, false).unwrap().is_empty());
    let (l, s, a, _) = measured_pair(Mode::Cpl, 2);
    let fa = l.facts_of(a, true).unwrap();
    assert_eq!(fa.len(), 1);
    assert_eq!(fa[0].target, s);
    let _ = l;
}

#[test]
fn decoherence_destroys_off_pointer_facts() {
    let spec = InteractionSpec { coupling: cnot_y_controls_x(), ..InteractionSpec::pointer("x") };
    let mut l = ledger(Mode::Cpl);
    let s = l.register_prepared(plus()).unwrap();
    let a = l.register_system(2).unwrap();
    let mut r = rng(2);
    l.interact(a, s, &spec, &mut r).unwrap();
    assert!(!l.decohere(a, 0.0, &mut r).unwrap());
    assert!(l.live_fact(a, s).is_some());
    assert!(l.decohere(a, 1.0, &mut r).unwrap());
    assert!(l.live_fact(a, s).is_none());
    assert!(matches!(l.decohere(a, 1.5, &mut r), Err(LedgerError::Quantum(_))));
    // A is now diagonal in z
    let rho = l.marginal(a).unwrap();
    assert!(rho.matrix[(0, 1)].norm() < 1e-12);
}

#[test]
fn decoherence_keeps_pointer_facts() {
    let (mut l, s, a, mut r) = measured_pair(Mode::Cpl, 6);
    assert!(l.decohere(a, 1.0, &mut r).unwrap());
    assert!(l.live_fact(a, s).is_some());
}

#[test]
fn dephasing_in_interaction_blocks_off_pointer_bases() {
    let spec = InteractionSpec { coupling: cnot_y_controls_x(), ..InteractionSpec::pointer("x") }.with_lambda(1.0);
    let mut l = ledger(Mode::Cpl);
    let s = l.register_prepared(plus()).unwrap();
    let a = l.register_system(2).unwrap();
    assert!(matches!(l.interact(a, s, &spec, &mut rng(0)), Err(LedgerError::BasisNotSchmidt { .. })));
    let z = InteractionSpec::pointer("z").with_lambda(1.0);
    let e = l.interact(a, s, &z, &mut rng(0)).unwrap();
    assert!(e.environment_hit);
}

#[test]
fn retirement_keeps_facts_and_frees_space() {
    let mut l = ledger(Mode::Cpl);
    let s = l.register_prepared(plus()).unwrap();
    let mut r = rng(8);
    let mut prev = l.register_system(2).unwrap();
    l.interact(prev, s, &InteractionSpec::pointer("z"), &mut r).unwrap();
    let v = l.live_fact(prev, s).unwrap().value;
    // a 30-link chain only ever holds a few qubits
    for _ in 0..30 {
        let next = l.register_system(2).unwrap();
        let out = l.cpl_readout(next, prev, s, "z", &mut r).unwrap();
        assert_eq!(out.outcome, v);
        l.retire(prev).unwrap();
        assert!(l.state().dim() <= 16, "dim {}", l.state().dim());
        prev = next;
    }
    assert!(matches!(l.retire(ObserverId(1)), Err(LedgerError::Retired(_))));
    assert!(l.facts_of(ObserverId(1), true).unwrap().len() == 1);
    assert!((l.state().norm_sqr() - 1.0).abs() < 1e-10);
}

#[test]
fn retiring_a_bell_half_leaves_a_mixed_partner() {
    let (mut l, s, a, _) = measured_pair(Mode::Cpl, 0);
    l.retire(s).unwrap();
    let rho = l.marginal(a).unwrap();
    assert!((rho.matrix[(0, 0)].re - 0.5).abs() < 1e-12);
    assert!(rho.matrix[(0, 1)].norm() < 1e-12);
    assert_eq!(l.state().dim(), 4);
    l.retire(a).unwrap();
    assert_eq!(l.state().dim(), 1);
}

#[test]
fn event_log_is_deterministic() {
    let run = || {
        let (mut l, s, a, mut r) = measured_pair(Mode::Cpl, 77);
        let b = l.register_system(2).unwrap();
        l.cpl_readout(b, a, s, "x", &mut r).unwrap();
        l.decohere(b, 0.5, &mut r).unwrap();
        serde_json::to_string(l.events()).unwrap()
    };
    assert_eq!(run(), run());
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(256))]

    /// Arbitrary interleavings of interactions, read-outs and decoherence keep
    /// one live fact per (holder, target), a normalized state, increasing
    /// event ids and consistent destruction records.
    #[test]
    fn random_operation_sequences_keep_invariants(
        cpl in proptest::bool::ANY,
        seed in proptest::prelude::any::<u64>(),
        ops in proptest::collection::vec((0usize..4, 0usize..4, proptest::bool::ANY, 0u8..3), 1..12),
    ) {
        let mode = if cpl { Mode::Cpl } else { Mode::Orthodox };
        let mut r = rng(seed);
        let mut l = ledger(mode);
        let ids: Vec<ObserverId> = (0..4)
            .map(|i| if i == 0 { l.register_prepared(plus()).unwrap() } else { l.register_system(2).unwrap() })
            .collect();
        for (xi, yi, z, kind) in ops {
            let (x, y) = (ids[xi], ids[yi]);
            let basis = if z { "z" } else { "x" };
            match kind {
                0 => {
                    let _ = l.interact(x, y, &InteractionSpec::pointer(basis), &mut r);
                }
                1 => {
                    if let Some(t) = l.facts().iter().filter(|f| f.live && f.holder == y).map(|f| f.target).last() {
                        let _ = match mode {
                            Mode::Cpl => l.cpl_readout(x, y, t, basis, &mut r),
                            Mode::Orthodox => l.orthodox_readout(x, y, t, basis, &mut r),
                        };
                    }
                }
                _ => {
                    let _ = l.decohere(x, 0.5, &mut r);
                }
            }
            check_single_liveness(&l);
            proptest::prop_assert!((l.state().norm_sqr() - 1.0).abs() < 1e-10);
            let ev: Vec<u64> = l.events().iter().map(LedgerEvent::event_id).collect();
            proptest::prop_assert!(ev.windows(2).all(|w| w[0] < w[1]));
        }
        for f in l.facts() {
            proptest::prop_assert_eq!(f.live, f.destroyed_by.is_none());
            if let Some(d) = f.destroyed_by {
                proptest::prop_assert!(d >= f.event_id);
            }
        }
    }
}
