use std::collections::BTreeSet;

use triguard::modelcheck::{check_model, CheckMode};
use triguard::normalform::{ExistsConjunct, ForallConjunct, NormalFormSentence};
use triguard::saturation::{
    apply_record, build_blocks, build_phi_star, prepare_seed, saturate_with, select_entry_elements, type_formula,
    SaturateOptions, SaturationError, SaturationState, SaturationTrace, Seed,
};
use triguard::structures::{atomic_type, indistinguishable, Elem, Structure};
use triguard::syntax::{parse_document, Formula};

fn nf(text: &str) -> NormalFormSentence {
    let d = parse_document(text).unwrap();
    NormalFormSentence::from_formula(&d.formula, &d.signature, true).expect("normal form")
}

const SUCC: &str = "rel U/2, R/2; universal U; forall x (x = x -> exists y (R(x,y) & U(x,y)))";
const TERNARY: &str = "rel U/2, R/3, P/1; universal U;
    forall x y (U(x,y) -> exists z (R(x,y,z) & P(z)))";
const TWO_TYPES: &str = "rel U/2, R/2, P/1; universal U;
    forall x (x = x -> exists y (R(x,y) & (P(x) <-> !P(y))))";
const TRANSITIVE: &str = "rel U/2, T/2, P/1; universal U; transitive T;
    forall x (x = x -> exists y (T(x,y) & P(y)))";
const NAMED: &str = "rel U/2, R/2, P/1; const c; universal U;
    (forall x (x = x -> exists y (R(x,y) & P(y))) & forall x (x = x -> !P(c)))";

fn seed(text: &str, tg: bool) -> (NormalFormSentence, Seed) {
    let phi = nf(text);
    let s = prepare_seed(&phi, 4, tg).unwrap();
    (phi, s)
}

fn mode(tg: bool) -> CheckMode {
    CheckMode { ubiquitous: false, transitive: tg }
}

#[test]
fn auxiliary_sentence_shape() {
    let phi = nf(SUCC);
    let mut s = Structure::new(std::sync::Arc::new(phi.signature.clone()), 1);
    s.add_fact_named("U", &[0, 0]).unwrap();
    s.add_fact_named("R", &[0, 0]).unwrap();
    let alpha: BTreeSet<_> = [atomic_type(&s, &[0]).unwrap()].into();
    let star = build_phi_star(&phi, &alpha, false).unwrap();
    let a = type_formula(alpha.first().unwrap(), &phi.signature, "x", &Default::default());
    let b = type_formula(alpha.first().unwrap(), &phi.signature, "y", &Default::default());
    assert_eq!(
        star.exists,
        vec![ExistsConjunct {
            ys: vec!["x".into(), "y".into()],
            guard: Formula::atom("U", &["x", "y"]),
            matrix: Formula::and_all([Formula::atom("U", &["y", "x"]), a, b]),
        }]
    );
    assert_eq!(star.forall_exists, phi.forall_exists);
    assert_eq!(build_phi_star(&phi, &BTreeSet::new(), false), Err(SaturationError::NoTypes));

    let unary = nf("rel U/2, P/1; universal U; forall x (P(x) -> P(x))");
    let star = build_phi_star(&unary, &alpha, false).unwrap();
    let expected = ForallConjunct {
        xs: vec!["x1".into()],
        guard: Formula::atom("P", &["x1"]),
        matrix: Formula::atom("U", &["x1", "x1"]),
    };
    assert!(star.foralls.contains(&expected));
}

#[test]
fn seeds_are_models_of_the_input() {
    for (text, tg) in [(SUCC, false), (TERNARY, false), (TWO_TYPES, false), (TRANSITIVE, true), (NAMED, false)] {
        let (phi, s) = seed(text, tg);
        assert!(check_model(&s.c_minus, &s.phi_star, mode(tg)).verdict);
        let reduct = s.c_minus.reduct(std::sync::Arc::new(phi.signature.clone())).unwrap();
        assert!(check_model(&reduct, &phi, mode(tg)).verdict, "{text}");
    }
}

#[test]
fn block_sizes_and_cells() {
    for text in [SUCC, TWO_TYPES] {
        let (_, s) = seed(text, false);
        let n = s.c_minus.size();
        let bl = build_blocks(&s.c_minus, &s.phi_star, mode(false)).unwrap();
        assert_eq!(bl.c.size(), 2 * n);
        assert_eq!(bl.b.size(), 10 * n);
        assert_eq!(bl.a0.size(), (10 * n).pow(3));
        assert_eq!(bl.a0.total_facts(), bl.b.total_facts() * (bl.side() as usize).pow(2));
        for (k, l) in [(0, 0), (1, 3), (bl.side() - 1, bl.side() - 1)] {
            for (r, t) in bl.b.all_facts() {
                let mapped: Vec<Elem> = t.iter().map(|&e| bl.elem(e, k, l)).collect();
                assert!(bl.a0.has_fact(r, &mapped));
            }
        }
        for e in bl.a0.domain() {
            let (j, k, l) = bl.locate(e).unwrap();
            assert_eq!(bl.elem(j, k, l), e);
        }
    }
}

#[test]
fn entry_elements_meet_their_requirements() {
    for (text, tg) in [(TWO_TYPES, false), (NAMED, false), (TRANSITIVE, true)] {
        let (_, s) = seed(text, tg);
        let bl = build_blocks(&s.c_minus, &s.phi_star, mode(tg)).unwrap();
        let u = bl.c.signature().rel_id("U").unwrap();
        let state = SaturationState::new(bl.clone(), tg).unwrap();
        for k in 0..bl.side() {
            for l in 0..bl.side() {
                let (ak, al) = (state.index_type(k), state.index_type(l));
                let (e1, e2) = select_entry_elements(&bl, ak, al).unwrap();
                assert_ne!(e1, e2);
                assert_eq!(&atomic_type(&bl.c, &[e1]).unwrap(), ak);
                assert_eq!(&atomic_type(&bl.c, &[e2]).unwrap(), al);
                assert!(bl.c.has_fact(u, &[e1, e2]) && bl.c.has_fact(u, &[e2, e1]));
                if ak == al {
                    assert!(indistinguishable(&bl.c, e1, e2));
                    assert_eq!(e2, e1 + s.c_minus.size() - bl.named);
                }
                for m in 0..5 {
                    let (a1, a2) = state.entry(k, l, m);
                    assert_eq!(atomic_type(&bl.a0, &[a1]).unwrap(), *ak);
                    assert_eq!(atomic_type(&bl.a0, &[a2]).unwrap(), *al);
                    assert_eq!(bl.locate(a1).map(|p| (p.1, p.2, p.0 / bl.k)), Some((k, l, m)));
                }
            }
        }
    }
}

/// Saturates with every check on, replays the trace and audits the result.
fn full_run(text: &str, tg: bool) {
    let (phi, s) = seed(text, tg);
    let bl = build_blocks(&s.c_minus, &s.phi_star, mode(tg)).unwrap();
    let a0 = bl.a0.clone();
    let mut replay = a0.clone();
    let mut steps = 0;
    let opts = SaturateOptions { tg, check_every_step: true };
    let state = saturate_with(&s.c_minus, &s.phi_star, opts, &mut |rec| {
        steps += 1;
        assert_eq!(rec.step, steps);
        assert!(rec.t < 5);
        let [[n1, k1, l1], [n2, k2, l2]] = rec.coords;
        for j in [k1, l1, k2, l2] {
            assert_ne!(j / bl.k, rec.t);
        }
        assert!(n1 < bl.side() && n2 < bl.side());
        assert!(rec.removed.is_empty(), "no fact is ever removed");
        if tg {
            assert!(rec.added.iter().all(|f| !replay.signature().is_transitive(&f.rel)));
        }
        apply_record(&mut replay, rec).unwrap();
    })
    .unwrap();
    let af = state.current();
    assert_eq!(af, &replay);
    assert_eq!(af.size(), a0.size());
    if s.c_minus.signature().constants().is_empty() {
        assert_eq!(af.size(), (10 * s.c_minus.size()).pow(3));
    }
    assert!(steps <= (a0.size() as usize).pow(2));
    assert_eq!(state.step_count(), steps);
    let full = CheckMode { ubiquitous: true, transitive: tg };
    assert!(check_model(af, &s.phi_star, full).verdict);
    let reduct = af.reduct(std::sync::Arc::new(phi.signature.clone())).unwrap();
    assert!(check_model(&reduct, &phi, full).verdict);
    for e in af.domain() {
        assert_eq!(atomic_type(af, &[e]).unwrap(), atomic_type(&a0, &[e]).unwrap());
    }
    // tuples guarded in A₀ keep their types
    for (_, t) in a0.all_facts() {
        let mut d: Vec<Elem> = t.to_vec();
        d.sort_unstable();
        d.dedup();
        assert_eq!(atomic_type(af, &d).unwrap(), atomic_type(&a0, &d).unwrap());
    }
    if tg {
        for t in af.signature().transitive() {
            let r = af.signature().rel_id(t).unwrap();
            assert_eq!(af.facts(r), a0.facts(r));
        }
    }
}

#[test]
fn saturates_successor_sentence() {
    full_run(SUCC, false);
}

#[test]
fn saturates_ternary_sentence() {
    full_run(TERNARY, false);
}

#[test]
fn saturates_with_transitive_symbol() {
    full_run(TRANSITIVE, true);
}

#[test]
fn saturates_with_shared_named_part() {
    full_run(NAMED, false);
}

#[test]
fn partial_run_on_larger_seed() {
    let (_, s) = seed(TWO_TYPES, false);
    assert_eq!(s.c_minus.size(), 2);
    let bl = build_blocks(&s.c_minus, &s.phi_star, mode(false)).unwrap();
    let compiled = triguard::modelcheck::CompiledSentence::new(&s.phi_star, bl.a0.signature()).unwrap();
    let mut state = SaturationState::new(bl, false).unwrap();
    let mut trace = SaturationTrace::default();
    for _ in 0..3000 {
        let (b1, b2) = state.next_unconnected().unwrap();
        trace.steps.push(state.step(b1, b2, Some(&compiled)).unwrap());
        assert!(matches!(state.step(b1, b2, None), Err(SaturationError::AlreadyConnected(..))));
    }
    let text = trace.to_jsonl();
    assert_eq!(text.lines().count(), 3000);
    let back = SaturationTrace::from_jsonl(&text).unwrap();
    assert_eq!(&back.replay(state.frozen()).unwrap(), state.current());
    assert!(check_model(state.current(), &s.phi_star, mode(false)).verdict);
}

#[test]
fn rejects_named_and_foreign_seeds() {
    let (_, s) = seed(NAMED, false);
    let bl = build_blocks(&s.c_minus, &s.phi_star, mode(false)).unwrap();
    let mut state = SaturationState::new(bl, false).unwrap();
    let far = state.current().size() - 1;
    assert_eq!(state.step(0, far, None), Err(SaturationError::Named(0)));
    let (phi, _) = seed(SUCC, false);
    let empty = Structure::new(std::sync::Arc::new(phi.signature.clone()), 1);
    let star = build_phi_star(&phi, &[atomic_type(&empty, &[0]).unwrap()].into(), false).unwrap();
    assert!(matches!(build_blocks(&empty, &star, mode(false)), Err(SaturationError::NotAModel { .. })));
}

// A pair connected directly can later fall inside the copy attached to one of its members,
// which retypes it. Indistinguishable seed elements hide this; two distinct ones expose it.
#[test]
fn directly_connected_pair_is_retyped_on_distinct_seed_elements() {
    let (_, s) = seed(
        "rel U/2, R/2, S/2; universal U;
        forall x y (R(x,y) -> S(y,x)) & forall x (x = x -> exists y (R(x,y) & !(x = y)))",
        false,
    );
    assert_eq!(s.c_minus.size(), 2);
    let bl = build_blocks(&s.c_minus, &s.phi_star, mode(false)).unwrap();
    let compiled = triguard::modelcheck::CompiledSentence::new(&s.phi_star, bl.a0.signature()).unwrap();
    let mut state = SaturationState::new(bl, false).unwrap();
    let failure = (1..=100).find_map(|_| {
        let (b1, b2) = state.next_unconnected().unwrap();
        state.step(b1, b2, Some(&compiled)).err()
    });
    match failure {
        Some(SaturationError::Invariant { step, msg }) => {
            assert_eq!(step, 17);
            assert!(msg.contains("guarded tuple [0, 5]"), "{msg}");
        }
        other => panic!("expected a retyped guarded pair, got {other:?}"),
    }
}
