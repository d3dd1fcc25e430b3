mod common;

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use triguard::finder::{find_model, find_model_formula, for_each_structure, Problem, SearchConfig};
use triguard::normalform::{enhance_tg_normal_form, to_normal_form, ConjunctClass, NormalFormSentence};
use triguard::structures::Structure;
use triguard::syntax::{parse_document, Formula, Signature};

fn doc(text: &str) -> (Signature, Formula) {
    let d = parse_document(text).unwrap();
    (d.signature, d.formula)
}

fn gf_signature() -> Signature {
    let (sig, _) = doc("rel P/1, R/2; true");
    sig
}

fn eval(s: &Structure, f: &Formula) -> bool {
    common::reference_eval(s, f, &mut HashMap::new())
}

/// Whether `s` expands to a model of `nf` over the symbols `nf` adds.
fn expands(s: &Structure, nf: &NormalFormSentence) -> bool {
    let mut p = Problem::new();
    let w = p.add_world(Arc::new(nf.signature.clone()), s.size(), vec![]);
    let base = s.signature_arc().clone();
    for (r, name, arity) in base.relations() {
        let mut facts = Vec::new();
        let n = s.size() as usize;
        for code in 0..n.pow(arity as u32) {
            let mut t = vec![0u32; arity];
            let mut c = code;
            for slot in t.iter_mut().rev() {
                *slot = (c % n) as u32;
                c /= n;
            }
            facts.push((p.fact_named(w, name, &t), s.has_fact(r, &t)));
        }
        for (l, on) in facts {
            p.add_clause(&[if on { l } else { !l }]);
        }
    }
    p.add_sentence(w, nf);
    p.solve()
}

#[test]
fn normal_form_input_is_returned_unchanged() {
    let (sig, f) = doc("rel P/1, R/2; forall x (x = x -> exists y (R(x,y) & P(y))) & forall x y (R(x,y) -> (P(x) -> P(y)))");
    let out: Vec<_> = to_normal_form(&f, &sig).unwrap().collect();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0], NormalFormSentence::from_formula(&f, &sig, false).unwrap());
    assert_eq!(out[0].to_formula(), f);
}

#[test]
fn closed_existential_is_simulated_with_fresh_guard() {
    let (sig, f) = doc("rel P/1, R/2; exists x y (R(x,y) & P(x))");
    let out: Vec<_> = to_normal_form(&f, &sig).unwrap().collect();
    assert_eq!(out.len(), 1);
    let nf = &out[0];
    assert!(nf.foralls.is_empty());
    assert_eq!(nf.forall_exists.len(), 1);
    let c = &nf.forall_exists[0];
    assert!(c.guard.is_trivial_guard());
    assert_eq!(c.ys, vec!["x".to_string(), "y".to_string()]);
    let Formula::Atom(g, args) = &c.wguard else { panic!("atomic guard expected") };
    assert!(g.starts_with('_'));
    assert_eq!(args.len(), 3);
    assert_eq!(c.matrix, Formula::and(Formula::atom("R", &["x", "y"]), Formula::atom("P", &["x"])));
}

#[test]
fn unguarded_quantifiers_get_trivial_or_universal_guards() {
    let (sig, f) = doc("rel U/2, P/1, R/2; universal U; forall x y (R(x,y) | P(x)) & forall x (P(x) | exists y R(x,y))");
    let out: Vec<_> = to_normal_form(&f, &sig).unwrap().collect();
    assert!(!out.is_empty());
    for nf in &out {
        nf.validate().unwrap();
    }
    let (sig, f) = doc("rel P/1, R/2; forall x y (R(x,y) | P(x))");
    assert!(to_normal_form(&f, &sig).is_err());
    let (sig, f) = doc("rel P/1; P(x)");
    assert!(to_normal_form(&f, &sig).is_err());
}

#[test]
fn satisfiability_matches_on_random_guarded_sentences() {
    let sig = gf_signature();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut sat, mut unsat) = (0, 0);
    for _ in 0..40 {
        let f = common::random_sentence(&mut rng, 3, &["R"], &["P"]);
        let cfg = SearchConfig::new(4);
        let direct = find_model_formula(&f, &sig, &cfg);
        let mut any = false;
        for nf in to_normal_form(&f, &sig).unwrap() {
            nf.validate().unwrap();
            assert!(nf.size() <= 4 * f.size() * f.size(), "disjunct too long for {f}");
            if let Some(m) = find_model(&nf, &cfg) {
                // the disjunct entails the input
                let reduct = m.reduct(Arc::new(sig.clone())).unwrap();
                assert!(eval(&reduct, &f), "disjunct model does not satisfy {f}");
                any = true;
            }
        }
        assert_eq!(direct.is_some(), any, "satisfiability differs for {f}");
        if any {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    assert!(sat > 0 && unsat > 0);
}

#[test]
fn every_small_model_expands_to_some_disjunct() {
    let sig = Arc::new(gf_signature());
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..12 {
        let f = common::random_sentence(&mut rng, 3, &["R"], &["P"]);
        let disjuncts: Vec<_> = to_normal_form(&f, &sig).unwrap().collect();
        for n in 1..=3 {
            for_each_structure(&sig, n, &mut |s| {
                if eval(s, &f) {
                    assert!(disjuncts.iter().any(|nf| expands(s, nf)), "no expansion for {f}");
                }
                true
            });
        }
    }
    let (rsig, _) = doc("rel R/2; true");
    let rsig = Arc::new(rsig);
    for _ in 0..4 {
        let f = common::random_sentence(&mut rng, 3, &["R"], &[]);
        let disjuncts: Vec<_> = to_normal_form(&f, &rsig).unwrap().collect();
        for_each_structure(&rsig, 4, &mut |s| {
            if eval(s, &f) {
                assert!(disjuncts.iter().any(|nf| expands(s, nf)), "no expansion for {f}");
            }
            true
        });
    }
}

#[test]
fn enhancement_splits_transitive_existentials() {
    let (sig, f) = doc("rel R/2, T/2, P/1; transitive T; forall x y (R(x,y) -> exists z (T(y,z) & P(z)))");
    let nf = NormalFormSentence::from_formula(&f, &sig, false).unwrap();
    let e = enhance_tg_normal_form(&nf);
    e.validate_tg().unwrap();
    assert_eq!(e.forall_exists.len(), 1);
    let c = &e.forall_exists[0];
    assert_eq!(c.class, ConjunctClass::Tr);
    assert_eq!(c.to_formula().to_string(), "forall y (_G1_2(y) -> exists z (T(y,z) & P(z)))");
    assert_eq!(e.foralls[0].to_formula().to_string(), "forall x y (R(x,y) -> _G1_2(y))");
}

#[test]
fn enhancement_without_transitive_symbols_only_adds_aux() {
    let (sig, f) = doc("rel R/2, P/1; forall x (P(x) -> exists y (R(x,y) & P(y)))");
    let nf = NormalFormSentence::from_formula(&f, &sig, false).unwrap();
    let e = enhance_tg_normal_form(&nf);
    e.validate_tg().unwrap();
    assert_eq!(e.forall_exists.len(), 1);
    assert_eq!(e.forall_exists[0].class, ConjunctClass::Ntr);
    assert_eq!(e.foralls.len(), 3);
    assert_eq!(e.signature.num_relations(), 3);
    let aux = e.signature.aux().unwrap();
    assert!(e.foralls.iter().all(|c| c.matrix.to_string().contains(aux)));
}

#[test]
fn enhancement_preserves_satisfiability() {
    let (sig, _) = doc("rel R/2, T/2, P/1; transitive T; true");
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let (mut sat, mut checked) = (0, 0);
    while checked < 20 {
        let f = common::random_sentence(&mut rng, 3, &["R", "T"], &["P"]);
        // transitive symbols only as guards
        if !triguard::syntax::classify_fragment(&f, &sig).is_member(triguard::syntax::Fragment::GfTg) {
            continue;
        }
        checked += 1;
        for nf in to_normal_form(&f, &sig).unwrap() {
            let e = enhance_tg_normal_form(&nf);
            e.validate_tg().unwrap_or_else(|m| panic!("{m}\n{e}"));
            let cfg = SearchConfig::new(4).transitive(true);
            let before = find_model(&nf, &cfg);
            let after = find_model(&e, &cfg);
            assert_eq!(before.is_some(), after.is_some(), "enhancement changed satisfiability of\n{nf}");
            if let Some(m) = after {
                let reduct = m.reduct(Arc::new(nf.signature.clone())).unwrap();
                assert!(triguard::modelcheck::check_model(&reduct, &nf, cfg.mode).verdict);
                sat += 1;
            }
        }
    }
    assert!(sat > 0);
}

#[test]
fn transitive_guards_in_closed_subformulas_become_one_step_conjuncts() {
    let (sig, f) = doc("rel T/2, P/1; transitive T; exists x y (T(x,y) & P(y)) & forall x y (T(x,y) -> !P(x))");
    for nf in to_normal_form(&f, &sig).unwrap() {
        let e = enhance_tg_normal_form(&nf);
        e.validate_tg().unwrap();
        for c in &e.forall_exists {
            if c.class == ConjunctClass::Tr {
                assert_eq!(c.xs.len(), 1);
            }
        }
    }
}
