mod common;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triguard::modelcheck::{check_model, evaluate, find_witness, CheckMode};
use triguard::normalform::{ConjunctClass, ForallExists, NormalFormSentence};
use triguard::structures::Structure;
use triguard::syntax::{Formula, Signature, Term};

const VARS: [&str; 3] = ["x", "y", "z"];

fn random_term(rng: &mut impl Rng) -> Term {
    if rng.gen_bool(0.1) {
        Term::Const("c".into())
    } else {
        Term::var(VARS[rng.gen_range(0..3)])
    }
}

fn random_atom(rng: &mut impl Rng) -> Formula {
    match rng.gen_range(0..4) {
        0 => Formula::Atom("P".into(), vec![random_term(rng)]),
        1 => Formula::Atom("R".into(), vec![random_term(rng), random_term(rng)]),
        2 => Formula::Atom("S".into(), (0..3).map(|_| random_term(rng)).collect()),
        _ => Formula::Eq(random_term(rng), random_term(rng)),
    }
}

fn random_vars(rng: &mut impl Rng) -> Vec<String> {
    let k = rng.gen_range(1..=2);
    let mut vs: Vec<String> = Vec::new();
    while vs.len() < k {
        let v = VARS[rng.gen_range(0..3)].to_string();
        if !vs.contains(&v) {
            vs.push(v);
        }
    }
    vs
}

fn random_formula(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => random_atom(rng),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_formula(rng, depth - 1);
    match rng.gen_range(0..9) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::implies(sub(rng), sub(rng)),
        4 => Formula::iff(sub(rng), sub(rng)),
        5 => Formula::Forall(random_vars(rng), Box::new(sub(rng))),
        6 => Formula::Exists(random_vars(rng), Box::new(sub(rng))),
        7 => Formula::Forall(random_vars(rng), Box::new(Formula::implies(random_atom(rng), sub(rng)))),
        _ => Formula::Exists(random_vars(rng), Box::new(Formula::and(random_atom(rng), sub(rng)))),
    }
}

fn sig() -> Arc<Signature> {
    Arc::new(Signature::parse_header("rel P/1; rel R/2; rel S/3; const c;").unwrap())
}

#[test]
fn agrees_with_reference_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sig = sig();
    for _ in 0..500 {
        let n = rng.gen_range(1..=3);
        let s = common::random_structure(&mut rng, sig.clone(), n, 0.4);
        let f = random_formula(&mut rng, 3);
        let free = f.free_vars();
        let assignment: BTreeMap<String, u32> = free.iter().map(|v| (v.clone(), rng.gen_range(0..n))).collect();
        let mut env: HashMap<String, u32> = assignment.clone().into_iter().collect();
        let expected = common::reference_eval(&s, &f, &mut env);
        assert_eq!(evaluate(&s, &f, &assignment).unwrap(), expected, "{f} on {:?}", s.all_facts());
    }
}

/// Every formula of depth at most two over one binary symbol and variables x, y.
fn micro_formulas() -> Vec<Formula> {
    let vs = ["x", "y"];
    let mut level: Vec<Formula> = vec![Formula::True, Formula::False];
    for a in vs {
        for b in vs {
            level.push(Formula::atom("R", &[a, b]));
        }
    }
    level.push(Formula::eq_vars("x", "y"));
    let mut all = level.clone();
    for _ in 0..2 {
        let prev = all.clone();
        let mut next = Vec::new();
        for f in &prev {
            next.push(Formula::not(f.clone()));
            for v in vs {
                next.push(Formula::forall(vec![v.to_string()], f.clone()));
                next.push(Formula::exists(vec![v.to_string()], f.clone()));
            }
            for g in &prev {
                next.push(Formula::and(f.clone(), g.clone()));
                next.push(Formula::or(f.clone(), g.clone()));
            }
        }
        all.extend(next);
        all.sort();
        all.dedup();
        if all.len() > 60_000 {
            break;
        }
    }
    all
}

#[test]
fn agrees_with_reference_exhaustively_on_micro_grammar() {
    let sig = Arc::new(Signature::parse_header("rel R/2;").unwrap());
    let mut structures = Vec::new();
    for n in 1..=2u32 {
        let cells = (n * n) as usize;
        for mask in 0..(1u32 << cells) {
            let mut s = Structure::new(sig.clone(), n);
            for i in 0..cells {
                if mask & (1 << i) != 0 {
                    s.add_fact_named("R", &[i as u32 / n, i as u32 % n]).unwrap();
                }
            }
            structures.push(s);
        }
    }
    let formulas = micro_formulas();
    assert!(formulas.len() > 1000);
    for f in &formulas {
        for s in &structures {
            for a in 0..s.size() {
                for b in 0..s.size() {
                    let assignment = BTreeMap::from([("x".to_string(), a), ("y".to_string(), b)]);
                    let mut env: HashMap<String, u32> = assignment.clone().into_iter().collect();
                    assert_eq!(evaluate(s, f, &assignment).unwrap(), common::reference_eval(s, f, &mut env), "{f}");
                }
            }
        }
    }
}

#[test]
fn witnesses_verify_and_exist_when_check_passes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sig = Arc::new(Signature::parse_header("rel P/1; rel R/2; rel S/3;").unwrap());
    let conjunct = ForallExists {
        xs: vec!["x".into()],
        guard: Formula::atom("P", &["x"]),
        ys: vec!["y".into(), "z".into()],
        wguard: Formula::atom("S", &["x", "y", "z"]),
        matrix: Formula::or(Formula::atom("R", &["y", "z"]), Formula::not(Formula::atom("P", &["z"]))),
        class: ConjunctClass::Plain,
    };
    let mut nf = NormalFormSentence::new((*sig).clone());
    nf.forall_exists.push(conjunct.clone());
    nf.validate().unwrap();
    let body = Formula::exists(
        conjunct.ys.clone(),
        Formula::and(conjunct.wguard.clone(), conjunct.matrix.clone()),
    );
    let mut passed = 0;
    for _ in 0..300 {
        let n = rng.gen_range(1..=3);
        let s = common::random_structure(&mut rng, sig.clone(), n, 0.5);
        let verdict = check_model(&s, &nf, CheckMode::default()).verdict;
        passed += verdict as usize;
        for a in 0..n {
            if !s.has_fact_named("P", &[a]) {
                assert!(find_witness(&s, &conjunct, &[a]).is_err());
                continue;
            }
            let w = find_witness(&s, &conjunct, &[a]).unwrap();
            let env = BTreeMap::from([("x".to_string(), a)]);
            assert_eq!(w.is_some(), evaluate(&s, &body, &env).unwrap());
            if let Some(w) = w {
                let env = BTreeMap::from([("x".to_string(), a), ("y".to_string(), w[0]), ("z".to_string(), w[1])]);
                let inner = Formula::and(conjunct.wguard.clone(), conjunct.matrix.clone());
                assert!(evaluate(&s, &inner, &env).unwrap());
            } else {
                assert!(!verdict);
            }
        }
        assert_eq!(verdict, evaluate(&s, &nf.to_formula(), &BTreeMap::new()).unwrap());
    }
    assert!(passed > 0);
}
