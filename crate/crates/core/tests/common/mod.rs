//! Helpers shared by the integration tests: a naive reference evaluator and random generators.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use triguard::structures::{Elem, Structure};
use triguard::syntax::{Formula, Term};

/// Textbook recursive satisfaction: quantifiers range over the whole domain, guards
/// get no special treatment.
pub fn reference_eval(s: &Structure, f: &Formula, env: &mut HashMap<String, Elem>) -> bool {
    let val = |t: &Term, env: &HashMap<String, Elem>| match t {
        Term::Var(v) => env[v],
        Term::Const(c) => s.constant(c).expect("interpreted constant"),
    };
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(r, ts) => {
            let t: Vec<Elem> = ts.iter().map(|t| val(t, env)).collect();
            s.has_fact_named(r, &t)
        }
        Formula::Eq(a, b) => val(a, env) == val(b, env),
        Formula::Not(a) => !reference_eval(s, a, env),
        Formula::And(a, b) => reference_eval(s, a, env) && reference_eval(s, b, env),
        Formula::Or(a, b) => reference_eval(s, a, env) || reference_eval(s, b, env),
        Formula::Implies(a, b) => !reference_eval(s, a, env) || reference_eval(s, b, env),
        Formula::Iff(a, b) => reference_eval(s, a, env) == reference_eval(s, b, env),
        Formula::Forall(vs, body) => quantify(s, vs, body, env, true),
        Formula::Exists(vs, body) => quantify(s, vs, body, env, false),
    }
}

fn quantify(s: &Structure, vs: &[String], body: &Formula, env: &mut HashMap<String, Elem>, all: bool) -> bool {
    let Some((v, rest)) = vs.split_first() else {
        return reference_eval(s, body, env);
    };
    let saved = env.get(v).copied();
    let mut result = all;
    for e in 0..s.size() {
        env.insert(v.clone(), e);
        if quantify(s, rest, body, env, all) != all {
            result = !all;
            break;
        }
    }
    match saved {
        Some(e) => env.insert(v.clone(), e),
        None => env.remove(v),
    };
    result
}

/// Random structure of the given size: every possible fact is present with probability `p`.
pub fn random_structure(rng: &mut impl Rng, sig: std::sync::Arc<triguard::syntax::Signature>, n: u32, p: f64) -> Structure {
    let mut s = Structure::new(sig.clone(), n);
    for (id, _, arity) in sig.relations() {
        let total = (n as usize).pow(arity as u32);
        for mut code in 0..total {
            let mut t = vec![0; arity];
            for slot in t.iter_mut().rev() {
                *slot = (code % n as usize) as Elem;
                code /= n as usize;
            }
            if rng.gen_bool(p) {
                s.add_fact(id, &t).unwrap();
            }
        }
    }
    for c in sig.constants() {
        let e = rng.gen_range(0..n);
        s.set_constant(c, e).unwrap();
    }
    s
}

/// A random guarded formula whose free variables are among `free`.
pub fn guarded<R: Rng>(rng: &mut R, free: &[String], depth: usize, binary: &[&str], unary: &[&str]) -> Formula {
    let pick = |rng: &mut R| -> String { free[rng.gen_range(0..free.len())].clone() };
    if depth == 0 || rng.gen_bool(0.25) {
        if free.is_empty() {
            return if rng.gen_bool(0.5) { Formula::True } else { Formula::False };
        }
        return match rng.gen_range(0..4) {
            0 if !unary.is_empty() => Formula::atom(unary[rng.gen_range(0..unary.len())], &[&pick(rng)]),
            1 => Formula::eq_vars(&pick(rng), &pick(rng)),
            _ => Formula::atom(binary[rng.gen_range(0..binary.len())], &[&pick(rng), &pick(rng)]),
        };
    }
    match rng.gen_range(0..6) {
        0 => Formula::not(guarded(rng, free, depth - 1, binary, unary)),
        1 => Formula::and(guarded(rng, free, depth - 1, binary, unary), guarded(rng, free, depth - 1, binary, unary)),
        2 => Formula::or(guarded(rng, free, depth - 1, binary, unary), guarded(rng, free, depth - 1, binary, unary)),
        3 => Formula::implies(guarded(rng, free, depth - 1, binary, unary), guarded(rng, free, depth - 1, binary, unary)),
        _ => {
            let names = ["x", "y", "z"];
            let fresh: Vec<&str> = names.iter().copied().filter(|n| !free.iter().any(|f| f == n)).collect();
            let y = fresh[rng.gen_range(0..fresh.len())].to_string();
            let mut scope: Vec<String> = Vec::new();
            if !free.is_empty() && rng.gen_bool(0.7) {
                scope.push(pick(rng));
            }
            scope.push(y.clone());
            let mut ys = vec![y.clone()];
            if scope.len() == 1 && fresh.len() > 1 && rng.gen_bool(0.3) {
                let z = fresh.iter().find(|n| **n != y).unwrap().to_string();
                scope.push(z.clone());
                ys.push(z);
            }
            let guard = match scope.len() {
                1 if unary.is_empty() || rng.gen_bool(0.3) => Formula::eq_vars(&scope[0], &scope[0]),
                1 => Formula::atom(unary[rng.gen_range(0..unary.len())], &[&scope[0]]),
                _ => {
                    let r = binary[rng.gen_range(0..binary.len())];
                    if rng.gen_bool(0.5) {
                        Formula::atom(r, &[&scope[0], &scope[1]])
                    } else {
                        Formula::atom(r, &[&scope[1], &scope[0]])
                    }
                }
            };
            let body = guarded(rng, &scope, depth - 1, binary, unary);
            if rng.gen_bool(0.5) {
                Formula::exists(ys, Formula::and(guard, body))
            } else {
                Formula::forall(ys, Formula::implies(guard, body))
            }
        }
    }
}

pub fn random_sentence<R: Rng>(rng: &mut R, depth: usize, binary: &[&str], unary: &[&str]) -> Formula {
    loop {
        let f = guarded(rng, &[], depth, binary, unary);
        if f.quantifier_depth() > 0 {
            return f;
        }
    }
}

/// The documents of the corpus file `tests/corpus/{name}.txt`: blocks separated by lines
/// holding only `---`, with `#` comment lines dropped.
pub fn corpus(name: &str) -> Vec<String> {
    let path = format!("{}/tests/corpus/{name}.txt", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    let body: Vec<&str> = text.lines().filter(|l| !l.trim_start().starts_with('#')).collect();
    body.join("\n").split("\n---\n").map(|b| b.trim().to_string()).filter(|b| !b.is_empty()).collect()
}
