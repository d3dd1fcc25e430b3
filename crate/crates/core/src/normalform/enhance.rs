//! The enhanced normal form for transitive guards: tagged ∀∃-conjuncts, one-variable outer
//! guards on conjuncts whose existential guard is transitive, no transitive outer guards on
//! ∀∃-conjuncts, and the conjuncts connecting guarded tuples by the Aux symbol.

use std::collections::{BTreeMap, VecDeque};

use super::sentence::{aux_closure_conjunct, ConjunctClass, ForallConjunct, ForallExists, NormalFormSentence};
use crate::syntax::{Formula, Signature, Term};

/// Declares `base` if it is unused, otherwise a numbered variant of it.
fn declare(sig: &mut Signature, base: &str, arity: usize) -> String {
    let name = if sig.rel_id(base).is_none() && !sig.is_constant(base) { base.to_string() } else { sig.fresh_name(&format!("{base}_")) };
    sig.add_relation(&name, arity).expect("fresh name");
    name
}

fn fresh_var(avoid: &[&String], base: &str) -> String {
    let mut v = base.to_string();
    let mut k = 0;
    while avoid.iter().any(|a| **a == v) {
        k += 1;
        v = format!("{base}{k}");
    }
    v
}

fn transitive_args<'a>(sig: &Signature, g: &'a Formula) -> Option<(&'a str, &'a str, &'a str)> {
    match g {
        Formula::Atom(r, ts) if sig.is_transitive(r) && ts.len() == 2 => match (&ts[0], &ts[1]) {
            (Term::Var(a), Term::Var(b)) => Some((r, a, b)),
            _ => None,
        },
        _ => None,
    }
}

/// Rewrites a normal-form sentence over a signature with transitive symbols into the
/// enhanced shape. Satisfiability is preserved and models expand over the fresh symbols.
pub fn enhance_tg_normal_form(nf: &NormalFormSentence) -> NormalFormSentence {
    let mut sig = nf.signature.clone();
    let mut foralls = nf.foralls.clone();
    let mut queue: VecDeque<ForallExists> = nf.forall_exists.iter().cloned().collect();
    for e in &nf.exists {
        let x = fresh_var(&e.ys.iter().collect::<Vec<_>>(), "x");
        let c = if transitive_args(&sig, &e.guard).is_some() {
            ForallExists {
                xs: vec![x.clone()],
                guard: Formula::trivial_guard(&x),
                ys: e.ys.clone(),
                wguard: e.guard.clone(),
                matrix: e.matrix.clone(),
                class: ConjunctClass::Plain,
            }
        } else {
            let g = sig.add_fresh("_nf", 1 + e.ys.len());
            let mut args: Vec<&str> = vec![&x];
            args.extend(e.ys.iter().map(String::as_str));
            ForallExists {
                xs: vec![x.clone()],
                guard: Formula::trivial_guard(&x),
                ys: e.ys.clone(),
                wguard: Formula::atom(&g, &args),
                matrix: Formula::and(e.guard.clone(), e.matrix.clone()),
                class: ConjunctClass::Plain,
            }
        };
        queue.push_back(c);
    }

    let mut fes = Vec::new();
    let mut index = 0;
    while let Some(mut c) = queue.pop_front() {
        index += 1;
        let Some((t, a, b)) = transitive_args(&sig, &c.wguard) else {
            c.class = ConjunctClass::Ntr;
            fes.push(c);
            continue;
        };
        let (t, a, b) = (t.to_string(), a.to_string(), b.to_string());
        let one_step = c.ys.len() == 1 && a != b && (c.ys[0] == a || c.ys[0] == b);
        if one_step {
            let xj = if c.ys[0] == a { &b } else { &a };
            if c.xs.len() == 1 {
                c.class = ConjunctClass::Tr;
                fes.push(c);
                continue;
            }
            let j = c.xs.iter().position(|x| x == xj).map_or(0, |p| p + 1);
            let g = declare(&mut sig, &format!("_G{index}_{j}"), 1);
            foralls.push(ForallConjunct { xs: c.xs.clone(), guard: c.guard.clone(), matrix: Formula::atom(&g, &[xj]) });
            fes.push(ForallExists {
                xs: vec![xj.clone()],
                guard: Formula::atom(&g, &[xj]),
                ys: c.ys.clone(),
                wguard: c.wguard.clone(),
                matrix: c.matrix.clone(),
                class: ConjunctClass::Tr,
            });
            continue;
        }
        // The transitive guard does not link one universal and one existential variable:
        // existentially pick its first variable, then take one transitive step from it.
        let h = declare(&mut sig, &format!("_G{index}_0"), 1);
        let (first, step) = if a == b {
            let z = fresh_var(&[&a], "z");
            (a.clone(), ForallExists {
                xs: vec![a.clone()],
                guard: Formula::atom(&h, &[&a]),
                ys: vec![z.clone()],
                wguard: Formula::atom(&t, &[&a, &z]),
                matrix: Formula::eq_vars(&a, &z),
                class: ConjunctClass::Tr,
            })
        } else {
            (a.clone(), ForallExists {
                xs: vec![a.clone()],
                guard: Formula::atom(&h, &[&a]),
                ys: vec![b.clone()],
                wguard: c.wguard.clone(),
                matrix: c.matrix.clone(),
                class: ConjunctClass::Tr,
            })
        };
        let picked = if a == b { Formula::and(c.matrix.clone(), Formula::atom(&h, &[&a])) } else { Formula::atom(&h, &[&a]) };
        queue.push_front(ForallExists {
            xs: c.xs.clone(),
            guard: c.guard.clone(),
            ys: vec![first.clone()],
            wguard: Formula::trivial_guard(&first),
            matrix: picked,
            class: ConjunctClass::Plain,
        });
        fes.push(step);
    }

    // transitive outer guards become fresh non-transitive ones implied by them
    let mut replaced: BTreeMap<String, String> = BTreeMap::new();
    for c in &mut fes {
        let Some((t, a, b)) = transitive_args(&sig, &c.guard) else { continue };
        let (t, a, b) = (t.to_string(), a.to_string(), b.to_string());
        let g = match replaced.get(&t) {
            Some(g) => g.clone(),
            None => {
                let g = declare(&mut sig, &format!("_G{t}"), 2);
                foralls.push(ForallConjunct {
                    xs: vec!["x".into(), "y".into()],
                    guard: Formula::atom(&t, &["x", "y"]),
                    matrix: Formula::atom(&g, &["x", "y"]),
                });
                replaced.insert(t, g.clone());
                g
            }
        };
        c.guard = Formula::atom(&g, &[&a, &b]);
    }

    let aux = match sig.aux() {
        Some(a) => a.to_string(),
        None => {
            let a = declare(&mut sig, "_Aux", 2);
            sig.set_aux(&a).expect("declared");
            a
        }
    };
    let rels: Vec<(String, usize)> = sig.relations().map(|(_, n, k)| (n.to_string(), k)).collect();
    for (name, arity) in rels {
        let c = aux_closure_conjunct(&name, arity, &aux);
        if !foralls.contains(&c) {
            foralls.push(c);
        }
    }
    NormalFormSentence { signature: sig, forall_exists: fes, foralls, exists: Vec::new() }
}
