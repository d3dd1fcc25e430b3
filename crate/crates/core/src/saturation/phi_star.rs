//! The auxiliary sentence pinning down the realised 1-types and forcing U-connections.

use std::collections::{BTreeMap, BTreeSet};

use super::SaturationError;
use crate::normalform::{aux_closure_conjunct, ConjunctClass, ExistsConjunct, ForallConjunct, ForallExists, NormalFormSentence};
use crate::structures::{AtomicType, TypeArg, TypeAtom};
use crate::syntax::{Formula, RelId, Signature, Term};

/// The 1-type `t` as a conjunction of literals about `var`. Atoms `T(x,x)` of transitive
/// symbols listed in `loops` are replaced by the unary symbol they map to.
pub fn type_formula(t: &AtomicType, sig: &Signature, var: &str, loops: &BTreeMap<RelId, String>) -> Formula {
    assert_eq!(t.arity(), 1, "a 1-type is expected");
    tuple_type_formula(t, sig, &[var], loops)
}

/// The type `t` as a conjunction of literals, `x{i+1}` written as `vars[i]`. Atoms whose
/// arguments are all one variable and whose symbol is listed in `loops` become the unary
/// symbol it maps to; trivial equalities are dropped.
pub fn tuple_type_formula(t: &AtomicType, sig: &Signature, vars: &[&str], loops: &BTreeMap<RelId, String>) -> Formula {
    assert_eq!(t.arity(), vars.len(), "one name per variable");
    let term = |a: &TypeArg| match a {
        TypeArg::Var(i) => Term::var(vars[*i as usize]),
        TypeArg::Const(c) => Term::Const(sig.constants()[*c as usize].clone()),
    };
    let mut parts = Vec::new();
    for l in t.literals() {
        let atom = match &l.atom {
            TypeAtom::Eq(a, b) if a == b => continue,
            TypeAtom::Eq(a, b) => Formula::Eq(term(a), term(b)),
            TypeAtom::Rel(r, args) => match (loops.get(r), args.first()) {
                (Some(p), Some(&TypeArg::Var(v))) if args.iter().all(|a| *a == TypeArg::Var(v)) => {
                    Formula::atom(p, &[vars[v as usize]])
                }
                _ => Formula::Atom(sig.rel_name(*r).to_string(), args.iter().map(term).collect()),
            },
        };
        parts.push(if l.positive { atom } else { Formula::not(atom) });
    }
    Formula::and_all(parts)
}

/// Declares a fresh unary symbol for every transitive symbol `T` of `nf`, with conjuncts
/// making it hold exactly at the elements `x` with `T(x,x)`. Returns the map from `T`.
pub fn add_loop_symbols(nf: &mut NormalFormSentence) -> BTreeMap<RelId, String> {
    let base = nf.signature.clone();
    let mut loops = BTreeMap::new();
    for t in base.transitive().iter() {
        let p = nf.signature.add_fresh(&format!("_Loop{t}_"), 1);
        loops.insert(base.rel_id(t).expect("declared"), p.clone());
        nf.forall_exists.push(ForallExists {
            xs: vec!["x".into()],
            guard: Formula::atom(&p, &["x"]),
            ys: vec!["y".into()],
            wguard: Formula::atom(t, &["x", "y"]),
            matrix: Formula::eq_vars("x", "y"),
            class: ConjunctClass::Tr,
        });
        nf.foralls.push(ForallConjunct {
            xs: vec!["x".into(), "y".into()],
            guard: Formula::atom(t, &["x", "y"]),
            matrix: Formula::implies(Formula::eq_vars("x", "y"), Formula::atom(&p, &["x"])),
        });
    }
    loops
}

/// Extends `nf` by conjuncts saying that only the 1-types in `alpha` are realised, that
/// every ordered pair of them is realised by a pair connected by U both ways, and that
/// every guarded tuple is U-connected. With `tg`, loops `T(x,x)` of transitive symbols
/// inside the types are expressed through fresh unary symbols.
pub fn build_phi_star(nf: &NormalFormSentence, alpha: &BTreeSet<AtomicType>, tg: bool) -> Result<NormalFormSentence, SaturationError> {
    if alpha.is_empty() {
        return Err(SaturationError::NoTypes);
    }
    let u = nf.signature.universal().ok_or(SaturationError::NoUniversal)?.to_string();
    let base = nf.signature.clone();
    let mut out = nf.clone();
    let loops = if tg { add_loop_symbols(&mut out) } else { BTreeMap::new() };
    let typed: Vec<(Formula, Formula)> =
        alpha.iter().map(|t| (type_formula(t, &base, "x", &loops), type_formula(t, &base, "y", &loops))).collect();
    out.foralls.push(ForallConjunct {
        xs: vec!["x".into()],
        guard: Formula::trivial_guard("x"),
        matrix: Formula::or_all(typed.iter().map(|(fx, _)| fx.clone())),
    });
    for (fx, _) in &typed {
        for (_, fy) in &typed {
            out.exists.push(ExistsConjunct {
                ys: vec!["x".into(), "y".into()],
                guard: Formula::atom(&u, &["x", "y"]),
                matrix: Formula::and_all([Formula::atom(&u, &["y", "x"]), fx.clone(), fy.clone()]),
            });
        }
    }
    let rels: Vec<(String, usize)> = out.signature.relations().map(|(_, n, k)| (n.to_string(), k)).collect();
    for (name, arity) in rels.into_iter().filter(|&(_, k)| k > 0) {
        let c = aux_closure_conjunct(&name, arity, &u);
        if !out.foralls.contains(&c) {
            out.foralls.push(c);
        }
    }
    Ok(out)
}
