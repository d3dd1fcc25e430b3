//! The sentences describing the horizontal part B and the vertical part C of a small model.

use std::collections::{BTreeMap, BTreeSet};

use super::TgError;
use crate::modelcheck::{check_model, CheckMode};
use crate::normalform::{aux_closure_conjunct, ConjunctClass, ExistsConjunct, ForallConjunct, ForallExists, NormalFormSentence};
use crate::saturation::{add_loop_symbols, tuple_type_formula};
use crate::structures::{AtomicType, Structure, TypeArg, TypeAtom};
use crate::syntax::{Formula, RelId, Signature, Term};

fn aux_of(nf: &NormalFormSentence) -> Result<String, TgError> {
    nf.signature.aux().map(str::to_string).ok_or(TgError::NoAux)
}

/// Checks that every member of `beta` is a non-degenerate 2-type containing `Aux(x1,x2)`.
fn check_beta(sig: &Signature, beta: &BTreeSet<AtomicType>) -> Result<(), TgError> {
    let aux = sig.aux().and_then(|a| sig.rel_id(a)).ok_or(TgError::NoAux)?;
    let cross = TypeAtom::Rel(aux, vec![TypeArg::Var(0), TypeArg::Var(1)]);
    for b in beta {
        if !(b.is_non_degenerate() && b.is_guarded() && b.holds(&cross)) {
            return Err(TgError::NotGuarded(b.display(sig)));
        }
    }
    Ok(())
}

/// The signature of `nf` with the loop symbols, their defining conjuncts and the map from
/// each transitive symbol to its loop symbol.
fn with_loops(nf: &NormalFormSentence) -> (NormalFormSentence, BTreeMap<RelId, String>) {
    let mut base = NormalFormSentence::new(nf.signature.clone());
    let loops = add_loop_symbols(&mut base);
    (base, loops)
}

/// `forall x (x = x -> OR alpha(x))` and `exists x alpha(x)` for every member.
fn add_alpha(out: &mut NormalFormSentence, sig: &Signature, alpha: &BTreeSet<AtomicType>, loops: &BTreeMap<RelId, String>) {
    let forms: Vec<Formula> = alpha.iter().map(|t| tuple_type_formula(t, sig, &["x"], loops)).collect();
    out.foralls.push(ForallConjunct {
        xs: vec!["x".into()],
        guard: Formula::trivial_guard("x"),
        matrix: Formula::or_all(forms.iter().cloned()),
    });
    for f in forms {
        out.exists.push(ExistsConjunct { ys: vec!["x".into()], guard: Formula::trivial_guard("x"), matrix: f });
    }
}

fn add_aux_closure(out: &mut NormalFormSentence, aux: &str) {
    let rels: Vec<(String, usize)> = out.signature.relations().map(|(_, n, k)| (n.to_string(), k)).collect();
    for (name, arity) in rels.into_iter().filter(|&(_, k)| k > 0) {
        let c = aux_closure_conjunct(&name, arity, aux);
        if !out.foralls.contains(&c) {
            out.foralls.push(c);
        }
    }
}

/// The transitive-free reductions of `beta`, deduplicated, in order.
fn reductions(sig: &Signature, beta: &BTreeSet<AtomicType>) -> BTreeSet<AtomicType> {
    beta.iter().map(|b| b.transitive_free_reduction(sig)).collect()
}

/// The horizontal sentence: the ntr ∀∃-conjuncts and all ∀-conjuncts of `nf`, transitive
/// symbols collapsed to the identity, a pair for every reduced 2-type of `beta` and exactly
/// the 1-types of `alpha`. It is meant to be read without the transitivity condition.
pub fn build_phi_b(nf: &NormalFormSentence, alpha: &BTreeSet<AtomicType>, beta: &BTreeSet<AtomicType>) -> Result<NormalFormSentence, TgError> {
    let sig = &nf.signature;
    let aux = aux_of(nf)?;
    check_beta(sig, beta)?;
    if alpha.is_empty() {
        return Err(TgError::NoTypes);
    }
    let (mut out, loops) = with_loops(nf);
    out.forall_exists.extend(nf.forall_exists.iter().filter(|c| c.class != ConjunctClass::Tr).cloned());
    out.foralls.extend(nf.foralls.iter().cloned());
    for t in sig.transitive() {
        out.foralls.push(ForallConjunct {
            xs: vec!["x".into(), "y".into()],
            guard: Formula::atom(t, &["x", "y"]),
            matrix: Formula::eq_vars("x", "y"),
        });
    }
    for b in reductions(sig, beta) {
        out.exists.push(ExistsConjunct {
            ys: vec!["x".into(), "y".into()],
            guard: Formula::atom(&aux, &["x", "y"]),
            matrix: tuple_type_formula(&b, sig, &["x", "y"], &loops),
        });
    }
    add_alpha(&mut out, sig, alpha, &loops);
    add_aux_closure(&mut out, &aux);
    Ok(out)
}

/// Renames the variables of a conjunct to `x` and `y`, in order of binding.
fn to_xy(vars: &[&String], f: &Formula) -> Formula {
    let names = ["x", "y"];
    f.rename_free(&|v| vars.iter().position(|w| w.as_str() == v).map(|i| Term::var(names[i])))
}

fn xy(n: usize) -> Vec<String> {
    ["x", "y"][..n].iter().map(|s| s.to_string()).collect()
}

fn is_transitive_guard(sig: &Signature, g: &Formula) -> bool {
    matches!(g, Formula::Atom(r, _) if sig.is_transitive(r))
}

/// Argument tuples of length `arity` over `x`, `y` mentioning both.
pub fn both_variable_tuples(arity: usize) -> Vec<Vec<&'static str>> {
    let mut out = Vec::new();
    for code in 0..(1usize << arity) {
        if code == 0 || code == (1 << arity) - 1 {
            continue;
        }
        out.push((0..arity).map(|i| if code >> (arity - 1 - i) & 1 == 1 { "y" } else { "x" }).collect());
    }
    out
}

/// The vertical sentence in the two variables `x`, `y`: the tr ∀∃-conjuncts and the
/// transitively guarded ∀-conjuncts of `nf`, Aux between any two elements sharing a fact,
/// a reduced 2-type of `beta` on every Aux-connected pair of distinct elements and exactly
/// the 1-types of `alpha`.
pub fn build_phi_c(nf: &NormalFormSentence, alpha: &BTreeSet<AtomicType>, beta: &BTreeSet<AtomicType>) -> Result<NormalFormSentence, TgError> {
    let sig = &nf.signature;
    let aux = aux_of(nf)?;
    check_beta(sig, beta)?;
    if alpha.is_empty() {
        return Err(TgError::NoTypes);
    }
    let (mut out, loops) = with_loops(nf);
    for c in nf.forall_exists.iter().filter(|c| c.class == ConjunctClass::Tr) {
        let vars = [&c.xs[0], &c.ys[0]];
        out.forall_exists.push(ForallExists {
            xs: xy(1),
            guard: to_xy(&vars, &c.guard),
            ys: vec!["y".into()],
            wguard: to_xy(&vars, &c.wguard),
            matrix: to_xy(&vars, &c.matrix),
            class: ConjunctClass::Tr,
        });
    }
    for c in nf.foralls.iter().filter(|c| is_transitive_guard(sig, &c.guard)) {
        let vars: Vec<&String> = c.xs.iter().collect();
        out.foralls.push(ForallConjunct { xs: xy(vars.len()), guard: to_xy(&vars, &c.guard), matrix: to_xy(&vars, &c.matrix) });
    }
    let rels: Vec<(String, usize)> = out.signature.relations().map(|(_, n, k)| (n.to_string(), k)).collect();
    for (name, arity) in rels {
        for t in both_variable_tuples(arity) {
            out.foralls.push(ForallConjunct {
                xs: xy(2),
                guard: Formula::atom(&name, &t),
                matrix: Formula::atom(&aux, &["x", "y"]),
            });
        }
    }
    let options = reductions(sig, beta).iter().map(|b| tuple_type_formula(b, sig, &["x", "y"], &loops)).collect::<Vec<_>>();
    out.foralls.push(ForallConjunct {
        xs: xy(2),
        guard: Formula::atom(&aux, &["x", "y"]),
        matrix: Formula::implies(Formula::not(Formula::eq_vars("x", "y")), Formula::or_all(options)),
    });
    add_alpha(&mut out, sig, alpha, &loops);
    Ok(out)
}

/// Whether the two-element structure of every 2-type in `beta` satisfies the ∀-conjuncts of `nf`.
pub fn two_types_respect_foralls(nf: &NormalFormSentence, beta: &BTreeSet<AtomicType>) -> bool {
    let mut only = NormalFormSentence::new(nf.signature.clone());
    only.foralls = nf.foralls.clone();
    let sig = std::sync::Arc::new(nf.signature.clone());
    beta.iter().all(|b| {
        let mut s = Structure::new(sig.clone(), 2);
        b.impose(&mut s, &[0, 1]);
        check_model(&s, &only, CheckMode::default()).verdict
    })
}

/// Whether every conjunct of `nf` mentions at most the variables `x` and `y`.
pub fn is_two_variable(nf: &NormalFormSentence) -> bool {
    let ok = |f: &Formula| f.all_vars().iter().all(|v| v == "x" || v == "y");
    nf.forall_exists.iter().all(|c| ok(&c.guard) && ok(&c.wguard) && ok(&c.matrix))
        && nf.foralls.iter().all(|c| ok(&c.guard) && ok(&c.matrix))
        && nf.exists.iter().all(|c| ok(&c.guard) && ok(&c.matrix))
}

/// `s`, a structure over the signature of `nf`, expanded to the signature of φ_B and φ_C:
/// the loop symbol of each transitive `T` holds exactly at the elements `a` with `T(a,a)`.
pub fn expand_loops(s: &Structure, nf: &NormalFormSentence) -> Result<Structure, TgError> {
    let (base, loops) = with_loops(nf);
    let mut out = s.with_signature(std::sync::Arc::new(base.signature.clone()))?;
    for (t, p) in loops {
        let p = base.signature.rel_id(&p).expect("declared");
        for a in s.domain() {
            if s.has_fact(t, &[a, a]) {
                out.add_fact(p, &[a])?;
            }
        }
    }
    Ok(out)
}
