//! Reducing the number of 2-types of a model whose facts have at most two distinct elements.

use std::collections::{BTreeMap, BTreeSet};

use super::TgError;
use crate::modelcheck::evaluate;
use crate::normalform::{ConjunctClass, NormalFormSentence};
use crate::structures::{atomic_type, AtomicType, Elem, Literal, Structure, TypeAtom};

/// A model with fewer realised 2-types and the bookkeeping of the reduction.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub structure: Structure,
    /// Number of classes of the equivalence on the 2-types realised before.
    pub classes: usize,
    /// The members chosen to stay, closed under inverse.
    pub distinguished: BTreeSet<AtomicType>,
    /// 2-types of ordered pairs of distinct elements before and after.
    pub before: usize,
    pub after: usize,
}

/// What two equivalent 2-types share: both 1-types, the literals of transitive symbols and,
/// for each tr ∀∃-conjunct, whether the pair and the reversed pair satisfy its
/// existential guard and matrix.
type ClassKey = (AtomicType, AtomicType, Vec<Literal>, Vec<(bool, bool)>);

fn pair_types(s: &Structure) -> BTreeSet<AtomicType> {
    let mut out = BTreeSet::new();
    for a in s.domain() {
        for b in s.domain().filter(|&b| b != a) {
            out.insert(atomic_type(s, &[a, b]).expect("in domain"));
        }
    }
    out
}

/// Replaces the 2-type of every pair of distinct elements by a distinguished member of its
/// class. The class of a type is fixed by its 1-types, its transitive literals and the
/// tr ∀∃-conjuncts of `nf` it and its inverse satisfy. In each class the least member is
/// distinguished, its inverse in the inverse class; a class closed under inverse keeps a
/// symmetric member if it has one. Transitive facts and 1-types are untouched.
pub fn reduce_two_types(c: &Structure, nf: &NormalFormSentence) -> Result<Reduction, TgError> {
    for (_, t) in c.all_facts() {
        let d: BTreeSet<Elem> = t.iter().copied().collect();
        if d.len() > 2 {
            return Err(TgError::WideFact);
        }
    }
    let sig = c.signature_arc().clone();
    let tr: Vec<_> = nf.forall_exists.iter().filter(|x| x.class == ConjunctClass::Tr).collect();
    let satisfies = |t: &AtomicType| -> Vec<bool> {
        let mut s = Structure::new(sig.clone(), 2);
        t.impose(&mut s, &[0, 1]);
        tr.iter()
            .map(|conj| {
                let body = crate::syntax::Formula::and(conj.wguard.clone(), conj.matrix.clone());
                let env = [(conj.xs[0].clone(), 0), (conj.ys[0].clone(), 1)].into_iter().collect();
                evaluate(&s, &body, &env).unwrap_or(false)
            })
            .collect()
    };
    let key = |t: &AtomicType| -> ClassKey {
        let transitive: Vec<Literal> = t
            .literals()
            .iter()
            .filter(|l| matches!(&l.atom, TypeAtom::Rel(r, _) if sig.is_transitive_id(*r)))
            .cloned()
            .collect();
        let (fwd, back) = (satisfies(t), satisfies(&t.inverse()));
        (t.restrict_to_var(0), t.restrict_to_var(1), transitive, fwd.into_iter().zip(back).collect())
    };
    let realised = pair_types(c);
    let mut classes: BTreeMap<ClassKey, Vec<AtomicType>> = BTreeMap::new();
    for t in &realised {
        classes.entry(key(t)).or_default().push(t.clone());
    }
    let keys: BTreeMap<&AtomicType, ClassKey> = realised.iter().map(|t| (t, key(t))).collect();
    let mut chosen: BTreeMap<ClassKey, AtomicType> = BTreeMap::new();
    let mut order: Vec<(&ClassKey, &Vec<AtomicType>)> = classes.iter().collect();
    order.sort_by(|a, b| a.1[0].cmp(&b.1[0]));
    for (k, members) in order {
        if chosen.contains_key(k) {
            continue;
        }
        let least = &members[0];
        let inverse_key = &keys[&least.inverse()];
        let d = if inverse_key == k {
            members.iter().find(|t| t.inverse() == **t).unwrap_or(least).clone()
        } else {
            least.clone()
        };
        chosen.insert(inverse_key.clone(), d.inverse());
        chosen.insert(k.clone(), d);
    }
    let mut out = c.clone();
    for a in c.domain() {
        for b in c.domain().filter(|&b| b > a) {
            let t = atomic_type(c, &[a, b])?;
            chosen[&keys[&t]].impose(&mut out, &[a, b]);
        }
    }
    let distinguished: BTreeSet<AtomicType> = chosen.values().flat_map(|d| [d.clone(), d.inverse()]).collect();
    let after = pair_types(&out).len();
    Ok(Reduction { structure: out, classes: classes.len(), distinguished, before: realised.len(), after })
}
