use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{Elem, Structure, StructureError};
use crate::syntax::{RelId, Signature};

/// Argument of a literal in an atomic type: variable `x{i+1}` or the constant with index `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeArg {
    Var(u8),
    Const(u16),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeAtom {
    Rel(RelId, Vec<TypeArg>),
    Eq(TypeArg, TypeArg),
}

impl TypeAtom {
    pub fn args(&self) -> Vec<TypeArg> {
        match self {
            TypeAtom::Rel(_, a) => a.clone(),
            TypeAtom::Eq(a, b) => vec![*a, *b],
        }
    }

    /// Variable indices mentioned, sorted and deduplicated.
    pub fn vars(&self) -> Vec<u8> {
        let mut v: Vec<u8> = self
            .args()
            .into_iter()
            .filter_map(|a| if let TypeArg::Var(i) = a { Some(i) } else { None })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn map_vars(&self, f: &dyn Fn(u8) -> u8) -> TypeAtom {
        let m = |a: &TypeArg| match a {
            TypeArg::Var(i) => TypeArg::Var(f(*i)),
            c => *c,
        };
        match self {
            TypeAtom::Rel(r, args) => TypeAtom::Rel(*r, args.iter().map(m).collect()),
            TypeAtom::Eq(a, b) => {
                let (a, b) = (m(a), m(b));
                TypeAtom::Eq(a.min(b), a.max(b))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub atom: TypeAtom,
    pub positive: bool,
}

/// An atomic type: a canonical, sorted list of literals over `x1..x{arity}` and the constants.
/// Partial types (transitive-free reductions) use the same representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomicType {
    arity: usize,
    literals: Vec<Literal>,
}

fn all_args(arity: usize, consts: usize) -> Vec<TypeArg> {
    (0..arity as u8).map(TypeArg::Var).chain((0..consts as u16).map(TypeArg::Const)).collect()
}

/// Calls `f` on every argument tuple of length `k` over `args`.
fn for_each_tuple(args: &[TypeArg], k: usize, f: &mut dyn FnMut(&[TypeArg])) {
    let mut idx = vec![0usize; k];
    let mut cur: Vec<TypeArg> = vec![args[0]; k];
    loop {
        for (c, &i) in cur.iter_mut().zip(&idx) {
            *c = args[i];
        }
        f(&cur);
        let mut p = k;
        loop {
            if p == 0 {
                return;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < args.len() {
                break;
            }
            idx[p] = 0;
        }
    }
}

/// The atomic type realised by `tuple` in `s`, including the literals about constants.
pub fn atomic_type(s: &Structure, tuple: &[Elem]) -> Result<AtomicType, StructureError> {
    if let Some(&e) = tuple.iter().find(|&&e| e >= s.size()) {
        return Err(StructureError::OutOfDomain(e));
    }
    s.validate()?;
    let consts: Vec<Elem> = s.constants().iter().map(|c| c.unwrap()).collect();
    let value = |a: TypeArg| match a {
        TypeArg::Var(i) => tuple[i as usize],
        TypeArg::Const(c) => consts[c as usize],
    };
    let args = all_args(tuple.len(), consts.len());
    let mut literals = Vec::new();
    if !args.is_empty() {
        for (rel, _, arity) in s.signature().relations() {
            let mut buf = Vec::with_capacity(arity);
            for_each_tuple(&args, arity, &mut |t| {
                buf.clear();
                buf.extend(t.iter().map(|&a| value(a)));
                literals.push(Literal { atom: TypeAtom::Rel(rel, t.to_vec()), positive: s.has_fact(rel, &buf) });
            });
        }
    }
    for (i, &a) in args.iter().enumerate() {
        let from = if matches!(a, TypeArg::Var(_)) { i } else { i + 1 };
        for &b in &args[from..] {
            literals.push(Literal { atom: TypeAtom::Eq(a, b), positive: value(a) == value(b) });
        }
    }
    literals.sort();
    Ok(AtomicType { arity: tuple.len(), literals })
}

impl AtomicType {
    pub fn from_literals(arity: usize, mut literals: Vec<Literal>) -> AtomicType {
        literals.sort();
        literals.dedup();
        AtomicType { arity, literals }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    /// Polarity of `atom` in this type, if it is mentioned.
    pub fn polarity(&self, atom: &TypeAtom) -> Option<bool> {
        self.literals.binary_search_by(|l| l.atom.cmp(atom)).ok().map(|i| self.literals[i].positive)
    }

    pub fn holds(&self, atom: &TypeAtom) -> bool {
        self.polarity(atom) == Some(true)
    }

    /// Some positive literal mentions every variable.
    pub fn is_guarded(&self) -> bool {
        self.arity <= 1
            || self.literals.iter().any(|l| l.positive && l.atom.vars().len() == self.arity)
    }

    /// A 2-type containing `x1 != x2`.
    pub fn is_non_degenerate(&self) -> bool {
        self.arity == 2 && self.polarity(&TypeAtom::Eq(TypeArg::Var(0), TypeArg::Var(1))) == Some(false)
    }

    /// The literals mentioning only `x{i+1}` and constants, with `x{i+1}` renamed to `x1`.
    pub fn restrict_to_var(&self, i: usize) -> AtomicType {
        let lits = self
            .literals
            .iter()
            .filter(|l| l.atom.vars().iter().all(|&v| v as usize == i))
            .map(|l| Literal { atom: l.atom.map_vars(&|_| 0), positive: l.positive })
            .collect();
        AtomicType::from_literals(1, lits)
    }

    /// The same type with the variables listed in `perm` order: `x{k+1}` becomes `x{perm[k]+1}`.
    pub fn permute(&self, perm: &[u8]) -> AtomicType {
        let lits = self
            .literals
            .iter()
            .map(|l| Literal { atom: l.atom.map_vars(&|v| perm[v as usize]), positive: l.positive })
            .collect();
        AtomicType::from_literals(self.arity, lits)
    }

    /// For a 2-type, the type of the reversed pair.
    pub fn inverse(&self) -> AtomicType {
        self.permute(&[1, 0])
    }

    /// Drops the literals `T(x1,x2)` and `T(x2,x1)` (either polarity) for transitive `T`.
    pub fn transitive_free_reduction(&self, sig: &Signature) -> AtomicType {
        let lits = self
            .literals
            .iter()
            .filter(|l| match &l.atom {
                TypeAtom::Rel(r, args) => {
                    !(sig.is_transitive_id(*r)
                        && matches!((args[0], args[1]), (TypeArg::Var(a), TypeArg::Var(b)) if a != b))
                }
                TypeAtom::Eq(..) => true,
            })
            .cloned()
            .collect();
        AtomicType { arity: self.arity, literals: lits }
    }

    /// Whether every literal of `self` occurs in `other`.
    pub fn is_subset_of(&self, other: &AtomicType) -> bool {
        self.arity == other.arity && self.literals.iter().all(|l| other.polarity(&l.atom) == Some(l.positive))
    }

    /// Sets the relational facts among `tuple` so that it satisfies this type's relational literals.
    /// Equalities and literals over constants only are not touched.
    pub fn impose(&self, s: &mut Structure, tuple: &[Elem]) {
        let consts: Vec<Option<Elem>> = s.constants().to_vec();
        for l in &self.literals {
            if let TypeAtom::Rel(r, args) = &l.atom {
                if l.atom.vars().is_empty() {
                    continue;
                }
                let t: Option<Vec<Elem>> = args
                    .iter()
                    .map(|a| match a {
                        TypeArg::Var(i) => Some(tuple[*i as usize]),
                        TypeArg::Const(c) => consts[*c as usize],
                    })
                    .collect();
                let Some(t) = t else { continue };
                if l.positive {
                    s.insert(*r, &t);
                } else {
                    s.remove_fact(*r, &t);
                }
            }
        }
    }

    pub fn display(&self, sig: &Signature) -> String {
        let arg = |a: &TypeArg| match a {
            TypeArg::Var(i) => format!("x{}", i + 1),
            TypeArg::Const(c) => sig.constants()[*c as usize].clone(),
        };
        let mut out = String::from("{");
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            if !l.positive {
                out.push('!');
            }
            match &l.atom {
                TypeAtom::Rel(r, args) => {
                    let a: Vec<String> = args.iter().map(arg).collect();
                    let _ = write!(out, "{}({})", sig.rel_name(*r), a.join(","));
                }
                TypeAtom::Eq(a, b) => {
                    let _ = write!(out, "({} = {})", arg(a), arg(b));
                }
            }
        }
        out.push('}');
        out
    }
}
