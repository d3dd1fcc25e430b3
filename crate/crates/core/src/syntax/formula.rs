use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// A term: variables and constants only, there are no function symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(v) | Term::Const(v) => v,
        }
    }
}

/// First-order formula over a relational signature.
///
/// Guarded quantification is not a separate node: `forall xs (g -> body)` and
/// `exists xs (g & body)` are recognised structurally, see [`Formula::guard_split`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Atom(String, Vec<Term>),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(Vec<String>, Box<Formula>),
    Exists(Vec<String>, Box<Formula>),
}

impl Formula {
    pub fn atom(rel: &str, vars: &[&str]) -> Formula {
        Formula::Atom(rel.to_string(), vars.iter().map(|v| Term::var(v)).collect())
    }

    pub fn eq_vars(a: &str, b: &str) -> Formula {
        Formula::Eq(Term::var(a), Term::var(b))
    }

    /// The trivial guard `v = v`.
    pub fn trivial_guard(v: &str) -> Formula {
        Formula::eq_vars(v, v)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(vars: Vec<String>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Forall(vars, Box::new(body))
        }
    }

    pub fn exists(vars: Vec<String>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Exists(vars, Box::new(body))
        }
    }

    /// Right-nested conjunction; `true` when empty.
    pub fn and_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut items: Vec<Formula> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else { return Formula::True };
        while let Some(f) = items.pop() {
            acc = Formula::and(f, acc);
        }
        acc
    }

    /// Right-nested disjunction; `false` when empty.
    pub fn or_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut items: Vec<Formula> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else { return Formula::False };
        while let Some(f) = items.pop() {
            acc = Formula::or(f, acc);
        }
        acc
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Atom(..) | Formula::Eq(..))
    }

    /// `x = x` for a single variable `x`.
    pub fn is_trivial_guard(&self) -> bool {
        matches!(self, Formula::Eq(Term::Var(a), Term::Var(b)) if a == b)
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(..) | Formula::Eq(..) => true,
            Formula::Not(a) => a.is_quantifier_free(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            Formula::Forall(..) | Formula::Exists(..) => false,
        }
    }

    /// Splits the body of a quantifier into its guard and the guarded part:
    /// `forall xs (g -> rest)`, `exists xs (g & rest)` and `exists xs g`.
    /// Only the shape is checked, not whether `g` covers the free variables.
    pub fn guard_split(&self) -> Option<(&Formula, Option<&Formula>)> {
        match self {
            Formula::Forall(_, body) => match body.as_ref() {
                Formula::Implies(g, rest) if g.is_atomic() => Some((g, Some(rest))),
                _ => None,
            },
            Formula::Exists(_, body) => match body.as_ref() {
                Formula::And(g, rest) if g.is_atomic() => Some((g, Some(rest))),
                g if g.is_atomic() => Some((g, None)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Variables of an atomic formula, in order of first occurrence.
    pub fn atom_vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let terms: Vec<&Term> = match self {
            Formula::Atom(_, ts) => ts.iter().collect(),
            Formula::Eq(a, b) => vec![a, b],
            _ => Vec::new(),
        };
        for t in terms {
            if let Term::Var(v) = t {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(_, ts) => {
                for t in ts {
                    if let Term::Var(v) = t {
                        if !bound.contains(v) {
                            out.insert(v.clone());
                        }
                    }
                }
            }
            Formula::Eq(a, b) => {
                for t in [a, b] {
                    if let Term::Var(v) = t {
                        if !bound.contains(v) {
                            out.insert(v.clone());
                        }
                    }
                }
            }
            Formula::Not(a) => a.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
                let before = bound.len();
                bound.extend(vs.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(before);
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// All variable names occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Atom(_, ts) => {
                for t in ts {
                    if let Term::Var(v) = t {
                        out.insert(v.clone());
                    }
                }
            }
            Formula::Eq(a, b) => {
                for t in [a, b] {
                    if let Term::Var(v) = t {
                        out.insert(v.clone());
                    }
                }
            }
            Formula::Forall(vs, _) | Formula::Exists(vs, _) => out.extend(vs.iter().cloned()),
            _ => {}
        });
        out
    }

    /// Relation symbols used, with the arity they are applied at.
    pub fn relations(&self) -> BTreeSet<(String, usize)> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom(r, ts) = f {
                out.insert((r.clone(), ts.len()));
            }
        });
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            let ts: Vec<&Term> = match f {
                Formula::Atom(_, ts) => ts.iter().collect(),
                Formula::Eq(a, b) => vec![a, b],
                _ => return,
            };
            for t in ts {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut dyn FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Not(a) | Formula::Forall(_, a) | Formula::Exists(_, a) => a.visit(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Not(a) | Formula::Forall(_, a) | Formula::Exists(_, a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Nesting depth of quantifiers.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Forall(_, a) | Formula::Exists(_, a) => 1 + a.quantifier_depth(),
            _ => self.children().iter().map(|c| c.quantifier_depth()).max().unwrap_or(0),
        }
    }

    /// Renames free occurrences of variables according to `map`.
    /// Bound variables shadow the map; no capture avoidance is attempted,
    /// callers rename into names that do not occur in the formula.
    pub fn rename_free(&self, map: &dyn Fn(&str) -> Option<Term>) -> Formula {
        self.rename_inner(map, &mut Vec::new())
    }

    fn rename_inner(&self, map: &dyn Fn(&str) -> Option<Term>, bound: &mut Vec<String>) -> Formula {
        let sub = |t: &Term, bound: &Vec<String>| match t {
            Term::Var(v) if !bound.contains(v) => map(v).unwrap_or_else(|| t.clone()),
            _ => t.clone(),
        };
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(r, ts) => Formula::Atom(r.clone(), ts.iter().map(|t| sub(t, bound)).collect()),
            Formula::Eq(a, b) => Formula::Eq(sub(a, bound), sub(b, bound)),
            Formula::Not(a) => Formula::not(a.rename_inner(map, bound)),
            Formula::And(a, b) => Formula::and(a.rename_inner(map, bound), b.rename_inner(map, bound)),
            Formula::Or(a, b) => Formula::or(a.rename_inner(map, bound), b.rename_inner(map, bound)),
            Formula::Implies(a, b) => Formula::implies(a.rename_inner(map, bound), b.rename_inner(map, bound)),
            Formula::Iff(a, b) => Formula::iff(a.rename_inner(map, bound), b.rename_inner(map, bound)),
            Formula::Forall(vs, a) | Formula::Exists(vs, a) => {
                let before = bound.len();
                bound.extend(vs.iter().cloned());
                let body = a.rename_inner(map, bound);
                bound.truncate(before);
                if matches!(self, Formula::Forall(..)) {
                    Formula::Forall(vs.clone(), Box::new(body))
                } else {
                    Formula::Exists(vs.clone(), Box::new(body))
                }
            }
        }
    }

    /// Replaces every atom of relation `rel` by the formula produced by `f`.
    pub fn map_atoms(&self, f: &dyn Fn(&str, &[Term]) -> Option<Formula>) -> Formula {
        match self {
            Formula::Atom(r, ts) => f(r, ts).unwrap_or_else(|| self.clone()),
            Formula::True | Formula::False | Formula::Eq(..) => self.clone(),
            Formula::Not(a) => Formula::not(a.map_atoms(f)),
            Formula::And(a, b) => Formula::and(a.map_atoms(f), b.map_atoms(f)),
            Formula::Or(a, b) => Formula::or(a.map_atoms(f), b.map_atoms(f)),
            Formula::Implies(a, b) => Formula::implies(a.map_atoms(f), b.map_atoms(f)),
            Formula::Iff(a, b) => Formula::iff(a.map_atoms(f), b.map_atoms(f)),
            Formula::Forall(vs, a) => Formula::Forall(vs.clone(), Box::new(a.map_atoms(f))),
            Formula::Exists(vs, a) => Formula::Exists(vs.clone(), Box::new(a.map_atoms(f))),
        }
    }

    /// Splits nested conjunctions into a flat list.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            _ => vec![self],
        }
    }
}

/// A variable name starting with `base` that is not in `used`; records it as used.
pub(crate) fn fresh_var(base: &str, used: &mut BTreeSet<String>) -> String {
    if !used.contains(base) {
        used.insert(base.to_string());
        return base.to_string();
    }
    let mut i = 1usize;
    loop {
        let cand = format!("{base}_{i}");
        if !used.contains(&cand) {
            used.insert(cand.clone());
            return cand;
        }
        i += 1;
    }
}
