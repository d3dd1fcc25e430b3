//! Evaluation of formulas and normal-form sentences on finite structures.

mod compile;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalform::{ForallExists, NormalFormSentence};
use crate::structures::{Elem, Structure};
use crate::syntax::{Formula, RelId, Signature};
use compile::{compile_open, eval, for_each_guard_match, Compiler, Expr, GArg, Guard};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("free variable `{0}` is not assigned")]
    Unassigned(String),
    #[error("symbol `{0}` is not in the structure's signature")]
    Unknown(String),
    #[error("element {0} is outside the domain")]
    OutOfDomain(Elem),
    #[error("constant `{0}` is not interpreted")]
    Uninterpreted(String),
    #[error("the guard does not hold for the given tuple")]
    GuardFalse,
}

/// Standard first-order satisfaction of `f` in `s` under `assignment`.
pub fn evaluate(s: &Structure, f: &Formula, assignment: &BTreeMap<String, Elem>) -> Result<bool, CheckError> {
    s.validate().map_err(|e| CheckError::Uninterpreted(e.to_string()))?;
    let (names, values) = compile::assignment_order(assignment);
    if let Some(&e) = values.iter().find(|&&e| e >= s.size()) {
        return Err(CheckError::OutOfDomain(e));
    }
    let (expr, nslots) = compile_open(f, s.signature(), &names)?;
    let mut env = vec![0; nslots.max(1)];
    env[..values.len()].copy_from_slice(&values);
    Ok(eval(&expr, s, &mut env))
}

/// Semantic side conditions checked besides the conjuncts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckMode {
    /// The universal symbol must hold of every pair.
    pub ubiquitous: bool,
    /// Every transitive symbol must be transitively closed.
    pub transitive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    MissingWitness,
    ForallViolation,
    NonTransitive,
    MissingUEdge,
    MissingAux,
}

/// A failed requirement. `conjunct` indexes ∀∃-conjuncts, then ∀-conjuncts, then
/// existential conjuncts; it is absent for the semantic side conditions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CheckViolation {
    pub conjunct: Option<usize>,
    pub tuple: Vec<Elem>,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub verdict: bool,
    /// Sorted; at most [`VIOLATION_LIMIT`] of them per conjunct or side condition.
    pub violations: Vec<CheckViolation>,
    /// Violations found beyond the recorded ones.
    pub omitted: usize,
}

/// Recorded violations per conjunct or side condition.
pub const VIOLATION_LIMIT: usize = 20;

struct CompiledForallExists {
    guard: Guard,
    wguard: Guard,
    matrix: Expr,
    nx: usize,
    ny: usize,
}

struct CompiledForall {
    guard: Guard,
    matrix: Expr,
    nx: usize,
    aux: bool,
}

struct CompiledExists {
    guard: Guard,
    matrix: Expr,
    ny: usize,
}

/// A normal-form sentence compiled for repeated checking against structures over its signature.
pub struct CompiledSentence {
    fe: Vec<CompiledForallExists>,
    fa: Vec<CompiledForall>,
    ex: Vec<CompiledExists>,
}

fn compile_fe(c: &ForallExists, sig: &Signature) -> Result<CompiledForallExists, CheckError> {
    let mut comp = Compiler::new(sig);
    let xs = comp.bind(&c.xs);
    let guard = comp.guard(&c.guard, &xs)?;
    let ys = comp.bind(&c.ys);
    let wguard = comp.guard(&c.wguard, &ys)?;
    let matrix = comp.expr(&c.matrix)?;
    Ok(CompiledForallExists { guard, wguard, matrix, nx: xs.len(), ny: ys.len() })
}

impl CompiledSentence {
    pub fn new(nf: &NormalFormSentence, sig: &Signature) -> Result<CompiledSentence, CheckError> {
        let fe = nf.forall_exists.iter().map(|c| compile_fe(c, sig)).collect::<Result<_, _>>()?;
        let aux = sig.aux();
        let fa = nf
            .foralls
            .iter()
            .map(|c| {
                let mut comp = Compiler::new(sig);
                let xs = comp.bind(&c.xs);
                let guard = comp.guard(&c.guard, &xs)?;
                let matrix = comp.expr(&c.matrix)?;
                let rels = c.matrix.relations();
                let aux = aux.is_some_and(|a| !rels.is_empty() && rels.iter().all(|(r, _)| r == a));
                Ok(CompiledForall { guard, matrix, nx: xs.len(), aux })
            })
            .collect::<Result<_, CheckError>>()?;
        let ex = nf
            .exists
            .iter()
            .map(|c| {
                let mut comp = Compiler::new(sig);
                let ys = comp.bind(&c.ys);
                let guard = comp.guard(&c.guard, &ys)?;
                let matrix = comp.expr(&c.matrix)?;
                Ok(CompiledExists { guard, matrix, ny: ys.len() })
            })
            .collect::<Result<_, CheckError>>()?;
        Ok(CompiledSentence { fe, fa, ex })
    }

    /// Checks every conjunct, and the side conditions selected by `mode`.
    pub fn check(&self, s: &Structure, mode: CheckMode) -> CheckReport {
        let mut rep = Recorder::default();
        for (i, c) in self.fe.iter().enumerate() {
            rep.start();
            let mut env = vec![0; c.nx + c.ny + 1];
            for_each_guard_match(s, &c.guard, &mut env, &mut |env| {
                if !has_witness(s, c, env) {
                    rep.push(Some(i), env[..c.nx].to_vec(), ViolationKind::MissingWitness);
                }
                true
            });
        }
        let base = self.fe.len();
        for (j, c) in self.fa.iter().enumerate() {
            rep.start();
            let kind = if c.aux { ViolationKind::MissingAux } else { ViolationKind::ForallViolation };
            let mut env = vec![0; c.nx + 1];
            for_each_guard_match(s, &c.guard, &mut env, &mut |env| {
                if !eval(&c.matrix, s, env) {
                    rep.push(Some(base + j), env[..c.nx].to_vec(), kind);
                }
                true
            });
        }
        let base = base + self.fa.len();
        for (k, c) in self.ex.iter().enumerate() {
            rep.start();
            let mut env = vec![0; c.ny + 1];
            let found = !for_each_guard_match(s, &c.guard, &mut env, &mut |env| !eval(&c.matrix, s, env));
            if !found {
                rep.push(Some(base + k), Vec::new(), ViolationKind::MissingWitness);
            }
        }
        let sig = s.signature();
        if mode.ubiquitous {
            rep.start();
            match sig.universal().and_then(|u| sig.rel_id(u)) {
                Some(u) => {
                    let n = s.size() as usize;
                    if s.fact_count(u) != n * n {
                        for a in s.domain() {
                            for b in s.domain() {
                                if !s.has_fact(u, &[a, b]) {
                                    rep.push(None, vec![a, b], ViolationKind::MissingUEdge);
                                }
                            }
                        }
                    }
                }
                None => {
                    for a in s.domain() {
                        for b in s.domain() {
                            rep.push(None, vec![a, b], ViolationKind::MissingUEdge);
                        }
                    }
                }
            }
        }
        if mode.transitive {
            for t in sig.transitive() {
                rep.start();
                let r = sig.rel_id(t).expect("declared");
                for_each_transitivity_violation(s, r, &mut |v| rep.push(None, v.to_vec(), ViolationKind::NonTransitive));
            }
        }
        rep.finish()
    }

    /// Checks the conjuncts whose guard is a relational atom matched by the fact `rel(tuple)`.
    pub fn check_fact(&self, s: &Structure, rel: RelId, tuple: &[Elem]) -> Vec<CheckViolation> {
        let mut out = Vec::new();
        for (i, c) in self.fe.iter().enumerate() {
            let mut env = vec![0; c.nx + c.ny + 1];
            if bind_fact(&c.guard, rel, tuple, s, &mut env) && !has_witness(s, c, &mut env) {
                out.push(CheckViolation {
                    conjunct: Some(i),
                    tuple: env[..c.nx].to_vec(),
                    kind: ViolationKind::MissingWitness,
                });
            }
        }
        for (j, c) in self.fa.iter().enumerate() {
            let mut env = vec![0; c.nx + 1];
            if bind_fact(&c.guard, rel, tuple, s, &mut env) && !eval(&c.matrix, s, &mut env) {
                let kind = if c.aux { ViolationKind::MissingAux } else { ViolationKind::ForallViolation };
                out.push(CheckViolation { conjunct: Some(self.fe.len() + j), tuple: env[..c.nx].to_vec(), kind });
            }
        }
        out
    }

    /// Checks the conjuncts guarded by `x = x` at the element `e`.
    pub fn check_element(&self, s: &Structure, e: Elem) -> Vec<CheckViolation> {
        let mut out = Vec::new();
        let is_loop = |g: &Guard| matches!(g, Guard::Eq(GArg::Bind(p), GArg::Bind(q)) if p == q);
        for (i, c) in self.fe.iter().enumerate() {
            if let Guard::Eq(GArg::Bind(p), _) = c.guard {
                if is_loop(&c.guard) {
                    let mut env = vec![0; c.nx + c.ny + 1];
                    env[p as usize] = e;
                    if !has_witness(s, c, &mut env) {
                        out.push(CheckViolation { conjunct: Some(i), tuple: vec![e], kind: ViolationKind::MissingWitness });
                    }
                }
            }
        }
        for (j, c) in self.fa.iter().enumerate() {
            if let Guard::Eq(GArg::Bind(p), _) = c.guard {
                if is_loop(&c.guard) {
                    let mut env = vec![0; c.nx + 1];
                    env[p as usize] = e;
                    if !eval(&c.matrix, s, &mut env) {
                        out.push(CheckViolation {
                            conjunct: Some(self.fe.len() + j),
                            tuple: vec![e],
                            kind: ViolationKind::ForallViolation,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Binds the guard's variables from a fact; false if the fact does not match the guard.
fn bind_fact(g: &Guard, rel: RelId, tuple: &[Elem], s: &Structure, env: &mut [Elem]) -> bool {
    let Guard::Rel(r, args) = g else { return false };
    if *r != rel {
        return false;
    }
    let mut set = vec![false; env.len()];
    for (a, &e) in args.iter().zip(tuple) {
        match a {
            GArg::Bind(slot) => {
                let slot = *slot as usize;
                if set[slot] && env[slot] != e {
                    return false;
                }
                set[slot] = true;
                env[slot] = e;
            }
            GArg::Known(k) => {
                if compile::value(*k, s, env) != e {
                    return false;
                }
            }
        }
    }
    true
}

fn has_witness(s: &Structure, c: &CompiledForallExists, env: &mut [Elem]) -> bool {
    !for_each_guard_match(s, &c.wguard, env, &mut |env| !eval(&c.matrix, s, env))
}

fn for_each_transitivity_violation(s: &Structure, r: RelId, f: &mut dyn FnMut([Elem; 3])) {
    for t in s.facts(r) {
        let (a, b) = (t[0], t[1]);
        s.for_each_match(r, &[Some(b), None], &mut |u| {
            if !s.has_fact(r, &[a, u[1]]) {
                f([a, b, u[1]]);
            }
            true
        });
    }
}

#[derive(Default)]
struct Recorder {
    violations: Vec<CheckViolation>,
    omitted: usize,
    current: usize,
}

impl Recorder {
    fn start(&mut self) {
        self.current = 0;
    }

    fn push(&mut self, conjunct: Option<usize>, tuple: Vec<Elem>, kind: ViolationKind) {
        if self.current < VIOLATION_LIMIT {
            self.violations.push(CheckViolation { conjunct, tuple, kind });
        } else {
            self.omitted += 1;
        }
        self.current += 1;
    }

    fn finish(mut self) -> CheckReport {
        self.violations.sort();
        CheckReport { verdict: self.violations.is_empty() && self.omitted == 0, violations: self.violations, omitted: self.omitted }
    }
}

/// Checks `s` against every conjunct of `nf` and the side conditions selected by `mode`.
pub fn check_model(s: &Structure, nf: &NormalFormSentence, mode: CheckMode) -> CheckReport {
    match CompiledSentence::new(nf, s.signature()) {
        Ok(c) => c.check(s, mode),
        Err(_) => CheckReport {
            verdict: false,
            violations: vec![CheckViolation { conjunct: None, tuple: Vec::new(), kind: ViolationKind::ForallViolation }],
            omitted: 0,
        },
    }
}

/// The lexicographically least witness for `tuple` and the conjunct, if any.
pub fn find_witness(s: &Structure, c: &ForallExists, tuple: &[Elem]) -> Result<Option<Vec<Elem>>, CheckError> {
    if tuple.len() != c.xs.len() {
        return Err(CheckError::Unassigned(c.xs.get(tuple.len()).cloned().unwrap_or_default()));
    }
    if let Some(&e) = tuple.iter().find(|&&e| e >= s.size()) {
        return Err(CheckError::OutOfDomain(e));
    }
    let cc = compile_fe(c, s.signature())?;
    let mut env = vec![0; cc.nx + cc.ny + 1];
    env[..cc.nx].copy_from_slice(tuple);
    let mut guard_holds = false;
    let mut probe = env.clone();
    for_each_guard_match(s, &cc.guard, &mut probe, &mut |p| {
        if p[..cc.nx] == *tuple {
            guard_holds = true;
            return false;
        }
        true
    });
    if !guard_holds {
        return Err(CheckError::GuardFalse);
    }
    let mut best: Option<Vec<Elem>> = None;
    for_each_guard_match(s, &cc.wguard, &mut env, &mut |env| {
        if eval(&cc.matrix, s, env) {
            let w = env[cc.nx..cc.nx + cc.ny].to_vec();
            if best.as_ref().is_none_or(|b| w < *b) {
                best = Some(w);
            }
        }
        true
    });
    Ok(best)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::syntax::parse_formula;

    fn structure(header: &str, n: u32, facts: &[(&str, &[Elem])]) -> Structure {
        let mut s = Structure::new(Arc::new(Signature::parse_header(header).unwrap()), n);
        for (r, t) in facts {
            s.add_fact_named(r, t).unwrap();
        }
        s
    }

    fn nf(s: &Structure, text: &str) -> NormalFormSentence {
        let f = parse_formula(text, s.signature()).unwrap();
        NormalFormSentence::from_formula(&f, s.signature(), true).unwrap()
    }

    #[test]
    fn evaluates_atoms_and_quantifiers() {
        let s = structure("rel P/1;", 1, &[("P", &[0])]);
        let f = parse_formula("P(x)", s.signature()).unwrap();
        let env = BTreeMap::from([("x".to_string(), 0)]);
        assert!(evaluate(&s, &f, &env).unwrap());
        assert!(evaluate(&s, &f, &BTreeMap::new()).is_err());
        let mut u = structure("universal U;", 2, &[("U", &[0, 0]), ("U", &[0, 1]), ("U", &[1, 0]), ("U", &[1, 1])]);
        let all = parse_formula("forall x y U(x,y)", u.signature()).unwrap();
        assert!(evaluate(&u, &all, &BTreeMap::new()).unwrap());
        u.remove_fact(0, &[1, 0]);
        assert!(!evaluate(&u, &all, &BTreeMap::new()).unwrap());
    }

    #[test]
    fn guarded_quantifiers_with_repeated_variables() {
        let s = structure("rel R/2; rel P/1;", 2, &[("R", &[0, 1]), ("R", &[1, 1]), ("P", &[1])]);
        let f = parse_formula("forall x (R(x,x) -> P(x))", s.signature()).unwrap();
        assert!(evaluate(&s, &f, &BTreeMap::new()).unwrap());
        let g = parse_formula("exists x (R(x,x) & !P(x))", s.signature()).unwrap();
        assert!(!evaluate(&s, &g, &BTreeMap::new()).unwrap());
        let h = parse_formula("exists x y (x = y & R(x,y) & P(y))", s.signature()).unwrap();
        assert!(evaluate(&s, &h, &BTreeMap::new()).unwrap());
    }

    #[test]
    fn empty_sentence_holds() {
        let s = structure("rel P/1;", 2, &[]);
        let empty = NormalFormSentence::new(s.signature().clone());
        assert!(check_model(&s, &empty, CheckMode::default()).verdict);
    }

    #[test]
    fn transitivity_violation_reported() {
        let s = structure("transitive T;", 3, &[("T", &[0, 1]), ("T", &[1, 2])]);
        let empty = NormalFormSentence::new(s.signature().clone());
        let r = check_model(&s, &empty, CheckMode { ubiquitous: false, transitive: true });
        assert!(!r.verdict);
        assert_eq!(r.violations, vec![CheckViolation { conjunct: None, tuple: vec![0, 1, 2], kind: ViolationKind::NonTransitive }]);
    }

    #[test]
    fn ubiquity_and_witnesses() {
        let s = structure("universal U; rel P/1; rel R/2;", 2, &[("U", &[0, 0]), ("P", &[0]), ("R", &[0, 0])]);
        let n = nf(&s, "forall x (P(x) -> exists y (R(x,y) & true))");
        let r = check_model(&s, &n, CheckMode { ubiquitous: true, transitive: false });
        assert_eq!(r.violations.len(), 3);
        assert!(r.violations.iter().all(|v| v.kind == ViolationKind::MissingUEdge));
        assert_eq!(find_witness(&s, &n.forall_exists[0], &[0]).unwrap(), Some(vec![0]));
        assert_eq!(find_witness(&s, &n.forall_exists[0], &[1]), Err(CheckError::GuardFalse));
        let t = structure("universal U; rel P/1; rel R/2;", 1, &[("P", &[0])]);
        assert_eq!(find_witness(&t, &n.forall_exists[0], &[0]).unwrap(), None);
        let r = check_model(&t, &n, CheckMode::default());
        assert_eq!(r.violations[0].kind, ViolationKind::MissingWitness);
    }

    #[test]
    fn forall_and_existential_conjuncts() {
        let s = structure("rel P/1; rel R/2;", 2, &[("R", &[0, 1]), ("P", &[0])]);
        let n = nf(&s, "forall x y (R(x,y) -> P(y)) & exists x (P(x) & !P(x))");
        let r = check_model(&s, &n, CheckMode::default());
        assert_eq!(
            r.violations,
            vec![
                CheckViolation { conjunct: Some(0), tuple: vec![0, 1], kind: ViolationKind::ForallViolation },
                CheckViolation { conjunct: Some(1), tuple: vec![], kind: ViolationKind::MissingWitness },
            ]
        );
    }

    #[test]
    fn local_checks() {
        let s = structure("rel P/1; rel R/2;", 2, &[("R", &[0, 1]), ("P", &[0])]);
        let n = nf(&s, "forall x y (R(x,y) -> P(y)) & forall x (x = x -> P(x))");
        let c = CompiledSentence::new(&n, s.signature()).unwrap();
        assert_eq!(c.check_fact(&s, 1, &[0, 1]).len(), 1);
        assert!(c.check_fact(&s, 0, &[0]).is_empty());
        assert!(c.check_element(&s, 0).is_empty());
        assert_eq!(c.check_element(&s, 1).len(), 1);
    }
}
