//! Propositional encoding of "a structure of size n satisfies ..." for the SAT solver.

use std::collections::HashMap;
use std::sync::Arc;

use super::sat::{Lit, Solver};
use crate::normalform::{ExistsConjunct, ForallConjunct, ForallExists, NormalFormSentence};
use crate::structures::{Elem, Structure};
use crate::syntax::{Formula, RelId, Signature, Term};

/// Handle of a structure being searched for inside a [`Problem`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WorldId(pub usize);

struct World {
    sig: Arc<Signature>,
    size: u32,
    constants: Vec<Elem>,
    /// First SAT variable of each relation's fact block.
    offsets: Vec<u32>,
}

impl World {
    fn fact_var(&self, rel: RelId, tuple: &[Elem]) -> u32 {
        let n = self.size;
        self.offsets[rel] + tuple.iter().fold(0u32, |acc, &e| acc * n + e)
    }
}

/// A ground formula with constants folded.
enum Ground {
    Const(bool),
    Lit(Lit),
    And(Vec<Ground>),
    Or(Vec<Ground>),
}

/// A SAT problem over the facts of one or more structures of fixed sizes.
pub struct Problem {
    solver: Solver,
    worlds: Vec<World>,
    true_lit: Lit,
}

impl Default for Problem {
    fn default() -> Self {
        Self::new()
    }
}

/// Calls `f` on every tuple of length `k` over `0..n`.
pub(crate) fn for_each_tuple(n: u32, k: usize, f: &mut dyn FnMut(&[Elem])) {
    if k > 0 && n == 0 {
        return;
    }
    let mut t = vec![0; k];
    loop {
        f(&t);
        let mut p = k;
        loop {
            if p == 0 {
                return;
            }
            p -= 1;
            t[p] += 1;
            if t[p] < n {
                break;
            }
            t[p] = 0;
        }
    }
}

impl Problem {
    pub fn new() -> Problem {
        let mut solver = Solver::new();
        let t = Lit::pos(solver.new_var());
        solver.add_clause(&[t]);
        Problem { solver, worlds: Vec::new(), true_lit: t }
    }

    /// Adds a structure of `size` elements with constants interpreted as given.
    pub fn add_world(&mut self, sig: Arc<Signature>, size: u32, constants: Vec<Elem>) -> WorldId {
        assert_eq!(constants.len(), sig.constants().len(), "every constant needs an element");
        let mut offsets = Vec::new();
        for (_, _, arity) in sig.relations() {
            let first = self.solver.num_vars();
            offsets.push(first);
            for _ in 0..size.pow(arity as u32) {
                self.solver.new_var();
            }
        }
        self.worlds.push(World { sig, size, constants, offsets });
        WorldId(self.worlds.len() - 1)
    }

    /// Perturbs the decision order of variables created from now on.
    pub fn set_seed(&mut self, seed: u64) {
        self.solver.set_seed(seed);
    }

    pub fn size(&self, w: WorldId) -> u32 {
        self.worlds[w.0].size
    }

    pub fn signature(&self, w: WorldId) -> &Arc<Signature> {
        &self.worlds[w.0].sig
    }

    pub fn fact(&self, w: WorldId, rel: RelId, tuple: &[Elem]) -> Lit {
        Lit::pos(self.worlds[w.0].fact_var(rel, tuple))
    }

    pub fn fact_named(&self, w: WorldId, rel: &str, tuple: &[Elem]) -> Lit {
        let id = self.worlds[w.0].sig.rel_id(rel).expect("declared relation");
        self.fact(w, id, tuple)
    }

    pub fn true_lit(&self) -> Lit {
        self.true_lit
    }

    pub fn new_lit(&mut self) -> Lit {
        Lit::pos(self.solver.new_var())
    }

    pub fn add_clause(&mut self, lits: &[Lit]) {
        self.solver.add_clause(lits);
    }

    /// A fresh literal that implies every literal in `lits`.
    pub fn and_lit(&mut self, lits: &[Lit]) -> Lit {
        match lits {
            [] => self.true_lit,
            [l] => *l,
            _ => {
                let v = self.new_lit();
                for &l in lits {
                    self.solver.add_clause(&[!v, l]);
                }
                v
            }
        }
    }

    fn term(&self, w: WorldId, t: &Term, env: &HashMap<&str, Elem>) -> Elem {
        match t {
            Term::Var(v) => *env.get(v.as_str()).unwrap_or_else(|| panic!("unbound variable {v}")),
            Term::Const(c) => {
                let world = &self.worlds[w.0];
                world.constants[world.sig.const_index(c).expect("declared constant")]
            }
        }
    }

    /// Grounds `f` under `env`, expanding quantifiers over the domain. `positive` is the
    /// polarity of the occurrence.
    fn ground<'a>(&self, w: WorldId, f: &'a Formula, env: &mut HashMap<&'a str, Elem>, positive: bool) -> Ground {
        let fold = |items: Vec<Ground>, conj: bool| -> Ground {
            let mut out = Vec::new();
            for g in items {
                match g {
                    Ground::Const(b) if b == conj => {}
                    Ground::Const(b) => return Ground::Const(b),
                    Ground::And(v) if conj => out.extend(v),
                    Ground::Or(v) if !conj => out.extend(v),
                    g => out.push(g),
                }
            }
            match out.len() {
                0 => Ground::Const(conj),
                1 => out.pop().unwrap(),
                _ if conj => Ground::And(out),
                _ => Ground::Or(out),
            }
        };
        let and_or = |conj: bool| conj == positive;
        match f {
            Formula::True => Ground::Const(positive),
            Formula::False => Ground::Const(!positive),
            Formula::Atom(r, ts) => {
                let world = &self.worlds[w.0];
                let id = world.sig.rel_id(r).expect("declared relation");
                let t: Vec<Elem> = ts.iter().map(|t| self.term(w, t, env)).collect();
                let l = Lit::pos(world.fact_var(id, &t));
                Ground::Lit(if positive { l } else { !l })
            }
            Formula::Eq(a, b) => Ground::Const((self.term(w, a, env) == self.term(w, b, env)) == positive),
            Formula::Not(a) => self.ground(w, a, env, !positive),
            Formula::And(a, b) => {
                let items = vec![self.ground(w, a, env, positive), self.ground(w, b, env, positive)];
                fold(items, and_or(true))
            }
            Formula::Or(a, b) => {
                let items = vec![self.ground(w, a, env, positive), self.ground(w, b, env, positive)];
                fold(items, and_or(false))
            }
            Formula::Implies(a, b) => {
                let items = vec![self.ground(w, a, env, !positive), self.ground(w, b, env, positive)];
                fold(items, and_or(false))
            }
            Formula::Iff(a, b) => {
                // (a -> b) & (b -> a)
                let l = fold(vec![self.ground(w, a, env, !positive), self.ground(w, b, env, positive)], and_or(false));
                let r = fold(vec![self.ground(w, b, env, !positive), self.ground(w, a, env, positive)], and_or(false));
                fold(vec![l, r], and_or(true))
            }
            Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
                let conj = matches!(f, Formula::Forall(..)) == positive;
                let n = self.worlds[w.0].size;
                let saved: Vec<Option<Elem>> = vs.iter().map(|v| env.get(v.as_str()).copied()).collect();
                let mut items = Vec::new();
                let mut stop = false;
                for_each_tuple(n, vs.len(), &mut |t| {
                    if stop {
                        return;
                    }
                    for (v, &e) in vs.iter().zip(t) {
                        env.insert(v.as_str(), e);
                    }
                    let g = self.ground(w, body, env, positive);
                    if matches!(g, Ground::Const(b) if b != conj) {
                        stop = true;
                    }
                    items.push(g);
                });
                for (v, s) in vs.iter().zip(saved) {
                    match s {
                        Some(e) => env.insert(v.as_str(), e),
                        None => env.remove(v.as_str()),
                    };
                }
                fold(items, conj)
            }
        }
    }

    /// A literal implying the ground formula.
    fn encode(&mut self, g: Ground) -> Lit {
        match g {
            Ground::Const(true) => self.true_lit,
            Ground::Const(false) => !self.true_lit,
            Ground::Lit(l) => l,
            Ground::And(items) => {
                let lits: Vec<Lit> = items.into_iter().map(|g| self.encode(g)).collect();
                self.and_lit(&lits)
            }
            Ground::Or(items) => {
                let mut lits: Vec<Lit> = items.into_iter().map(|g| self.encode(g)).collect();
                let v = self.new_lit();
                lits.push(!v);
                self.solver.add_clause(&lits);
                v
            }
        }
    }

    /// Requires the ground formula, adding clauses directly where possible.
    fn require(&mut self, g: Ground) {
        match g {
            Ground::Const(true) => {}
            Ground::Const(false) => {
                self.solver.add_clause(&[]);
            }
            Ground::Lit(l) => {
                self.solver.add_clause(&[l]);
            }
            Ground::And(items) => {
                for g in items {
                    self.require(g);
                }
            }
            Ground::Or(items) => {
                let lits: Vec<Lit> = items.into_iter().map(|g| self.encode(g)).collect();
                self.solver.add_clause(&lits);
            }
        }
    }

    /// A literal implying `f` under `env` (free variables must be bound).
    pub fn formula_lit(&mut self, w: WorldId, f: &Formula, env: &[(&str, Elem)]) -> Lit {
        let mut m: HashMap<&str, Elem> = env.iter().copied().collect();
        let g = self.ground(w, f, &mut m, true);
        self.encode(g)
    }

    /// Requires the closed formula `f` to hold in world `w`.
    pub fn add_formula(&mut self, w: WorldId, f: &Formula) {
        let g = self.ground(w, f, &mut HashMap::new(), true);
        self.require(g);
    }

    pub fn add_forall_exists(&mut self, w: WorldId, c: &ForallExists) {
        let n = self.worlds[w.0].size;
        let mut xs_tuples = Vec::new();
        for_each_tuple(n, c.xs.len(), &mut |t| xs_tuples.push(t.to_vec()));
        let mut ys_tuples = Vec::new();
        for_each_tuple(n, c.ys.len(), &mut |t| ys_tuples.push(t.to_vec()));
        for xt in xs_tuples {
            let mut env: HashMap<&str, Elem> = c.xs.iter().map(String::as_str).zip(xt.iter().copied()).collect();
            let g = self.ground(w, &c.guard, &mut env, false);
            if matches!(g, Ground::Const(true)) {
                continue;
            }
            let mut options = vec![g];
            for yt in &ys_tuples {
                for (v, &e) in c.ys.iter().zip(yt) {
                    env.insert(v.as_str(), e);
                }
                let wg = self.ground(w, &c.wguard, &mut env, true);
                if matches!(wg, Ground::Const(false)) {
                    continue;
                }
                let m = self.ground(w, &c.matrix, &mut env, true);
                options.push(Ground::And(vec![wg, m]));
            }
            self.require(Ground::Or(options));
        }
    }

    pub fn add_forall(&mut self, w: WorldId, c: &ForallConjunct) {
        self.add_formula(w, &c.to_formula());
    }

    pub fn add_exists(&mut self, w: WorldId, c: &ExistsConjunct) {
        self.add_formula(w, &c.to_formula());
    }

    pub fn add_sentence(&mut self, w: WorldId, nf: &NormalFormSentence) {
        for c in &nf.forall_exists {
            self.add_forall_exists(w, c);
        }
        for c in &nf.foralls {
            self.add_forall(w, c);
        }
        for c in &nf.exists {
            self.add_exists(w, c);
        }
    }

    /// Every transitive symbol of the world's signature is transitively closed.
    pub fn add_transitivity(&mut self, w: WorldId) {
        let sig = self.worlds[w.0].sig.clone();
        let n = self.worlds[w.0].size;
        for t in sig.transitive() {
            let r = sig.rel_id(t).unwrap();
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let ab = self.fact(w, r, &[a, b]);
                        let bc = self.fact(w, r, &[b, c]);
                        let ac = self.fact(w, r, &[a, c]);
                        self.solver.add_clause(&[!ab, !bc, ac]);
                    }
                }
            }
        }
    }

    /// The universal symbol holds of every pair.
    pub fn add_ubiquity(&mut self, w: WorldId) {
        let sig = self.worlds[w.0].sig.clone();
        let Some(u) = sig.universal().and_then(|u| sig.rel_id(u)) else { return };
        let n = self.worlds[w.0].size;
        for a in 0..n {
            for b in 0..n {
                let l = self.fact(w, u, &[a, b]);
                self.solver.add_clause(&[l]);
            }
        }
    }

    /// No fact mentions more than `k` distinct elements.
    pub fn add_max_distinct(&mut self, w: WorldId, k: usize) {
        let sig = self.worlds[w.0].sig.clone();
        let n = self.worlds[w.0].size;
        for (r, _, arity) in sig.relations() {
            let mut banned = Vec::new();
            for_each_tuple(n, arity, &mut |t| {
                let mut d = t.to_vec();
                d.sort_unstable();
                d.dedup();
                if d.len() > k {
                    banned.push(t.to_vec());
                }
            });
            for t in banned {
                let l = self.fact(w, r, &t);
                self.solver.add_clause(&[!l]);
            }
        }
    }

    /// Distinct elements are connected (in either direction) by at most one transitive symbol.
    pub fn add_ramified(&mut self, w: WorldId) {
        let sig = self.worlds[w.0].sig.clone();
        let n = self.worlds[w.0].size;
        let ts: Vec<RelId> = sig.transitive().iter().map(|t| sig.rel_id(t).unwrap()).collect();
        for a in 0..n {
            for b in a + 1..n {
                for (i, &s) in ts.iter().enumerate() {
                    for &t in &ts[i + 1..] {
                        for (p, q) in [(a, b), (b, a)] {
                            for (u, v) in [(a, b), (b, a)] {
                                let l1 = self.fact(w, s, &[p, q]);
                                let l2 = self.fact(w, t, &[u, v]);
                                self.solver.add_clause(&[!l1, !l2]);
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn solve(&mut self) -> bool {
        self.solver.solve()
    }

    pub fn solve_limited(&mut self, max_conflicts: Option<u64>) -> Option<bool> {
        self.solver.solve_limited(max_conflicts)
    }

    pub fn value(&self, l: Lit) -> bool {
        self.solver.model_value(l)
    }

    /// The structure of world `w` in the last model.
    pub fn structure(&self, w: WorldId) -> Structure {
        let world = &self.worlds[w.0];
        let mut s = Structure::new(world.sig.clone(), world.size);
        for (r, _, arity) in world.sig.relations() {
            let mut facts = Vec::new();
            for_each_tuple(world.size, arity, &mut |t| {
                if self.solver.model_value(Lit::pos(world.fact_var(r, t))) {
                    facts.push(t.to_vec());
                }
            });
            for t in facts {
                s.add_fact(r, &t).expect("well-formed tuple");
            }
        }
        for (c, &e) in world.sig.constants().iter().zip(&world.constants) {
            s.set_constant(c, e).expect("declared constant");
        }
        s
    }

    /// Excludes the current fact assignment of world `w` from later models.
    pub fn block(&mut self, w: WorldId) {
        let world = &self.worlds[w.0];
        let mut lits = Vec::new();
        for (r, _, arity) in world.sig.relations() {
            for_each_tuple(world.size, arity, &mut |t| {
                let l = Lit::pos(world.fact_var(r, t));
                lits.push(if self.solver.model_value(l) { !l } else { l });
            });
        }
        self.solver.add_clause(&lits);
    }

    pub fn stats(&self) -> (u64, u64) {
        (self.solver.conflicts, self.solver.decisions)
    }
}
