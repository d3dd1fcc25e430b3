use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::encode::{for_each_tuple, Problem};
use crate::modelcheck::{check_model, evaluate, CheckMode};
use crate::normalform::NormalFormSentence;
use crate::structures::{atomic_type, AtomicType, Elem, Structure};
use crate::syntax::{Formula, Signature};

/// Bounds and side conditions for the model search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_domain_size: u32,
    pub mode: CheckMode,
    /// No fact mentions more than this many distinct elements.
    pub max_distinct_elements_per_fact: Option<usize>,
    /// Distinct elements are connected by at most one transitive symbol.
    pub ramified: bool,
    pub seed: u64,
}

impl SearchConfig {
    pub fn new(max_domain_size: u32) -> SearchConfig {
        assert!(max_domain_size >= 1, "the bound must be positive");
        SearchConfig { max_domain_size, mode: CheckMode::default(), max_distinct_elements_per_fact: None, ramified: false, seed: 0 }
    }

    pub fn ubiquitous(mut self, on: bool) -> Self {
        self.mode.ubiquitous = on;
        self
    }

    pub fn transitive(mut self, on: bool) -> Self {
        self.mode.transitive = on;
        self
    }

    pub fn ramified(mut self, on: bool) -> Self {
        self.ramified = on;
        self
    }

    pub fn max_fact_elems(mut self, k: Option<usize>) -> Self {
        self.max_distinct_elements_per_fact = k;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Calls `f` on every interpretation of `k` constants over `0..n` up to renaming of
/// unnamed elements: constant i maps to at most one more than the largest earlier value.
pub fn for_each_constant_map(k: usize, n: u32, f: &mut dyn FnMut(&[Elem]) -> bool) -> bool {
    fn go(cur: &mut Vec<Elem>, k: usize, n: u32, f: &mut dyn FnMut(&[Elem]) -> bool) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        let next = cur.iter().max().map_or(0, |m| m + 1).min(n - 1);
        for e in 0..=next {
            cur.push(e);
            let go_on = go(cur, k, n, f);
            cur.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    go(&mut Vec::new(), k, n, f)
}

fn new_problem(sig: &Arc<Signature>, n: u32, consts: &[Elem], cfg: &SearchConfig) -> (Problem, super::WorldId) {
    let mut p = Problem::new();
    p.set_seed(cfg.seed);
    let w = p.add_world(sig.clone(), n, consts.to_vec());
    if cfg.mode.transitive {
        p.add_transitivity(w);
    }
    if cfg.mode.ubiquitous {
        p.add_ubiquity(w);
    }
    if let Some(k) = cfg.max_distinct_elements_per_fact {
        p.add_max_distinct(w, k);
    }
    if cfg.ramified {
        p.add_ramified(w);
    }
    (p, w)
}

fn search(sig: &Arc<Signature>, cfg: &SearchConfig, mut add: impl FnMut(&mut Problem, super::WorldId), accept: impl Fn(&Structure) -> bool) -> Option<Structure> {
    for n in 1..=cfg.max_domain_size {
        let mut found = None;
        for_each_constant_map(sig.constants().len(), n, &mut |consts| {
            let (mut p, w) = new_problem(sig, n, consts, cfg);
            add(&mut p, w);
            if p.solve() {
                let s = p.structure(w);
                assert!(accept(&s), "decoded structure fails verification");
                found = Some(s);
                return false;
            }
            true
        });
        if found.is_some() {
            return found;
        }
    }
    None
}

/// A smallest structure of size at most the bound satisfying `nf` under the configured
/// side conditions, or `None` if there is none within the bound.
pub fn find_model(nf: &NormalFormSentence, cfg: &SearchConfig) -> Option<Structure> {
    let sig = Arc::new(nf.signature.clone());
    search(&sig, cfg, |p, w| p.add_sentence(w, nf), |s| check_model(s, nf, cfg.mode).verdict && satisfies_structural(s, cfg))
}

/// Like [`find_model`] for an arbitrary sentence over `sig`.
pub fn find_model_formula(f: &Formula, sig: &Signature, cfg: &SearchConfig) -> Option<Structure> {
    let sig = Arc::new(sig.clone());
    search(&sig, cfg, |p, w| p.add_formula(w, f), |s| {
        evaluate(s, f, &Default::default()).unwrap_or(false) && satisfies_mode(s, cfg.mode) && satisfies_structural(s, cfg)
    })
}

/// Whether `s` meets the semantic side conditions of `mode`.
pub fn satisfies_mode(s: &Structure, mode: CheckMode) -> bool {
    let sig = s.signature();
    if mode.transitive && sig.transitive().iter().any(|t| s.transitivity_violation(sig.rel_id(t).unwrap()).is_some()) {
        return false;
    }
    if mode.ubiquitous {
        if let Some(u) = sig.universal().and_then(|u| sig.rel_id(u)) {
            if s.fact_count(u) != (s.size() as usize).pow(2) {
                return false;
            }
        }
    }
    true
}

/// Whether `s` meets the structural constraints of `cfg`.
pub fn satisfies_structural(s: &Structure, cfg: &SearchConfig) -> bool {
    let sig = s.signature();
    if let Some(k) = cfg.max_distinct_elements_per_fact {
        for (r, _, _) in sig.relations() {
            for t in s.facts(r) {
                let d: BTreeSet<Elem> = t.iter().copied().collect();
                if d.len() > k {
                    return false;
                }
            }
        }
    }
    if cfg.ramified {
        let ts: Vec<_> = sig.transitive().iter().map(|t| sig.rel_id(t).unwrap()).collect();
        for a in s.domain() {
            for b in s.domain().filter(|&b| b > a) {
                let linked = ts.iter().filter(|&&t| s.has_fact(t, &[a, b]) || s.has_fact(t, &[b, a])).count();
                if linked > 1 {
                    return false;
                }
            }
        }
    }
    true
}

/// Closes every transitive symbol of `s`; other relations are copied unchanged.
pub fn transitive_closure(s: &Structure) -> Structure {
    let mut out = s.clone();
    let sig = s.signature_arc().clone();
    let n = s.size() as usize;
    for t in sig.transitive() {
        let r = sig.rel_id(t).unwrap();
        let mut reach = vec![vec![false; n]; n];
        for f in s.facts(r) {
            reach[f[0] as usize][f[1] as usize] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        for (i, row) in reach.iter().enumerate() {
            for (j, &on) in row.iter().enumerate() {
                if on {
                    out.add_fact(r, &[i as Elem, j as Elem]).expect("in domain");
                }
            }
        }
    }
    out
}

/// The 1-types realised by elements of `s` and the 2-types realised by distinct pairs
/// that occur together in some fact.
pub fn realized_types(s: &Structure) -> (BTreeSet<AtomicType>, BTreeSet<AtomicType>) {
    let mut alpha = BTreeSet::new();
    let mut beta = BTreeSet::new();
    for a in s.domain() {
        alpha.insert(atomic_type(s, &[a]).expect("in domain"));
        for b in s.domain().filter(|&b| b != a) {
            if s.covered_by_fact(&[a, b]) {
                beta.insert(atomic_type(s, &[a, b]).expect("in domain"));
            }
        }
    }
    (alpha, beta)
}

/// Calls `f` on every structure over `sig` with domain `0..n`, all constant
/// interpretations included, until it returns false.
pub fn for_each_structure(sig: &Arc<Signature>, n: u32, f: &mut dyn FnMut(&Structure) -> bool) -> bool {
    let mut slots: Vec<(usize, Vec<Elem>)> = Vec::new();
    for (r, _, arity) in sig.relations() {
        for_each_tuple(n, arity, &mut |t| slots.push((r, t.to_vec())));
    }
    assert!(slots.len() < 32, "too many potential facts to enumerate");
    let k = sig.constants().len();
    let mut go_on = true;
    for_each_tuple(n, k, &mut |consts| {
        if !go_on {
            return;
        }
        for mask in 0u64..(1u64 << slots.len()) {
            let mut s = Structure::new(sig.clone(), n);
            for (i, (r, t)) in slots.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    s.add_fact(*r, t).unwrap();
                }
            }
            for (c, &e) in sig.constants().iter().zip(consts) {
                s.set_constant(c, e).unwrap();
            }
            if !f(&s) {
                go_on = false;
                return;
            }
        }
    });
    go_on
}
