use std::collections::BTreeSet;
use std::sync::Arc;

use rustc_hash::FxHashSet;

use super::StructureError;
use crate::syntax::{RelId, Signature};

/// Element identifier. Domains are always `0..size`.
pub type Elem = u32;

/// Relations of arity at most two are stored as bitsets when the table fits in this many bits.
const DENSE_LIMIT: u64 = 1 << 27;
/// The same for wider relations.
const DENSE_LIMIT_WIDE: u64 = 1 << 30;

#[derive(Clone, Debug)]
enum Store {
    Dense(Vec<u64>),
    Sparse(FxHashSet<Box<[Elem]>>),
}

#[derive(Clone, Debug)]
struct Rel {
    arity: usize,
    store: Store,
    count: usize,
}

/// A finite relational structure over a signature, with constant interpretations.
#[derive(Clone, Debug)]
pub struct Structure {
    sig: Arc<Signature>,
    size: u32,
    rels: Vec<Rel>,
    constants: Vec<Option<Elem>>,
    /// Facts of sparsely stored relations, listed under each element they mention.
    incidence: Vec<Vec<(RelId, Box<[Elem]>)>>,
}

fn dense_fits(arity: usize, size: u32) -> bool {
    let limit = if arity <= 2 { DENSE_LIMIT } else { DENSE_LIMIT_WIDE };
    (size as u64).checked_pow(arity as u32).is_some_and(|cells| cells <= limit)
}

fn empty_store(arity: usize, size: u32) -> Store {
    if dense_fits(arity, size) {
        let bits = (size as u64).pow(arity as u32) as usize;
        Store::Dense(vec![0; bits.div_ceil(64)])
    } else {
        Store::Sparse(FxHashSet::default())
    }
}

impl Structure {
    pub fn new(sig: Arc<Signature>, size: u32) -> Structure {
        let rels = sig
            .relations()
            .map(|(_, _, arity)| Rel { arity, store: empty_store(arity, size), count: 0 })
            .collect();
        let constants = vec![None; sig.constants().len()];
        Structure { sig, size, rels, constants, incidence: vec![Vec::new(); size as usize] }
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn signature_arc(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn domain(&self) -> std::ops::Range<Elem> {
        0..self.size
    }

    fn index(&self, tuple: &[Elem]) -> usize {
        let n = self.size as usize;
        tuple.iter().fold(0usize, |acc, &e| acc * n + e as usize)
    }

    fn check_tuple(&self, rel: RelId, tuple: &[Elem]) -> Result<(), StructureError> {
        if rel >= self.rels.len() {
            return Err(StructureError::UnknownRelation(format!("#{rel}")));
        }
        if tuple.len() != self.rels[rel].arity {
            return Err(StructureError::Arity {
                rel: self.sig.rel_name(rel).to_string(),
                expected: self.rels[rel].arity,
                found: tuple.len(),
            });
        }
        if let Some(&e) = tuple.iter().find(|&&e| e >= self.size) {
            return Err(StructureError::OutOfDomain(e));
        }
        Ok(())
    }

    /// Adds a fact, returning whether it was new.
    pub fn add_fact(&mut self, rel: RelId, tuple: &[Elem]) -> Result<bool, StructureError> {
        self.check_tuple(rel, tuple)?;
        Ok(self.insert(rel, tuple))
    }

    /// Adds a fact whose tuple is known to be well formed.
    pub(crate) fn insert(&mut self, rel: RelId, tuple: &[Elem]) -> bool {
        let idx = self.index(tuple);
        let r = &mut self.rels[rel];
        let added = match &mut r.store {
            Store::Dense(bits) => {
                let (w, b) = (idx / 64, idx % 64);
                let new = bits[w] & (1 << b) == 0;
                bits[w] |= 1 << b;
                new
            }
            Store::Sparse(set) => {
                let new = set.insert(tuple.into());
                if new {
                    let mut seen: smallvec::SmallVec<[Elem; 4]> = smallvec::SmallVec::new();
                    for &e in tuple {
                        if !seen.contains(&e) {
                            seen.push(e);
                            self.incidence[e as usize].push((rel, tuple.into()));
                        }
                    }
                }
                new
            }
        };
        if added {
            r.count += 1;
        }
        added
    }

    pub fn add_fact_named(&mut self, rel: &str, tuple: &[Elem]) -> Result<bool, StructureError> {
        let id = self.sig.rel_id(rel).ok_or_else(|| StructureError::UnknownRelation(rel.to_string()))?;
        self.add_fact(id, tuple)
    }

    pub fn remove_fact(&mut self, rel: RelId, tuple: &[Elem]) -> bool {
        if self.check_tuple(rel, tuple).is_err() {
            return false;
        }
        let idx = self.index(tuple);
        let r = &mut self.rels[rel];
        let removed = match &mut r.store {
            Store::Dense(bits) => {
                let (w, b) = (idx / 64, idx % 64);
                let had = bits[w] & (1 << b) != 0;
                bits[w] &= !(1 << b);
                had
            }
            Store::Sparse(set) => {
                let had = set.remove(tuple);
                if had {
                    for &e in tuple {
                        self.incidence[e as usize].retain(|(q, t)| !(*q == rel && t.as_ref() == tuple));
                    }
                }
                had
            }
        };
        if removed {
            r.count -= 1;
        }
        removed
    }

    pub fn has_fact(&self, rel: RelId, tuple: &[Elem]) -> bool {
        let r = &self.rels[rel];
        if tuple.len() != r.arity || tuple.iter().any(|&e| e >= self.size) {
            return false;
        }
        match &r.store {
            Store::Dense(bits) => {
                let idx = self.index(tuple);
                bits[idx / 64] & (1 << (idx % 64)) != 0
            }
            Store::Sparse(set) => set.contains(tuple),
        }
    }

    pub fn has_fact_named(&self, rel: &str, tuple: &[Elem]) -> bool {
        self.sig.rel_id(rel).is_some_and(|id| self.has_fact(id, tuple))
    }

    pub fn fact_count(&self, rel: RelId) -> usize {
        self.rels[rel].count
    }

    pub fn total_facts(&self) -> usize {
        self.rels.iter().map(|r| r.count).sum()
    }

    /// Calls `f` on the facts of `rel` whose tuple agrees with `pattern` on its bound
    /// positions, until `f` returns false. Returns false if stopped early.
    pub fn for_each_match(&self, rel: RelId, pattern: &[Option<Elem>], f: &mut dyn FnMut(&[Elem]) -> bool) -> bool {
        let r = &self.rels[rel];
        debug_assert_eq!(pattern.len(), r.arity);
        if pattern.iter().any(|p| p.is_some_and(|e| e >= self.size)) {
            return true;
        }
        let n = self.size as usize;
        match &r.store {
            Store::Dense(bits) => {
                if pattern.iter().all(Option::is_some) {
                    let t: smallvec::SmallVec<[Elem; 2]> = pattern.iter().map(|p| p.unwrap()).collect();
                    return !self.has_fact(rel, &t) || f(&t);
                }
                if r.arity > 2 {
                    return self.match_dense(bits, r.arity, pattern, f);
                }
                if r.arity == 2 {
                    if let Some(a) = pattern[0] {
                        return scan_bits(bits, a as usize * n, (a as usize + 1) * n, &mut |i| {
                            f(&[a, (i - a as usize * n) as Elem])
                        });
                    }
                    if let Some(b) = pattern[1] {
                        for a in 0..self.size {
                            if self.has_fact(rel, &[a, b]) && !f(&[a, b]) {
                                return false;
                            }
                        }
                        return true;
                    }
                    return scan_bits(bits, 0, n * n, &mut |i| f(&[(i / n) as Elem, (i % n) as Elem]));
                }
                scan_bits(bits, 0, n, &mut |i| f(&[i as Elem]))
            }
            Store::Sparse(set) => {
                let matches = |t: &[Elem]| pattern.iter().zip(t).all(|(p, e)| p.is_none_or(|p| p == *e));
                let bound = pattern.iter().flatten().min_by_key(|&&e| self.incidence[e as usize].len());
                match bound {
                    Some(&e) => {
                        for (q, t) in &self.incidence[e as usize] {
                            if *q == rel && matches(t) && !f(t) {
                                return false;
                            }
                        }
                        true
                    }
                    None => {
                        for t in set {
                            if !f(t) {
                                return false;
                            }
                        }
                        true
                    }
                }
            }
        }
    }

    /// Matching over a bitset of any arity: a contiguous scan when the bound positions form
    /// a prefix, otherwise a walk over the values of the free positions.
    fn match_dense(&self, bits: &[u64], arity: usize, pattern: &[Option<Elem>], f: &mut dyn FnMut(&[Elem]) -> bool) -> bool {
        let n = self.size as usize;
        if n == 0 {
            return true;
        }
        let prefix = pattern.iter().take_while(|p| p.is_some()).count();
        let mut t = vec![0 as Elem; arity];
        if pattern[prefix..].iter().all(Option::is_none) {
            let span = n.pow((arity - prefix) as u32);
            let start = pattern[..prefix].iter().fold(0usize, |acc, p| acc * n + p.unwrap() as usize) * span;
            return scan_bits(bits, start, start + span, &mut |mut i| {
                for slot in t.iter_mut().rev() {
                    *slot = (i % n) as Elem;
                    i /= n;
                }
                f(&t)
            });
        }
        let free: Vec<usize> = (0..arity).filter(|&i| pattern[i].is_none()).collect();
        for (slot, p) in t.iter_mut().zip(pattern) {
            *slot = p.unwrap_or(0);
        }
        loop {
            let idx = self.index(&t);
            if bits[idx / 64] & (1 << (idx % 64)) != 0 && !f(&t) {
                return false;
            }
            let mut k = free.len();
            loop {
                if k == 0 {
                    return true;
                }
                k -= 1;
                t[free[k]] += 1;
                if (t[free[k]] as usize) < n {
                    break;
                }
                t[free[k]] = 0;
            }
        }
    }

    /// All facts of `rel`, sorted.
    pub fn facts(&self, rel: RelId) -> Vec<Box<[Elem]>> {
        let mut out = Vec::with_capacity(self.rels[rel].count);
        let pattern = vec![None; self.rels[rel].arity];
        self.for_each_match(rel, &pattern, &mut |t| {
            out.push(t.into());
            true
        });
        out.sort();
        out
    }

    /// Every fact as (relation, tuple), sorted by relation id then tuple.
    pub fn all_facts(&self) -> Vec<(RelId, Box<[Elem]>)> {
        (0..self.rels.len()).flat_map(|r| self.facts(r).into_iter().map(move |t| (r, t))).collect()
    }

    /// Calls `f` on every fact mentioning each element of `elems` (which must be non-empty)
    /// until it returns false.
    pub fn for_each_fact_containing(&self, elems: &[Elem], f: &mut dyn FnMut(RelId, &[Elem]) -> bool) -> bool {
        let mut set: smallvec::SmallVec<[Elem; 4]> = elems.iter().copied().collect();
        set.sort_unstable();
        set.dedup();
        if set.is_empty() || set.iter().any(|&e| e >= self.size) {
            return true;
        }
        for (rel, r) in self.rels.iter().enumerate() {
            if let Store::Dense(_) = r.store {
                if set.len() > r.arity {
                    continue;
                }
                let a = set[0];
                if r.arity > 2 && !self.dense_containing(rel, r.arity, &set, f) {
                    return false;
                }
                if r.arity > 2 {
                    continue;
                }
                if r.arity == 1 {
                    if self.has_fact(rel, &[a]) && !f(rel, &[a]) {
                        return false;
                    }
                    continue;
                }
                let b = *set.last().unwrap();
                let cands: &[[Elem; 2]] = if a == b { &[[a, a]] } else { &[[a, b], [b, a]] };
                for t in cands {
                    if self.has_fact(rel, t) && !f(rel, t) {
                        return false;
                    }
                }
                if set.len() == 1 {
                    for c in 0..self.size {
                        if c == a {
                            continue;
                        }
                        for t in [[a, c], [c, a]] {
                            if self.has_fact(rel, &t) && !f(rel, &t) {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        let pivot = *set.iter().min_by_key(|&&e| self.incidence[e as usize].len()).unwrap();
        for (rel, t) in &self.incidence[pivot as usize] {
            if set.iter().all(|e| t.contains(e)) && !f(*rel, t) {
                return false;
            }
        }
        true
    }

    /// Facts of a wide bitset relation mentioning every element of `set`: the first one or
    /// two elements are placed at their first occurrences, the other positions range freely.
    fn dense_containing(&self, rel: RelId, arity: usize, set: &[Elem], f: &mut dyn FnMut(RelId, &[Elem]) -> bool) -> bool {
        let placed = &set[..set.len().min(2)];
        let mut pattern = vec![None; arity];
        for i in 0..arity {
            for j in 0..arity {
                if (placed.len() == 2 && j == i) || (placed.len() == 1 && j > 0) {
                    continue;
                }
                pattern.iter_mut().for_each(|p| *p = None);
                pattern[i] = Some(placed[0]);
                if placed.len() == 2 {
                    pattern[j] = Some(placed[1]);
                }
                let go_on = self.for_each_match(rel, &pattern, &mut |t| {
                    let first = |e: Elem| t.iter().position(|&x| x == e);
                    let at_first = first(placed[0]) == Some(i) && (placed.len() < 2 || first(placed[1]) == Some(j));
                    !(at_first && set.iter().all(|e| t.contains(e))) || f(rel, t)
                });
                if !go_on {
                    return false;
                }
            }
        }
        true
    }

    /// Whether some fact mentions every element of `elems`.
    pub fn covered_by_fact(&self, elems: &[Elem]) -> bool {
        !self.for_each_fact_containing(elems, &mut |_, _| false)
    }

    pub fn constants(&self) -> &[Option<Elem>] {
        &self.constants
    }

    pub fn constant(&self, name: &str) -> Option<Elem> {
        self.sig.const_index(name).and_then(|i| self.constants[i])
    }

    pub fn set_constant(&mut self, name: &str, e: Elem) -> Result<(), StructureError> {
        let i = self.sig.const_index(name).ok_or_else(|| StructureError::UnknownConstant(name.to_string()))?;
        if e >= self.size {
            return Err(StructureError::OutOfDomain(e));
        }
        self.constants[i] = Some(e);
        Ok(())
    }

    pub(crate) fn set_constant_index(&mut self, i: usize, e: Elem) {
        self.constants[i] = Some(e);
    }

    /// Elements interpreting some constant.
    pub fn named_elements(&self) -> BTreeSet<Elem> {
        self.constants.iter().flatten().copied().collect()
    }

    pub fn is_named(&self, e: Elem) -> bool {
        self.constants.contains(&Some(e))
    }

    /// Checks that every constant is interpreted.
    pub fn validate(&self) -> Result<(), StructureError> {
        for (i, c) in self.constants.iter().enumerate() {
            if c.is_none() {
                return Err(StructureError::UninterpretedConstant(self.sig.constants()[i].clone()));
            }
        }
        Ok(())
    }

    /// Appends `k` fresh elements and returns the id of the first one.
    pub fn add_elements(&mut self, k: u32) -> Elem {
        let first = self.size;
        let facts = self.all_facts();
        let mut grown = Structure::new(self.sig.clone(), self.size + k);
        grown.constants = self.constants.clone();
        for (r, t) in facts {
            grown.insert(r, &t);
        }
        *self = grown;
        first
    }

    /// The same structure over a signature containing this one's.
    pub fn with_signature(&self, sig: Arc<Signature>) -> Result<Structure, StructureError> {
        let mut out = Structure::new(sig.clone(), self.size);
        for (r, t) in self.all_facts() {
            let name = self.sig.rel_name(r);
            let id = sig.rel_id(name).ok_or_else(|| StructureError::UnknownRelation(name.to_string()))?;
            out.add_fact(id, &t)?;
        }
        for (i, c) in self.constants.iter().enumerate() {
            if let Some(e) = c {
                out.set_constant(&self.sig.constants()[i], *e)?;
            }
        }
        Ok(out)
    }

    /// The reduct to `sig`: facts of relations outside it are dropped.
    pub fn reduct(&self, sig: Arc<Signature>) -> Result<Structure, StructureError> {
        let mut out = Structure::new(sig.clone(), self.size);
        for (r, t) in self.all_facts() {
            if let Some(id) = sig.rel_id(self.sig.rel_name(r)) {
                out.add_fact(id, &t)?;
            }
        }
        for (i, c) in sig.constants().iter().enumerate() {
            let j = self.sig.const_index(c).ok_or_else(|| StructureError::UnknownConstant(c.clone()))?;
            if let Some(e) = self.constants[j] {
                out.set_constant_index(i, e);
            }
        }
        Ok(out)
    }

    /// The substructure induced by `elems`, renumbered in the given order.
    /// Constants interpreted outside `elems` become uninterpreted.
    pub fn restrict(&self, elems: &[Elem]) -> Structure {
        let mut map = vec![None; self.size as usize];
        for (i, &e) in elems.iter().enumerate() {
            map[e as usize] = Some(i as Elem);
        }
        let mut out = Structure::new(self.sig.clone(), elems.len() as u32);
        for (r, t) in self.all_facts() {
            let mapped: Option<Vec<Elem>> = t.iter().map(|&e| map[e as usize]).collect();
            if let Some(m) = mapped {
                out.insert(r, &m);
            }
        }
        for (i, c) in self.constants.iter().enumerate() {
            if let Some(m) = c.and_then(|e| map[e as usize]) {
                out.constants[i] = Some(m);
            }
        }
        out
    }

    /// The first triple `(a, b, c)` with `T(a,b)`, `T(b,c)` and not `T(a,c)`, if any.
    pub fn transitivity_violation(&self, rel: RelId) -> Option<[Elem; 3]> {
        let mut found = None;
        for (a, b) in self.facts(rel).iter().map(|t| (t[0], t[1])) {
            self.for_each_match(rel, &[Some(b), None], &mut |t| {
                if !self.has_fact(rel, &[a, t[1]]) {
                    found = Some([a, b, t[1]]);
                    return false;
                }
                true
            });
            if found.is_some() {
                break;
            }
        }
        found
    }
}

fn scan_bits(bits: &[u64], from: usize, to: usize, f: &mut dyn FnMut(usize) -> bool) -> bool {
    let mut i = from;
    while i < to {
        let w = bits[i / 64] >> (i % 64);
        if w == 0 {
            i = (i / 64 + 1) * 64;
            continue;
        }
        i += w.trailing_zeros() as usize;
        if i >= to {
            break;
        }
        if !f(i) {
            return false;
        }
        i += 1;
    }
    true
}

impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size
            && *self.sig == *other.sig
            && self.constants == other.constants
            && self.rels.iter().zip(&other.rels).all(|(a, b)| a.count == b.count)
            && self.all_facts() == other.all_facts()
    }
}

impl Eq for Structure {}
