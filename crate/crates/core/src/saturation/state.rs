//! The U-saturation loop over the table of copies of B.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::blocks::{build_blocks, select_entry_elements, Blocks, COPIES};
use super::SaturationError;
use crate::finder::for_each_tuple;
use crate::modelcheck::{check_model, CheckMode, CompiledSentence};
use crate::normalform::NormalFormSentence;
use crate::structures::{atomic_type, AtomicType, Elem, Structure};
use crate::syntax::RelId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaturateOptions {
    /// Leave transitive relations alone when connecting a pair.
    pub tg: bool,
    /// Assert the preservation properties after every step.
    pub check_every_step: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactRecord {
    pub rel: String,
    pub tuple: Vec<Elem>,
}

/// One step: the connected pair, the positions `(j, k, l)` of its members, the chosen
/// copy `t` of C in the cell `(j1, j2)` and the facts that changed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub pair: [Elem; 2],
    pub coords: [[u32; 3]; 2],
    pub t: u32,
    pub added: Vec<FactRecord>,
    pub removed: Vec<FactRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaturationTrace {
    pub steps: Vec<StepRecord>,
}

impl SaturationTrace {
    /// One JSON record per line.
    pub fn to_jsonl(&self) -> String {
        self.steps.iter().map(|s| serde_json::to_string(s).expect("serialisable") + "\n").collect()
    }

    pub fn from_jsonl(text: &str) -> Result<SaturationTrace, SaturationError> {
        let steps = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| SaturationError::Trace(e.to_string())))
            .collect::<Result<_, _>>()?;
        Ok(SaturationTrace { steps })
    }

    /// Applies the recorded changes to `a0`.
    pub fn replay(&self, a0: &Structure) -> Result<Structure, SaturationError> {
        let mut s = a0.clone();
        for rec in &self.steps {
            apply_record(&mut s, rec)?;
        }
        Ok(s)
    }
}

/// Applies the changes of one step to `s`.
pub fn apply_record(s: &mut Structure, rec: &StepRecord) -> Result<(), SaturationError> {
    for f in &rec.removed {
        let r = s.signature().rel_id(&f.rel).ok_or_else(|| SaturationError::Trace(format!("unknown relation `{}`", f.rel)))?;
        s.remove_fact(r, &f.tuple);
    }
    for f in &rec.added {
        s.add_fact_named(&f.rel, &f.tuple)?;
    }
    Ok(())
}

/// The current structure Aᵢ together with the frozen A₀ and the entry elements.
pub struct SaturationState {
    blocks: Blocks,
    current: Structure,
    /// Positions in the unnamed part of C of the entry elements of the cell `(k, l)`.
    entries: Vec<(u32, u32)>,
    types: Vec<AtomicType>,
    u: RelId,
    tg: bool,
    steps: usize,
    cursor: (Elem, Elem),
}

impl SaturationState {
    /// Starts from A₀ and selects the entry elements of every cell.
    pub fn new(blocks: Blocks, tg: bool) -> Result<SaturationState, SaturationError> {
        let sig = blocks.a0.signature_arc().clone();
        let u = sig.universal().and_then(|u| sig.rel_id(u)).ok_or(SaturationError::NoUniversal)?;
        let side = blocks.side();
        let types: Vec<AtomicType> =
            (0..side).map(|j| atomic_type(&blocks.b, &[blocks.b_elem(j)]).expect("in domain")).collect();
        let pos = |e: Elem| blocks.c_unnamed.iter().position(|&x| x == e).expect("unnamed") as u32;
        let mut cache: BTreeMap<(&AtomicType, &AtomicType), (u32, u32)> = BTreeMap::new();
        let mut entries = Vec::with_capacity((side * side) as usize);
        for k in 0..side as usize {
            for l in 0..side as usize {
                let key = (&types[k], &types[l]);
                let e = match cache.get(&key) {
                    Some(e) => *e,
                    None => {
                        let (e1, e2) = select_entry_elements(&blocks, key.0, key.1)?;
                        let e = (pos(e1), pos(e2));
                        cache.insert(key, e);
                        e
                    }
                };
                entries.push(e);
            }
        }
        let current = blocks.a0.clone();
        Ok(SaturationState { blocks, current, entries, types, u, tg, steps: 0, cursor: (0, 0) })
    }

    pub fn blocks(&self) -> &Blocks {
        &self.blocks
    }

    pub fn current(&self) -> &Structure {
        &self.current
    }

    pub fn frozen(&self) -> &Structure {
        &self.blocks.a0
    }

    pub fn into_current(self) -> Structure {
        self.current
    }

    pub fn step_count(&self) -> usize {
        self.steps
    }

    /// The 1-type in B of its `j`-th unnamed element.
    pub fn index_type(&self, j: u32) -> &AtomicType {
        &self.types[j as usize]
    }

    /// The entry elements of the copy `m` of C in the cell `(k, l)`, as elements of A₀.
    pub fn entry(&self, k: u32, l: u32, m: u32) -> (Elem, Elem) {
        let (p1, p2) = self.entries[(k * self.blocks.side() + l) as usize];
        let base = m * self.blocks.k;
        (self.blocks.elem(base + p1, k, l), self.blocks.elem(base + p2, k, l))
    }

    /// The least copy of C in a cell avoiding the given unnamed indices of B.
    pub fn free_copy(&self, avoid: &[u32]) -> u32 {
        (0..COPIES).find(|t| avoid.iter().all(|&j| j / self.blocks.k != *t)).expect("five copies, four indices")
    }

    /// The lexicographically least pair not connected by U.
    pub fn next_unconnected(&mut self) -> Option<(Elem, Elem)> {
        let n = self.current.size();
        let (mut a, mut b) = self.cursor;
        while a < n {
            if !self.current.has_fact(self.u, &[a, b]) {
                self.cursor = (a, b);
                return Some((a, b));
            }
            b += 1;
            if b == n {
                a += 1;
                b = 0;
            }
        }
        self.cursor = (n, 0);
        None
    }

    /// The changes connecting `b1` and `b2`, without applying them.
    pub fn plan_step(&self, b1: Elem, b2: Elem) -> Result<StepRecord, SaturationError> {
        let bl = &self.blocks;
        let s = &self.current;
        if let Some(&e) = [b1, b2].iter().find(|&&e| e >= s.size()) {
            return Err(SaturationError::Structure(crate::structures::StructureError::OutOfDomain(e)));
        }
        let (n1, k1, l1) = bl.locate(b1).ok_or(SaturationError::Named(b1))?;
        let (n2, k2, l2) = bl.locate(b2).ok_or(SaturationError::Named(b2))?;
        if s.has_fact(self.u, &[b1, b2]) {
            return Err(SaturationError::AlreadyConnected(b1, b2));
        }
        let t = self.free_copy(&[k1, l1, k2, l2]);
        let (e1, e2) = self.entry(n1, n2, t);
        let mut region: Vec<Elem> = (0..bl.named).collect();
        region.extend((0..bl.k).map(|p| bl.elem(t * bl.k + p, n1, n2)));
        region.push(b1);
        region.push(b2);
        let h = |e: Elem| if e == b1 { e1 } else if e == b2 { e2 } else { e };
        let sig = s.signature();
        let mut added = Vec::new();
        let mut removed = Vec::new();
        let mut tuple = Vec::new();
        let mut image = Vec::new();
        for (r, name, arity) in sig.relations() {
            if arity == 0 || (self.tg && sig.is_transitive_id(r)) {
                continue;
            }
            for_each_tuple(region.len() as u32, arity, &mut |idx| {
                tuple.clear();
                tuple.extend(idx.iter().map(|&i| region[i as usize]));
                if !tuple.iter().any(|&e| e == b1 || e == b2) {
                    return;
                }
                image.clear();
                image.extend(tuple.iter().map(|&e| h(e)));
                let want = bl.a0.has_fact(r, &image);
                if want != s.has_fact(r, &tuple) {
                    let rec = FactRecord { rel: name.to_string(), tuple: tuple.clone() };
                    if want {
                        added.push(rec);
                    } else {
                        removed.push(rec);
                    }
                }
            });
        }
        Ok(StepRecord { step: self.steps + 1, pair: [b1, b2], coords: [[n1, k1, l1], [n2, k2, l2]], t, added, removed })
    }

    /// Connects `b1` and `b2` by U, making the chosen copy of C together with them a copy of
    /// the corresponding part of A₀. With `check`, the preservation properties are asserted.
    pub fn step(&mut self, b1: Elem, b2: Elem, check: Option<&CompiledSentence>) -> Result<StepRecord, SaturationError> {
        let rec = self.plan_step(b1, b2)?;
        let fail = |msg: String| SaturationError::Invariant { step: rec.step, msg };
        if check.is_some() {
            // no tuple guarded before the step may change its type
            let named = self.blocks.named;
            for f in rec.added.iter().chain(&rec.removed) {
                let mut d: Vec<Elem> = f.tuple.iter().copied().filter(|&e| e >= named).collect();
                d.sort_unstable();
                d.dedup();
                // every fact is U-connected, so an unconnected pair rules out a cover
                let connected = d.iter().all(|&a| d.iter().all(|&b| self.current.has_fact(self.u, &[a, b])));
                if connected && self.current.covered_by_fact(&d) {
                    return Err(fail(format!("guarded tuple {d:?} changes at {}{:?}", f.rel, f.tuple)));
                }
            }
        }
        let before = self.current.fact_count(self.u);
        apply_record(&mut self.current, &rec)?;
        self.steps += 1;
        if !(self.current.has_fact(self.u, &[b1, b2]) && self.current.has_fact(self.u, &[b2, b1])) {
            return Err(fail(format!("{b1} and {b2} are still not connected")));
        }
        if let Some(compiled) = check {
            if self.current.fact_count(self.u) <= before {
                return Err(fail("the number of U-facts did not grow".into()));
            }
            for b in [b1, b2] {
                let now = atomic_type(&self.current, &[b]).expect("in domain");
                if now != atomic_type(&self.blocks.a0, &[b]).expect("in domain") {
                    return Err(fail(format!("the 1-type of {b} changed")));
                }
            }
            for f in &rec.added {
                let r = self.current.signature().rel_id(&f.rel).expect("declared");
                if let Some(v) = compiled.check_fact(&self.current, r, &f.tuple).first() {
                    return Err(fail(format!("conjunct {:?} fails at {:?}", v.conjunct, v.tuple)));
                }
            }
        }
        Ok(rec)
    }
}

/// Builds the blocks from `c_minus` and saturates, passing every step to `on_step`.
/// Returns the final state, whose structure is U-biquitous and a model of `phi_star`.
pub fn saturate_with(
    c_minus: &Structure,
    phi_star: &NormalFormSentence,
    opts: SaturateOptions,
    on_step: &mut dyn FnMut(&StepRecord),
) -> Result<SaturationState, SaturationError> {
    let mode = CheckMode { ubiquitous: false, transitive: opts.tg };
    let blocks = build_blocks(c_minus, phi_star, mode)?;
    let mut state = SaturationState::new(blocks, opts.tg)?;
    let compiled = if opts.check_every_step {
        Some(CompiledSentence::new(phi_star, state.current.signature()).map_err(|e| SaturationError::Check(e.to_string()))?)
    } else {
        None
    };
    let bound = (state.current.size() as usize).pow(2);
    while let Some((b1, b2)) = state.next_unconnected() {
        let rec = state.step(b1, b2, compiled.as_ref())?;
        on_step(&rec);
        if state.steps > bound {
            return Err(SaturationError::Invariant { step: state.steps, msg: "too many steps".into() });
        }
    }
    let rep = check_model(&state.current, phi_star, CheckMode { ubiquitous: true, transitive: opts.tg });
    if !rep.verdict {
        return Err(SaturationError::NotAModel { what: "saturated table".into(), violations: rep.violations.len() + rep.omitted });
    }
    Ok(state)
}

/// Saturates and records the whole trace.
pub fn saturate(
    c_minus: &Structure,
    phi_star: &NormalFormSentence,
    opts: SaturateOptions,
) -> Result<(Structure, SaturationTrace), SaturationError> {
    let mut trace = SaturationTrace::default();
    let state = saturate_with(c_minus, phi_star, opts, &mut |r| trace.steps.push(r.clone()))?;
    Ok((state.into_current(), trace))
}
