//! Equalised horizontal and vertical parts, the grid D and the small model built from copies of D.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use super::phi::{build_phi_b, build_phi_c, two_types_respect_foralls};
use super::TgError;
use crate::finder::{find_model, for_each_tuple, SearchConfig};
use crate::modelcheck::{check_model, CheckMode};
use crate::normalform::NormalFormSentence;
use crate::structures::{atomic_type, disjoint_union, AtomicType, Elem, Structure};
use crate::syntax::RelId;

fn one_types(s: &Structure) -> Vec<AtomicType> {
    s.domain().map(|e| atomic_type(s, &[e]).expect("in domain")).collect()
}

fn counts(types: &[AtomicType]) -> BTreeMap<&AtomicType, usize> {
    let mut m = BTreeMap::new();
    for t in types {
        *m.entry(t).or_insert(0) += 1;
    }
    m
}

/// Copies of `c` and extra realisations in `b` so that every 1-type has as many
/// realisations in one as in the other. C* is the disjoint union of `m` copies of `c`,
/// `m` the largest number of realisations of a type in `b`; B* adjoins to `b` copies of
/// the least element of each short type, with the facts of that element and no facts
/// between the copy and the original.
pub fn equalize_realizations(b: &Structure, c: &Structure) -> Result<(Structure, Structure), TgError> {
    let (tb, tc) = (one_types(b), one_types(c));
    let (nb, nc) = (counts(&tb), counts(&tc));
    if !nb.keys().eq(nc.keys()) {
        return Err(TgError::TypesDiffer);
    }
    let m = nb.values().copied().max().unwrap_or(0);
    let c_star = disjoint_union(&vec![c.clone(); m])?;
    let mut b_star = b.clone();
    for (t, &have) in &nb {
        let pattern = tb.iter().position(|u| u == *t).expect("realised") as Elem;
        let mut facts = Vec::new();
        b.for_each_fact_containing(&[pattern], &mut |r, tuple| {
            facts.push((r, tuple.to_vec()));
            true
        });
        for _ in have..m * nc[t] {
            let fresh = b_star.add_elements(1);
            for (r, tuple) in &facts {
                let moved: Vec<Elem> = tuple.iter().map(|&e| if e == pattern { fresh } else { e }).collect();
                b_star.add_fact(*r, &moved)?;
            }
        }
    }
    Ok((b_star, c_star))
}

/// The grid D over `K × K`: the element `(k, l)` is `k * K + l` and realises the type of
/// the element `(k + l) mod K` of B*. Row `k` is a copy of B* under `(k, l) ↦ (k + l) mod K`;
/// column `l` is a copy of C* under `column_maps[l]`.
#[derive(Clone, Debug)]
pub struct GridStructure {
    pub k: u32,
    pub structure: Structure,
    /// `column_maps[l][k]` is the element of C* sent to `(k, l)`.
    pub column_maps: Vec<Vec<Elem>>,
}

impl GridStructure {
    pub fn elem(&self, k: u32, l: u32) -> Elem {
        k * self.k + l
    }

    pub fn coords(&self, e: Elem) -> (u32, u32) {
        (e / self.k, e % self.k)
    }

    /// The element of B* that the row bijection sends to `(k, l)`.
    pub fn row_image(&self, k: u32, l: u32) -> Elem {
        (k + l) % self.k
    }

    /// The position in row `k` of the element `b` of B*.
    pub fn row_position(&self, k: u32, b: Elem) -> Elem {
        self.elem(k, (b + self.k - k % self.k) % self.k)
    }
}

/// Builds D from B* and C* of equal size with equal numbers of realisations per 1-type.
pub fn build_d(b_star: &Structure, c_star: &Structure) -> Result<GridStructure, TgError> {
    let k = b_star.size();
    if c_star.size() != k {
        return Err(TgError::SizeMismatch(k, c_star.size()));
    }
    if b_star.signature() != c_star.signature() {
        return Err(TgError::SignatureMismatch);
    }
    let tb = one_types(b_star);
    let tc = one_types(c_star);
    if counts(&tb) != counts(&tc) {
        return Err(TgError::TypesDiffer);
    }
    let mut column_maps = Vec::with_capacity(k as usize);
    for l in 0..k {
        let mut pools: BTreeMap<&AtomicType, VecDeque<Elem>> = BTreeMap::new();
        for (e, t) in tc.iter().enumerate() {
            pools.entry(t).or_default().push_back(e as Elem);
        }
        let col: Vec<Elem> = (0..k)
            .map(|row| pools.get_mut(&tb[((row + l) % k) as usize]).and_then(|p| p.pop_front()).expect("equal counts"))
            .collect();
        column_maps.push(col);
    }
    let mut grid = GridStructure { k, structure: Structure::new(b_star.signature_arc().clone(), k * k), column_maps };
    for (r, t) in b_star.all_facts() {
        for row in 0..k {
            let moved: Vec<Elem> = t.iter().map(|&b| grid.row_position(row, b)).collect();
            grid.structure.add_fact(r, &moved)?;
        }
    }
    let mut inverse = vec![vec![0; k as usize]; k as usize];
    for (l, col) in grid.column_maps.iter().enumerate() {
        for (row, &c) in col.iter().enumerate() {
            inverse[l][c as usize] = row as Elem;
        }
    }
    for (r, t) in c_star.all_facts() {
        for (l, inv) in inverse.iter().enumerate() {
            let moved: Vec<Elem> = t.iter().map(|&c| inv[c as usize] * k + l as Elem).collect();
            grid.structure.add_fact(r, &moved)?;
        }
    }
    Ok(grid)
}

/// Copies the row `row` onto `b1`, `b2` using `a1`, `a2` as a template: for every
/// non-transitive relation and every tuple over `b1`, `b2` and the row without `a1`, `a2`
/// that mentions one of `b1`, `b2` and some row element, the fact is set iff it holds of
/// the tuple with `b1`, `b2` replaced by `a1`, `a2`. Returns the facts added.
pub fn connect_pair_to_row(
    target: &mut Structure,
    b1: Elem,
    b2: Elem,
    row: &[Elem],
    a1: Elem,
    a2: Elem,
) -> Result<Vec<(RelId, Vec<Elem>)>, TgError> {
    if b1 == b2 || a1 == a2 || !row.contains(&a1) || !row.contains(&a2) || row.contains(&b1) || row.contains(&b2) {
        return Err(TgError::BadConnection);
    }
    let mut region = vec![b1, b2];
    region.extend(row.iter().copied().filter(|&e| e != a1 && e != a2));
    let h = |e: Elem| if e == b1 { a1 } else if e == b2 { a2 } else { e };
    let sig = target.signature_arc().clone();
    let mut added = Vec::new();
    let mut removed = Vec::new();
    for (r, _, arity) in sig.relations() {
        if sig.is_transitive_id(r) || arity == 0 {
            continue;
        }
        for_each_tuple(region.len() as u32, arity, &mut |idx| {
            if !idx.iter().any(|&i| i < 2) || !idx.iter().any(|&i| i >= 2) {
                return;
            }
            let t: Vec<Elem> = idx.iter().map(|&i| region[i as usize]).collect();
            let image: Vec<Elem> = t.iter().map(|&e| h(e)).collect();
            let want = target.has_fact(r, &image);
            if want && !target.has_fact(r, &t) {
                added.push((r, t));
            } else if !want && target.has_fact(r, &t) {
                removed.push((r, t));
            }
        });
    }
    for (r, t) in &removed {
        target.remove_fact(*r, t);
    }
    for (r, t) in &added {
        target.add_fact(*r, t)?;
    }
    Ok(added)
}

/// One connection of the small model: a vertical pair of the column `column` of copy
/// `from_copy` joined to the row `row` of copy `to_copy`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    pub from_copy: u32,
    pub column: u32,
    pub pair: (Elem, Elem),
    pub to_copy: u32,
    pub row: u32,
}

/// A small model and the structures it was built from.
#[derive(Clone, Debug)]
pub struct SmallModel {
    pub phi_b: NormalFormSentence,
    pub phi_c: NormalFormSentence,
    pub b: Structure,
    pub c: Structure,
    pub b_star: Structure,
    pub c_star: Structure,
    pub grid: GridStructure,
    /// The `3K` copies of D with all connections, over the signature of φ_B and φ_C.
    pub model: Structure,
    pub allocations: Vec<Allocation>,
}

impl SmallModel {
    /// Number of copies of D in each of the three groups.
    pub fn copies_per_group(&self) -> u32 {
        self.grid.k
    }

    /// The element `(k, l)` of copy `q` of D.
    pub fn elem(&self, q: u32, k: u32, l: u32) -> Elem {
        q * self.grid.k * self.grid.k + self.grid.elem(k, l)
    }
}

/// For each reduced 2-type realised by distinct elements of `b_star`, the least pair realising it.
fn templates(b_star: &Structure) -> BTreeMap<AtomicType, (Elem, Elem)> {
    let sig = b_star.signature();
    let mut out = BTreeMap::new();
    for a1 in b_star.domain() {
        for a2 in b_star.domain().filter(|&a2| a2 != a1) {
            let t = atomic_type(b_star, &[a1, a2]).expect("in domain").transitive_free_reduction(sig);
            out.entry(t).or_insert((a1, a2));
        }
    }
    out
}

/// Finds models B of φ_B and C of φ_C within the bound of `cfg`, equalises them, builds D
/// and joins `3K` copies of it: every vertical guarded pair of distinct elements of a copy
/// in group `i` is connected to a row, not used by its column before, of a copy in group
/// `(i + 1) mod 3`. The result is checked against `nf` with transitivity.
pub fn build_small_model(
    nf: &NormalFormSentence,
    alpha: &BTreeSet<AtomicType>,
    beta: &BTreeSet<AtomicType>,
    cfg: &SearchConfig,
) -> Result<SmallModel, TgError> {
    if !two_types_respect_foralls(nf, beta) {
        return Err(TgError::ForallViolatedByPair);
    }
    let phi_b = build_phi_b(nf, alpha, beta)?;
    let phi_c = build_phi_c(nf, alpha, beta)?;
    let horizontal = cfg.clone().transitive(false).ubiquitous(false).ramified(false).max_fact_elems(None);
    let vertical = cfg.clone().transitive(true).ubiquitous(false).ramified(true).max_fact_elems(Some(2));
    let b = find_model(&phi_b, &horizontal).ok_or(TgError::NoModel("horizontal", cfg.max_domain_size))?;
    let c = find_model(&phi_c, &vertical).ok_or(TgError::NoModel("vertical", cfg.max_domain_size))?;
    assemble(nf, phi_b, phi_c, b, c)
}

/// The construction from given models `b` of `phi_b` and `c` of `phi_c` onwards.
pub fn assemble(
    nf: &NormalFormSentence,
    phi_b: NormalFormSentence,
    phi_c: NormalFormSentence,
    b: Structure,
    c: Structure,
) -> Result<SmallModel, TgError> {
    let (b_star, c_star) = equalize_realizations(&b, &c)?;
    let grid = build_d(&b_star, &c_star)?;
    let k = grid.k;
    let copies = 3 * k;
    let mut model = disjoint_union(&vec![grid.structure.clone(); copies as usize])?;
    let sig = model.signature_arc().clone();
    let plates = templates(&b_star);
    let d = &grid.structure;
    let mut allocations = Vec::new();
    let stride = k * k;
    for q in 0..copies {
        let next_group = (q / k + 1) % 3;
        for l in 0..k {
            let mut next_row = 0u32;
            for k1 in 0..k {
                for k2 in k1 + 1..k {
                    let (e1, e2) = (grid.elem(k1, l), grid.elem(k2, l));
                    if !d.covered_by_fact(&[e1, e2]) {
                        continue;
                    }
                    let t = atomic_type(d, &[e1, e2])?.transitive_free_reduction(&sig);
                    let &(a1, a2) = plates.get(&t).ok_or_else(|| TgError::NoTemplate(t.display(&sig)))?;
                    if next_row >= k * k {
                        return Err(TgError::RowBudget);
                    }
                    let (to_copy, row) = (next_group * k + next_row / k, next_row % k);
                    next_row += 1;
                    let base = to_copy * stride;
                    let row_elems: Vec<Elem> = (0..k).map(|j| base + grid.elem(row, j)).collect();
                    let (b1, b2) = (q * stride + e1, q * stride + e2);
                    connect_pair_to_row(
                        &mut model,
                        b1,
                        b2,
                        &row_elems,
                        base + grid.row_position(row, a1),
                        base + grid.row_position(row, a2),
                    )?;
                    allocations.push(Allocation { from_copy: q, column: l, pair: (b1, b2), to_copy, row });
                }
            }
        }
    }
    let reduct = model.reduct(Arc::new(nf.signature.clone()))?;
    let rep = check_model(&reduct, nf, CheckMode { ubiquitous: false, transitive: true });
    if !rep.verdict {
        return Err(TgError::NotAModel { what: "small model".into(), violations: rep.violations.len() + rep.omitted });
    }
    Ok(SmallModel { phi_b, phi_c, b, c, b_star, c_star, grid, model, allocations })
}
