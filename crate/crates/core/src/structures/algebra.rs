use std::collections::BTreeMap;

use super::{Elem, Structure, StructureError};

/// A single element, or a set of elements all occurring in one fact.
pub fn is_guarded(s: &Structure, tuple: &[Elem]) -> bool {
    let mut d: Vec<Elem> = tuple.to_vec();
    d.sort_unstable();
    d.dedup();
    d.len() <= 1 || s.covered_by_fact(&d)
}

/// Every fact stays a fact under every exchange of occurrences of `a` and `b`.
pub fn indistinguishable(s: &Structure, a: Elem, b: Elem) -> bool {
    if a == b {
        return true;
    }
    let mut ok = true;
    for x in [a, b] {
        s.for_each_fact_containing(&[x], &mut |rel, t| {
            let pos: Vec<usize> = (0..t.len()).filter(|&i| t[i] == a || t[i] == b).collect();
            let mut v = t.to_vec();
            for mask in 0u32..(1 << pos.len()) {
                for (k, &i) in pos.iter().enumerate() {
                    v[i] = if mask & (1 << k) != 0 { b } else { a };
                }
                if !s.has_fact(rel, &v) {
                    ok = false;
                    return false;
                }
            }
            true
        });
        if !ok {
            break;
        }
    }
    ok
}

fn require_constant_free(s: &Structure, op: &str) -> Result<(), StructureError> {
    if s.signature().constants().is_empty() {
        Ok(())
    } else {
        Err(StructureError::Constants(format!("{op} needs a constant-free signature")))
    }
}

/// Disjoint union; element `e` of the `i`-th structure becomes `e` plus the sizes of the earlier ones.
pub fn disjoint_union(list: &[Structure]) -> Result<Structure, StructureError> {
    let first = list.first().ok_or_else(|| StructureError::Empty)?;
    for s in list {
        require_constant_free(s, "disjoint union")?;
        if s.signature() != first.signature() {
            return Err(StructureError::SignatureMismatch);
        }
    }
    let total: u32 = list.iter().map(|s| s.size()).sum();
    let mut out = Structure::new(first.signature_arc().clone(), total);
    let mut offset = 0;
    let mut buf = Vec::new();
    for s in list {
        for (r, t) in s.all_facts() {
            buf.clear();
            buf.extend(t.iter().map(|&e| e + offset));
            out.insert(r, &buf);
        }
        offset += s.size();
    }
    Ok(out)
}

/// Two copies of every element: `(a,0)` is `a`, `(a,1)` is `a + |A|`; a fact holds on
/// tagged elements iff it holds on their projections.
pub fn doubling(s: &Structure) -> Result<Structure, StructureError> {
    require_constant_free(s, "doubling")?;
    Ok(harmonized_doubling(s))
}

/// Doubling that keeps named elements single. The unnamed elements, in increasing
/// order, get their second copies at `|A|, |A|+1, ...`.
pub fn harmonized_doubling(s: &Structure) -> Structure {
    let n = s.size();
    let mut rank = vec![None; n as usize];
    let mut k = 0;
    for e in s.domain() {
        if !s.is_named(e) {
            rank[e as usize] = Some(k);
            k += 1;
        }
    }
    let mut out = Structure::new(s.signature_arc().clone(), n + k);
    for (i, c) in s.constants().iter().enumerate() {
        if let Some(e) = c {
            out.set_constant_index(i, *e);
        }
    }
    for (r, t) in s.all_facts() {
        let pos: Vec<usize> = (0..t.len()).filter(|&i| rank[t[i] as usize].is_some()).collect();
        let mut v = t.to_vec();
        for mask in 0u32..(1 << pos.len()) {
            for (j, &i) in pos.iter().enumerate() {
                v[i] = if mask & (1 << j) != 0 { n + rank[t[i] as usize].unwrap() } else { t[i] };
            }
            out.insert(r, &v);
        }
    }
    out
}

/// Named part of `s`: its named elements ordered by the first constant naming them.
fn named_order(s: &Structure) -> Vec<Elem> {
    let mut out = Vec::new();
    for c in s.constants().iter().flatten() {
        if !out.contains(c) {
            out.push(*c);
        }
    }
    out
}

/// Union of a family sharing one named part: the named part is kept once (as
/// elements `0..m`), followed by the unnamed elements of each structure in turn.
pub fn harmonized_union(list: &[Structure]) -> Result<Structure, StructureError> {
    let first = list.first().ok_or_else(|| StructureError::Empty)?;
    let named = named_order(first);
    let base = first.restrict(&named);
    let mut maps: Vec<BTreeMap<Elem, Elem>> = Vec::new();
    let mut total = named.len() as u32;
    for s in list {
        s.validate()?;
        if s.signature() != first.signature() {
            return Err(StructureError::SignatureMismatch);
        }
        let own = named_order(s);
        if s.restrict(&own) != base {
            return Err(StructureError::NotHarmonized);
        }
        let mut m: BTreeMap<Elem, Elem> = own.iter().enumerate().map(|(i, &e)| (e, i as Elem)).collect();
        for e in s.domain() {
            if !m.contains_key(&e) {
                m.insert(e, total);
                total += 1;
            }
        }
        maps.push(m);
    }
    let mut out = Structure::new(first.signature_arc().clone(), total);
    for (i, c) in base.constants().iter().enumerate() {
        out.set_constant_index(i, c.expect("validated"));
    }
    let mut buf = Vec::new();
    for (s, m) in list.iter().zip(&maps) {
        for (r, t) in s.all_facts() {
            buf.clear();
            buf.extend(t.iter().map(|e| m[e]));
            out.insert(r, &buf);
        }
    }
    Ok(out)
}

/// Removes every fact `T(a,b)` with `a != b` for transitive `T`.
pub fn strip_transitive_cross_facts(s: &Structure) -> Structure {
    let mut out = s.clone();
    for (r, t) in s.all_facts() {
        if s.signature().is_transitive_id(r) && t[0] != t[1] {
            out.remove_fact(r, &t);
        }
    }
    out
}
