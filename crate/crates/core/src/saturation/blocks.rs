//! The building blocks C, B and the initial table A₀.

use super::SaturationError;
use crate::modelcheck::{check_model, CheckMode};
use crate::normalform::NormalFormSentence;
use crate::structures::{atomic_type, harmonized_doubling, harmonized_union, indistinguishable, AtomicType, Elem, Structure};

/// Number of copies of C in B.
pub const COPIES: u32 = 5;

/// The seed model, its doubling C, five copies B of C and the table A₀ of `(5K)²` copies of B.
///
/// Element layout: the named part is `0..named` everywhere. In B the unnamed element with
/// index `j` is `named + j`, lying in copy `j / K` at position `j % K` of the unnamed part of C.
/// In A₀ the element `(j, k, l)` is `named + (k * 5K + l) * 5K + j`.
#[derive(Clone, Debug)]
pub struct Blocks {
    pub c_minus: Structure,
    pub c: Structure,
    pub b: Structure,
    pub a0: Structure,
    /// Size of the unnamed part of C.
    pub k: u32,
    /// Size of the named part.
    pub named: u32,
    /// Unnamed elements of C in increasing order.
    pub c_unnamed: Vec<Elem>,
}

impl Blocks {
    /// `5K`, the number of unnamed elements of B and the side of the table.
    pub fn side(&self) -> u32 {
        COPIES * self.k
    }

    /// The element `(j, k, l)` of A₀: the `j`-th unnamed element of the cell `(k, l)`.
    pub fn elem(&self, j: u32, k: u32, l: u32) -> Elem {
        let s = self.side();
        self.named + (k * s + l) * s + j
    }

    /// Inverse of [`Blocks::elem`]; `None` for named elements.
    pub fn locate(&self, e: Elem) -> Option<(u32, u32, u32)> {
        let s = self.side();
        let i = e.checked_sub(self.named)?;
        Some((i % s, i / s / s, i / s % s))
    }

    /// The `j`-th unnamed element of B.
    pub fn b_elem(&self, j: u32) -> Elem {
        self.named + j
    }
}

/// Builds C, B and A₀ from a model `c_minus` of `phi_star`, checking each against it.
pub fn build_blocks(c_minus: &Structure, phi_star: &NormalFormSentence, mode: CheckMode) -> Result<Blocks, SaturationError> {
    let seed_mode = CheckMode { ubiquitous: false, ..mode };
    let ensure = |s: &Structure, what: &str| {
        let rep = check_model(s, phi_star, seed_mode);
        if rep.verdict {
            Ok(())
        } else {
            Err(SaturationError::NotAModel { what: what.to_string(), violations: rep.violations.len() + rep.omitted })
        }
    };
    ensure(c_minus, "seed structure")?;
    let c = harmonized_doubling(c_minus);
    let c_unnamed: Vec<Elem> = c.domain().filter(|&e| !c.is_named(e)).collect();
    let k = c_unnamed.len() as u32;
    if k == 0 {
        return Err(SaturationError::NoUnnamed);
    }
    let named = c.size() - k;
    let b = harmonized_union(&vec![c.clone(); COPIES as usize])?;
    let side = (COPIES * k) as usize;
    let a0 = harmonized_union(&vec![b.clone(); side * side])?;
    ensure(&c, "doubling")?;
    ensure(&b, "five copies")?;
    ensure(&a0, "initial table")?;
    Ok(Blocks { c_minus: c_minus.clone(), c, b, a0, k, named, c_unnamed })
}

/// Distinct elements of C realising `ak` and `al`, connected by U both ways, and
/// indistinguishable when the types coincide. They come from the least pair of the seed
/// realising the types and U-connected both ways: its two members if the types differ,
/// otherwise the two copies of its first member.
pub fn select_entry_elements(blocks: &Blocks, ak: &AtomicType, al: &AtomicType) -> Result<(Elem, Elem), SaturationError> {
    let seed = &blocks.c_minus;
    let sig = seed.signature();
    let u = sig.universal().and_then(|u| sig.rel_id(u)).ok_or(SaturationError::NoUniversal)?;
    let types: Vec<AtomicType> = seed.domain().map(|e| atomic_type(seed, &[e]).expect("in domain")).collect();
    let missing = || SaturationError::NoEntryPair(ak.display(sig), al.display(sig));
    let mut witness = None;
    'outer: for b in seed.domain().filter(|&b| types[b as usize] == *ak && !seed.is_named(b)) {
        for b2 in seed.domain().filter(|&b2| types[b2 as usize] == *al && !seed.is_named(b2)) {
            if seed.has_fact(u, &[b, b2]) && seed.has_fact(u, &[b2, b]) {
                witness = Some((b, b2));
                break 'outer;
            }
        }
    }
    let (b, b2) = witness.ok_or_else(missing)?;
    let (e1, e2) = if ak == al {
        // the unnamed seed elements come first in C, so the position of b is its rank
        let rank = blocks.c_unnamed.iter().position(|&e| e == b).expect("unnamed") as u32;
        (b, seed.size() + rank)
    } else {
        (b, b2)
    };
    let c = &blocks.c;
    let ok = e1 != e2
        && atomic_type(c, &[e1]).expect("in domain") == *ak
        && atomic_type(c, &[e2]).expect("in domain") == *al
        && c.has_fact(u, &[e1, e2])
        && c.has_fact(u, &[e2, e1])
        && (ak != al || indistinguishable(c, e1, e2));
    if ok {
        Ok((e1, e2))
    } else {
        Err(missing())
    }
}
