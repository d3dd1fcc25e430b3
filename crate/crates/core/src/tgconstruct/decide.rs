//! Bounded finite-satisfiability deciders for guarded sentences with transitive guards,
//! with and without a universal symbol.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{build_small_model, SmallModel};
use crate::finder::{find_model, realized_types, satisfies_mode, SearchConfig};
use crate::modelcheck::{evaluate, CheckMode};
use crate::normalform::{enhance_tg_normal_form, to_normal_form, NormalFormSentence};
use crate::saturation::{build_phi_star, saturate_with, SaturateOptions};
use crate::structures::{AtomicType, Structure};
use crate::syntax::{Formula, Signature};

/// Limits of the search. Candidates beyond them are not tried, so a negative answer means
/// only that nothing was found within them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinsatBudgets {
    /// Largest set of 1-types tried.
    pub alpha_max: usize,
    /// Largest set of 2-types tried.
    pub beta_max: usize,
    /// Domain bound for every model search.
    pub find_max: u32,
    /// Candidate type sets tried per normal-form disjunct.
    pub max_candidates: usize,
    /// Normal-form disjuncts tried.
    pub max_disjuncts: usize,
    /// Largest seed saturated into a U-biquitous certificate.
    pub saturate_max_seed: u32,
}

impl Default for FinsatBudgets {
    fn default() -> Self {
        FinsatBudgets { alpha_max: 6, beta_max: 12, find_max: 5, max_candidates: 64, max_disjuncts: 16, saturate_max_seed: 1 }
    }
}

/// How a certificate was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    /// Copies of the grid D joined by the circular connection.
    SmallModel,
    /// U-saturation of a seed model of the auxiliary sentence.
    Saturated,
    /// A U-biquitous model found directly by the bounded finder.
    FinderModel,
}

/// Outcome of a decider.
#[derive(Clone, Debug)]
pub struct FinsatReport {
    pub satisfiable: bool,
    /// A model of the input over its own signature, when one was built.
    pub certificate: Option<Structure>,
    pub kind: Option<CertificateKind>,
    /// Whether the certificate satisfies the input under the side conditions of the logic.
    pub verified: bool,
    pub disjuncts: usize,
    pub candidates: usize,
    pub note: Option<String>,
}

impl FinsatReport {
    fn negative(disjuncts: usize, candidates: usize, note: Option<String>) -> FinsatReport {
        FinsatReport { satisfiable: false, certificate: None, kind: None, verified: false, disjuncts, candidates, note }
    }
}

/// Calls `f` on the `k`-element subsets of `0..n` in lexicographic order until it returns false.
fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if k > n {
        return true;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return false;
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else { return true };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

type Candidate = (BTreeSet<AtomicType>, BTreeSet<AtomicType>);

/// Candidate pairs of type sets for an enhanced sentence: first the types of a model found
/// by the finder, then subsets of the types seen in models with and without the
/// transitivity condition, by increasing number of 1-types, then of 2-types.
fn candidates(nf: &NormalFormSentence, b: &FinsatBudgets) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::new();
    let mut alpha_pool = BTreeSet::new();
    let mut beta_pool = BTreeSet::new();
    for transitive in [true, false] {
        let cfg = SearchConfig::new(b.find_max).transitive(transitive);
        if let Some(a) = find_model(nf, &cfg) {
            let (alpha, beta) = realized_types(&a);
            if transitive && alpha.len() <= b.alpha_max && beta.len() <= b.beta_max {
                out.push((alpha.clone(), beta.clone()));
            }
            alpha_pool.extend(alpha);
            beta_pool.extend(beta);
        }
    }
    let alphas: Vec<AtomicType> = alpha_pool.into_iter().collect();
    let betas: Vec<AtomicType> = beta_pool.into_iter().collect();
    for ka in 1..=b.alpha_max.min(alphas.len()) {
        let go_on = for_each_subset(alphas.len(), ka, &mut |ia| {
            let alpha: BTreeSet<AtomicType> = ia.iter().map(|&i| alphas[i].clone()).collect();
            let fitting: Vec<&AtomicType> =
                betas.iter().filter(|t| alpha.contains(&t.restrict_to_var(0)) && alpha.contains(&t.restrict_to_var(1))).collect();
            for kb in 0..=b.beta_max.min(fitting.len()) {
                let go_on = for_each_subset(fitting.len(), kb, &mut |ib| {
                    let beta: BTreeSet<AtomicType> = ib.iter().map(|&i| fitting[i].clone()).collect();
                    let c = (alpha.clone(), beta);
                    if !out.contains(&c) {
                        out.push(c);
                    }
                    out.len() < b.max_candidates
                });
                if !go_on {
                    return false;
                }
            }
            true
        });
        if !go_on {
            break;
        }
    }
    out.truncate(b.max_candidates);
    out
}

/// Tries the candidates of an enhanced sentence in order; the first small model built wins.
fn search_small_model(nf: &NormalFormSentence, b: &FinsatBudgets, tried: &mut usize) -> Option<SmallModel> {
    let cfg = SearchConfig::new(b.find_max);
    for (alpha, beta) in candidates(nf, b) {
        *tried += 1;
        if let Ok(m) = build_small_model(nf, &alpha, &beta, &cfg) {
            return Some(m);
        }
    }
    None
}

fn certify(model: &Structure, f: &Formula, sig: &Signature, mode: CheckMode) -> Option<Structure> {
    let cert = model.reduct(Arc::new(sig.clone())).ok()?;
    let ok = evaluate(&cert, f, &Default::default()).unwrap_or(false) && satisfies_mode(&cert, mode);
    ok.then_some(cert)
}

/// Finite satisfiability of a guarded sentence with transitive guards: true when, for some
/// normal-form disjunct, some candidate type sets give models of the horizontal and the
/// vertical sentence within the bound and the resulting small model is built. The
/// certificate is that small model restricted to the input signature.
pub fn decide_finsat_gftg(f: &Formula, sig: &Signature, b: &FinsatBudgets) -> FinsatReport {
    let nfs = match to_normal_form(f, sig) {
        Ok(n) => n,
        Err(e) => return FinsatReport::negative(0, 0, Some(e.to_string())),
    };
    let mode = CheckMode { ubiquitous: false, transitive: true };
    let (mut disjuncts, mut tried) = (0, 0);
    for nf0 in nfs.take(b.max_disjuncts) {
        disjuncts += 1;
        let nf = enhance_tg_normal_form(&nf0);
        if let Some(m) = search_small_model(&nf, b, &mut tried) {
            let cert = certify(&m.model, f, sig, mode);
            return FinsatReport {
                satisfiable: true,
                verified: cert.is_some(),
                certificate: cert,
                kind: Some(CertificateKind::SmallModel),
                disjuncts,
                candidates: tried,
                note: None,
            };
        }
    }
    FinsatReport::negative(disjuncts, tried, None)
}

/// Sets of 1-types to try for a sentence with a universal symbol: those of a U-biquitous
/// model found by the finder, then subsets of the types seen in models without U-biquity.
fn alpha_candidates(nf: &NormalFormSentence, b: &FinsatBudgets) -> (Vec<BTreeSet<AtomicType>>, Option<Structure>) {
    let base = SearchConfig::new(b.find_max).transitive(true);
    let direct = find_model(nf, &base.clone().ubiquitous(true));
    let mut out = Vec::new();
    let mut pool = BTreeSet::new();
    if let Some(a) = &direct {
        let alpha = realized_types(a).0;
        pool.extend(alpha.iter().cloned());
        if alpha.len() <= b.alpha_max {
            out.push(alpha);
        }
    }
    if let Some(a) = find_model(nf, &base) {
        pool.extend(realized_types(&a).0);
    }
    let pool: Vec<AtomicType> = pool.into_iter().collect();
    for k in 1..=b.alpha_max.min(pool.len()) {
        let go_on = for_each_subset(pool.len(), k, &mut |idx| {
            let alpha: BTreeSet<AtomicType> = idx.iter().map(|&i| pool[i].clone()).collect();
            if !out.contains(&alpha) {
                out.push(alpha);
            }
            out.len() < b.max_candidates
        });
        if !go_on {
            break;
        }
    }
    (out, direct)
}

/// Finite satisfiability of a guarded sentence with a universal symbol and transitive
/// guards: true when, for some normal-form disjunct and some candidate set of 1-types, the
/// auxiliary sentence has a small model as a sentence with transitive guards. The
/// certificate is a U-biquitous model: the saturation of a smallest model of the auxiliary
/// sentence when it is within the saturation budget, otherwise a U-biquitous finder model
/// if one was found.
pub fn decide_finsat_gfutg(f: &Formula, sig: &Signature, b: &FinsatBudgets) -> FinsatReport {
    let nfs = match to_normal_form(f, sig) {
        Ok(n) => n,
        Err(e) => return FinsatReport::negative(0, 0, Some(e.to_string())),
    };
    let mode = CheckMode { ubiquitous: true, transitive: true };
    let (mut disjuncts, mut tried) = (0, 0);
    for nf in nfs.take(b.max_disjuncts) {
        disjuncts += 1;
        let (alphas, direct) = alpha_candidates(&nf, b);
        for alpha in alphas {
            tried += 1;
            let Ok(star) = build_phi_star(&nf, &alpha, true) else { continue };
            let enhanced = enhance_tg_normal_form(&star);
            let mut inner = 0;
            if search_small_model(&enhanced, b, &mut inner).is_none() {
                continue;
            }
            let mut report = FinsatReport {
                satisfiable: true,
                certificate: None,
                kind: None,
                verified: false,
                disjuncts,
                candidates: tried,
                note: None,
            };
            let seed = find_model(&star, &SearchConfig::new(b.find_max).transitive(true));
            let saturated = seed.filter(|s| s.size() <= b.saturate_max_seed).and_then(|s| {
                let opts = SaturateOptions { tg: true, check_every_step: false };
                saturate_with(&s, &star, opts, &mut |_| {}).ok().map(|st| st.into_current())
            });
            let found = match saturated {
                Some(m) => Some((m, CertificateKind::Saturated)),
                None => direct.clone().map(|m| (m, CertificateKind::FinderModel)),
            };
            match found {
                Some((m, kind)) => {
                    report.certificate = certify(&m, f, sig, mode);
                    report.verified = report.certificate.is_some();
                    report.kind = Some(kind);
                }
                None => report.note = Some("no U-biquitous certificate within the budgets".into()),
            }
            return report;
        }
    }
    FinsatReport::negative(disjuncts, tried, None)
}
