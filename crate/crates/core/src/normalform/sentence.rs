use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::{Formula, Signature};

/// Role of a ∀∃-conjunct in the transitive-guard normal form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConjunctClass {
    /// Untagged conjunct of the plain normal form.
    Plain,
    /// Existential guard over a non-transitive symbol.
    Ntr,
    /// Existential guard over a transitive symbol and a one-variable outer guard.
    Tr,
}

/// `forall xs (guard -> exists ys (wguard & matrix))`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ForallExists {
    pub xs: Vec<String>,
    pub guard: Formula,
    pub ys: Vec<String>,
    pub wguard: Formula,
    pub matrix: Formula,
    pub class: ConjunctClass,
}

/// `forall xs (guard -> matrix)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ForallConjunct {
    pub xs: Vec<String>,
    pub guard: Formula,
    pub matrix: Formula,
}

/// `exists ys (guard & matrix)`, a purely existential conjunct.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExistsConjunct {
    pub ys: Vec<String>,
    pub guard: Formula,
    pub matrix: Formula,
}

/// A conjunction of ∀∃-conjuncts, ∀-conjuncts and (occasionally) purely existential
/// conjuncts, over `signature`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalFormSentence {
    pub signature: Signature,
    pub forall_exists: Vec<ForallExists>,
    pub foralls: Vec<ForallConjunct>,
    pub exists: Vec<ExistsConjunct>,
}

impl ForallExists {
    pub fn to_formula(&self) -> Formula {
        let inner = Formula::exists(self.ys.clone(), Formula::and(self.wguard.clone(), self.matrix.clone()));
        Formula::forall(self.xs.clone(), Formula::implies(self.guard.clone(), inner))
    }
}

impl ForallConjunct {
    pub fn to_formula(&self) -> Formula {
        Formula::forall(self.xs.clone(), Formula::implies(self.guard.clone(), self.matrix.clone()))
    }
}

impl ExistsConjunct {
    pub fn to_formula(&self) -> Formula {
        Formula::exists(self.ys.clone(), Formula::and(self.guard.clone(), self.matrix.clone()))
    }
}

fn var_set(vs: &[String]) -> BTreeSet<String> {
    vs.iter().cloned().collect()
}

fn guard_vars(g: &Formula) -> BTreeSet<String> {
    g.atom_vars().into_iter().map(String::from).collect()
}

fn check_guard(g: &Formula, what: &str) -> Result<(), String> {
    if g.is_atomic() {
        Ok(())
    } else {
        Err(format!("{what} `{g}` is not atomic"))
    }
}

impl NormalFormSentence {
    pub fn new(signature: Signature) -> Self {
        NormalFormSentence { signature, forall_exists: Vec::new(), foralls: Vec::new(), exists: Vec::new() }
    }

    pub fn num_conjuncts(&self) -> usize {
        self.forall_exists.len() + self.foralls.len() + self.exists.len()
    }

    /// The conjuncts as formulas: ∀∃-conjuncts, then ∀-conjuncts, then existential ones.
    pub fn conjunct_formulas(&self) -> Vec<Formula> {
        let mut out: Vec<Formula> = self.forall_exists.iter().map(ForallExists::to_formula).collect();
        out.extend(self.foralls.iter().map(ForallConjunct::to_formula));
        out.extend(self.exists.iter().map(ExistsConjunct::to_formula));
        out
    }

    pub fn to_formula(&self) -> Formula {
        Formula::and_all(self.conjunct_formulas())
    }

    pub fn size(&self) -> usize {
        self.conjunct_formulas().iter().map(Formula::size).sum()
    }

    /// Recognises a conjunction of closed conjuncts of the normal-form shapes.
    /// Purely existential conjuncts are accepted only if `allow_exists` is set.
    pub fn from_formula(f: &Formula, sig: &Signature, allow_exists: bool) -> Option<NormalFormSentence> {
        let mut nf = NormalFormSentence::new(sig.clone());
        for c in f.conjuncts() {
            match c {
                Formula::True => {}
                Formula::Forall(xs, body) => {
                    let Formula::Implies(g, rest) = body.as_ref() else { return None };
                    match rest.as_ref() {
                        Formula::Exists(ys, inner) => {
                            let (wg, m) = match inner.as_ref() {
                                Formula::And(wg, m) if wg.is_atomic() => ((**wg).clone(), (**m).clone()),
                                wg if wg.is_atomic() => (wg.clone(), Formula::True),
                                _ => return None,
                            };
                            nf.forall_exists.push(ForallExists {
                                xs: xs.clone(),
                                guard: (**g).clone(),
                                ys: ys.clone(),
                                wguard: wg,
                                matrix: m,
                                class: ConjunctClass::Plain,
                            });
                        }
                        m => nf.foralls.push(ForallConjunct { xs: xs.clone(), guard: (**g).clone(), matrix: m.clone() }),
                    }
                }
                Formula::Exists(ys, body) if allow_exists => {
                    let (g, m) = match body.as_ref() {
                        Formula::And(g, m) if g.is_atomic() => ((**g).clone(), (**m).clone()),
                        g if g.is_atomic() => (g.clone(), Formula::True),
                        _ => return None,
                    };
                    nf.exists.push(ExistsConjunct { ys: ys.clone(), guard: g, matrix: m });
                }
                _ => return None,
            }
        }
        nf.validate().ok().map(|_| nf)
    }

    /// Checks the shape invariants: atomic guards covering the variables they must,
    /// quantifier-free matrices, closed conjuncts.
    pub fn validate(&self) -> Result<(), String> {
        for (i, c) in self.forall_exists.iter().enumerate() {
            let at = |m: String| format!("forall-exists conjunct {i}: {m}");
            check_guard(&c.guard, "guard").map_err(at)?;
            check_guard(&c.wguard, "existential guard").map_err(at)?;
            if !c.matrix.is_quantifier_free() {
                return Err(at("matrix has quantifiers".into()));
            }
            let xs = var_set(&c.xs);
            if guard_vars(&c.guard) != xs || xs.len() != c.xs.len() {
                return Err(at("guard variables differ from the universal variables".into()));
            }
            let mut all = xs.clone();
            all.extend(c.ys.iter().cloned());
            if all.len() != c.xs.len() + c.ys.len() {
                return Err(at("a variable is bound twice".into()));
            }
            let wv = guard_vars(&c.wguard);
            if !c.ys.iter().all(|y| wv.contains(y)) || !wv.is_subset(&all) {
                return Err(at("existential guard does not match the bound variables".into()));
            }
            if !c.matrix.free_vars().is_subset(&wv) {
                return Err(at("matrix has variables outside the existential guard".into()));
            }
        }
        for (j, c) in self.foralls.iter().enumerate() {
            let at = |m: String| format!("forall conjunct {j}: {m}");
            check_guard(&c.guard, "guard").map_err(at)?;
            if !c.matrix.is_quantifier_free() {
                return Err(at("matrix has quantifiers".into()));
            }
            let xs = var_set(&c.xs);
            if guard_vars(&c.guard) != xs || xs.len() != c.xs.len() {
                return Err(at("guard variables differ from the universal variables".into()));
            }
            if !c.matrix.free_vars().is_subset(&xs) {
                return Err(at("matrix has free variables outside the guard".into()));
            }
        }
        for (k, c) in self.exists.iter().enumerate() {
            let at = |m: String| format!("existential conjunct {k}: {m}");
            check_guard(&c.guard, "guard").map_err(at)?;
            if !c.matrix.is_quantifier_free() {
                return Err(at("matrix has quantifiers".into()));
            }
            let ys = var_set(&c.ys);
            if guard_vars(&c.guard) != ys || !c.matrix.free_vars().is_subset(&ys) {
                return Err(at("guard does not cover the variables".into()));
            }
        }
        for (name, arity) in self.to_formula().relations() {
            if self.signature.arity(&name) != Some(arity) {
                return Err(format!("symbol {name}/{arity} is not in the signature"));
            }
        }
        Ok(())
    }

    /// Checks the transitive-guard shape on top of [`Self::validate`]: tagged ∀∃-conjuncts,
    /// non-transitive outer guards, one-variable outer guards and binary transitive existential
    /// guards for tr-conjuncts, no transitive symbols in matrices, and the Aux closure conjuncts.
    pub fn validate_tg(&self) -> Result<(), String> {
        self.validate()?;
        let sig = &self.signature;
        let is_tr = |g: &Formula| matches!(g, Formula::Atom(r, _) if sig.is_transitive(r));
        let mentions_tr = |m: &Formula| m.relations().iter().any(|(r, _)| sig.is_transitive(r));
        for (i, c) in self.forall_exists.iter().enumerate() {
            let at = |m: &str| format!("forall-exists conjunct {i}: {m}");
            if is_tr(&c.guard) {
                return Err(at("transitive outer guard"));
            }
            if mentions_tr(&c.matrix) {
                return Err(at("transitive symbol in the matrix"));
            }
            match c.class {
                ConjunctClass::Plain => return Err(at("missing ntr/tr tag")),
                ConjunctClass::Ntr if is_tr(&c.wguard) => return Err(at("ntr conjunct with a transitive guard")),
                ConjunctClass::Tr => {
                    if !is_tr(&c.wguard) {
                        return Err(at("tr conjunct without a transitive guard"));
                    }
                    if c.xs.len() != 1 || c.ys.len() != 1 {
                        return Err(at("tr conjunct must have the shape forall x (g(x) -> exists y ...)"));
                    }
                }
                _ => {}
            }
        }
        for (j, c) in self.foralls.iter().enumerate() {
            if mentions_tr(&c.matrix) {
                return Err(format!("forall conjunct {j}: transitive symbol in the matrix"));
            }
        }
        for k in &self.exists {
            if mentions_tr(&k.matrix) {
                return Err("existential conjunct: transitive symbol in the matrix".into());
            }
        }
        let aux = sig.aux().ok_or("no Aux symbol declared")?;
        for (_, name, arity) in sig.relations() {
            let expected = aux_closure_conjunct(name, arity, aux);
            if !self.foralls.contains(&expected) {
                return Err(format!("missing Aux closure conjunct for {name}"));
            }
        }
        Ok(())
    }
}

/// `forall x1..xk (P(x1..xk) -> Aux(xi,xj) for all i, j)`.
pub fn aux_closure_conjunct(rel: &str, arity: usize, aux: &str) -> ForallConjunct {
    let xs: Vec<String> = (1..=arity).map(|i| format!("x{i}")).collect();
    let refs: Vec<&str> = xs.iter().map(String::as_str).collect();
    let mut parts = Vec::new();
    for a in &refs {
        for b in &refs {
            parts.push(Formula::atom(aux, &[a, b]));
        }
    }
    ForallConjunct { xs: xs.clone(), guard: Formula::atom(rel, &refs), matrix: Formula::and_all(parts) }
}

impl fmt::Display for NormalFormSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.conjunct_formulas() {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}
