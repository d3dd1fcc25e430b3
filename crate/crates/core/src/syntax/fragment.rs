use std::fmt;

use serde::{Deserialize, Serialize};

use super::formula::Formula;
use super::Signature;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Fragment {
    Gf,
    Tgf,
    Gfu,
    GfTg,
    TgfTg,
    GfuTg,
}

impl Fragment {
    pub const ALL: [Fragment; 6] =
        [Fragment::Gf, Fragment::Tgf, Fragment::Gfu, Fragment::GfTg, Fragment::TgfTg, Fragment::GfuTg];

    pub fn name(self) -> &'static str {
        match self {
            Fragment::Gf => "GF",
            Fragment::Tgf => "TGF",
            Fragment::Gfu => "GFU",
            Fragment::GfTg => "GF+TG",
            Fragment::TgfTg => "TGF+TG",
            Fragment::GfuTg => "GFU+TG",
        }
    }

    fn rules(self) -> Rules {
        match self {
            Fragment::Gf | Fragment::Gfu => Rules { triguarded: false, transitive_guards: false },
            Fragment::Tgf => Rules { triguarded: true, transitive_guards: false },
            Fragment::GfTg | Fragment::GfuTg => Rules { triguarded: false, transitive_guards: true },
            Fragment::TgfTg => Rules { triguarded: true, transitive_guards: true },
        }
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A rule violated at the node reached by following child indices from the root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: Vec<usize>,
    pub rule: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentReport {
    pub entries: Vec<(Fragment, Vec<Violation>)>,
}

impl FragmentReport {
    pub fn violations(&self, frag: Fragment) -> &[Violation] {
        self.entries.iter().find(|(f, _)| *f == frag).map(|(_, v)| v.as_slice()).unwrap_or(&[])
    }

    pub fn is_member(&self, frag: Fragment) -> bool {
        self.violations(frag).is_empty()
    }

    pub fn members(&self) -> Vec<Fragment> {
        self.entries.iter().filter(|(_, v)| v.is_empty()).map(|(f, _)| *f).collect()
    }
}

#[derive(Clone, Copy)]
struct Rules {
    /// Equality-free except trivial guards; unguarded quantification over at most two free variables.
    triguarded: bool,
    /// Transitive symbols allowed, but only as guards.
    transitive_guards: bool,
}

/// Syntactic membership of `f` in each supported fragment. Violations are reported, not raised.
pub fn classify_fragment(f: &Formula, sig: &Signature) -> FragmentReport {
    let mut entries = Vec::new();
    for frag in Fragment::ALL {
        let mut v = Vec::new();
        if !f.is_sentence() {
            v.push(Violation { path: vec![], rule: "not a sentence".into() });
        }
        walk(f, sig, frag.rules(), false, &mut Vec::new(), &mut v);
        if matches!(frag, Fragment::Gfu | Fragment::GfuTg) && sig.universal().is_none() {
            v.push(Violation { path: vec![], rule: "no universal symbol declared".into() });
        }
        entries.push((frag, v));
    }
    FragmentReport { entries }
}

/// Whether `g` mentions every bound variable and every free variable of `rest`.
pub(crate) fn covers(g: &Formula, vars: &[String], rest: Option<&Formula>) -> bool {
    let gv = g.atom_vars();
    let mut need: Vec<String> = vars.to_vec();
    if let Some(r) = rest {
        need.extend(r.free_vars());
    }
    need.iter().all(|v| gv.contains(&v.as_str()))
}

fn walk(f: &Formula, sig: &Signature, rules: Rules, in_guard: bool, path: &mut Vec<usize>, out: &mut Vec<Violation>) {
    let mut report = |rule: &str, path: &Vec<usize>| out.push(Violation { path: path.clone(), rule: rule.into() });
    match f {
        Formula::True | Formula::False => {}
        Formula::Atom(r, _) => {
            if sig.is_transitive(r) {
                if !rules.transitive_guards {
                    report(&format!("transitive symbol {r} is not allowed"), path);
                } else if !in_guard {
                    report(&format!("transitive symbol {r} used outside a guard"), path);
                }
            }
        }
        Formula::Eq(..) => {
            if rules.triguarded && !(in_guard && f.is_trivial_guard()) {
                report("equality is only allowed as a trivial guard x = x", path);
            }
        }
        Formula::Not(_) | Formula::And(..) | Formula::Or(..) | Formula::Implies(..) | Formula::Iff(..) => {
            for (i, c) in f.children().into_iter().enumerate() {
                path.push(i);
                walk(c, sig, rules, false, path, out);
                path.pop();
            }
        }
        Formula::Forall(vars, body) | Formula::Exists(vars, body) => {
            path.push(0);
            if let Some((g, rest)) = f.guard_split().filter(|(g, rest)| covers(g, vars, *rest)) {
                match rest {
                    Some(r) => {
                        path.push(0);
                        walk(g, sig, rules, true, path, out);
                        path.pop();
                        path.push(1);
                        walk(r, sig, rules, false, path, out);
                        path.pop();
                    }
                    None => walk(g, sig, rules, true, path, out),
                }
            } else {
                let free = body.free_vars().len();
                if free > 2 || (free == 2 && !rules.triguarded) {
                    path.pop();
                    let rule = if rules.triguarded {
                        "unguarded quantifier over a subformula with more than two free variables"
                    } else {
                        "unguarded quantifier over a subformula with more than one free variable"
                    };
                    out.push(Violation { path: path.clone(), rule: rule.into() });
                    path.push(0);
                }
                walk(body, sig, rules, false, path, out);
            }
            path.pop();
        }
    }
}
