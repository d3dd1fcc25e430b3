use std::collections::BTreeSet;

use super::formula::{fresh_var, Formula, Term};
use super::fragment::{classify_fragment, covers, Fragment};
use super::{Signature, SyntaxError};

/// Rewrites a triguarded sentence into GF with the universal role: every
/// unguarded quantifier gets the guard `v = v` (one free variable) or `U(..)`
/// (two free variables). The result is equivalent over structures where `U`
/// is interpreted as the full relation.
pub fn tgf_to_gfu(f: &Formula, sig: &Signature) -> Result<Formula, SyntaxError> {
    let report = classify_fragment(f, sig);
    let (source, target) = if sig.transitive().is_empty() {
        (Fragment::Tgf, Fragment::Gfu)
    } else {
        (Fragment::TgfTg, Fragment::GfuTg)
    };
    if let Some(v) = report.violations(source).first() {
        return Err(SyntaxError::Fragment(format!("{} at {:?}", v.rule, v.path)));
    }
    let u = sig
        .universal()
        .ok_or_else(|| SyntaxError::Signature("a universal symbol must be declared".into()))?;
    if report.is_member(target) {
        return Ok(f.clone());
    }
    Ok(add_guards(f, u))
}

fn add_guards(f: &Formula, u: &str) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(..) | Formula::Eq(..) => f.clone(),
        Formula::Not(a) => Formula::not(add_guards(a, u)),
        Formula::And(a, b) => Formula::and(add_guards(a, u), add_guards(b, u)),
        Formula::Or(a, b) => Formula::or(add_guards(a, u), add_guards(b, u)),
        Formula::Implies(a, b) => Formula::implies(add_guards(a, u), add_guards(b, u)),
        Formula::Iff(a, b) => Formula::iff(add_guards(a, u), add_guards(b, u)),
        Formula::Forall(vars, body) | Formula::Exists(vars, body) => {
            let exists = matches!(f, Formula::Exists(..));
            if let Some((g, rest)) = f.guard_split().filter(|(g, rest)| covers(g, vars, *rest)) {
                let inner = match rest {
                    Some(r) if exists => Formula::and(g.clone(), add_guards(r, u)),
                    Some(r) => Formula::implies(g.clone(), add_guards(r, u)),
                    None => g.clone(),
                };
                return rebuild(exists, vars.clone(), inner);
            }
            let body = add_guards(body, u);
            let free = body.free_vars();
            let vars: Vec<String> = vars.iter().filter(|v| free.contains(*v)).cloned().collect();
            if vars.is_empty() {
                return body;
            }
            let guard = if free.len() == 1 {
                Formula::trivial_guard(&vars[0])
            } else {
                let mut args: Vec<Term> = vars.iter().map(|v| Term::var(v)).collect();
                args.extend(free.iter().filter(|v| !vars.contains(v)).map(|v| Term::var(v)));
                Formula::Atom(u.to_string(), args)
            };
            let inner = if exists { Formula::and(guard, body) } else { Formula::implies(guard, body) };
            rebuild(exists, vars, inner)
        }
    }
}

fn rebuild(exists: bool, vars: Vec<String>, body: Formula) -> Formula {
    if exists {
        Formula::exists(vars, body)
    } else {
        Formula::forall(vars, body)
    }
}

/// Expresses a GF sentence with the universal role in the triguarded fragment
/// by conjoining the axiom that `U` relates every pair of elements.
/// Equalities other than trivial guards cannot be expressed and are rejected.
pub fn gfu_to_tgf(f: &Formula, sig: &Signature) -> Result<Formula, SyntaxError> {
    let report = classify_fragment(f, sig);
    let (source, target) = if sig.transitive().is_empty() {
        (Fragment::Gfu, Fragment::Tgf)
    } else {
        (Fragment::GfuTg, Fragment::TgfTg)
    };
    if let Some(v) = report.violations(source).first() {
        return Err(SyntaxError::Fragment(format!("{} at {:?}", v.rule, v.path)));
    }
    let u = sig.universal().expect("checked by the fragment test");
    let mut used: BTreeSet<String> = f.all_vars();
    let a = fresh_var("a", &mut used);
    let b = fresh_var("b", &mut used);
    let axiom = Formula::forall(vec![a.clone(), b.clone()], Formula::atom(u, &[&a, &b]));
    let out = Formula::and(f.clone(), axiom);
    let report = classify_fragment(&out, sig);
    if let Some(v) = report.violations(target).first() {
        return Err(SyntaxError::Fragment(format!("{} at {:?}", v.rule, v.path)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{parse_formula, print_formula};
    use super::*;

    fn sig() -> Signature {
        Signature::parse_header("rel P/1; rel Q/1; rel R/3; rel S/2; universal U;").unwrap()
    }

    #[test]
    fn guards_two_variable_quantifier_with_u() {
        let s = sig();
        let f = parse_formula("forall x y (P(x) & Q(y) -> exists z R(x,y,z))", &s).unwrap();
        let g = tgf_to_gfu(&f, &s).unwrap();
        assert_eq!(print_formula(&g), "forall x y (U(x,y) -> ((P(x) & Q(y)) -> exists z R(x,y,z)))");
        assert!(classify_fragment(&g, &s).is_member(Fragment::Gfu));
    }

    #[test]
    fn guards_free_variable_after_bound_ones() {
        let s = sig();
        let f = parse_formula("forall x exists y (S(x,y) | P(y) & Q(x))", &s).unwrap();
        let g = tgf_to_gfu(&f, &s).unwrap();
        assert_eq!(
            print_formula(&g),
            "forall x (x = x -> exists y (U(y,x) & (S(x,y) | (P(y) & Q(x)))))"
        );
    }

    #[test]
    fn gf_input_is_unchanged() {
        let s = sig();
        let f = parse_formula("forall x (P(x) -> exists y S(x,y))", &s).unwrap();
        assert_eq!(tgf_to_gfu(&f, &s).unwrap(), f);
    }

    #[test]
    fn vacuous_variables_are_dropped() {
        let s = sig();
        let f = parse_formula("forall x y z (P(x) | Q(y))", &s).unwrap();
        let g = tgf_to_gfu(&f, &s).unwrap();
        assert_eq!(print_formula(&g), "forall x y (U(x,y) -> (P(x) | Q(y)))");
    }

    #[test]
    fn rejects_non_tgf_input() {
        let s = sig();
        let f = parse_formula("forall x y z R(x,y,z)", &s).unwrap();
        assert!(tgf_to_gfu(&f, &s).is_err());
        let s2 = Signature::parse_header("rel P/1;").unwrap();
        let f = parse_formula("forall x P(x)", &s2).unwrap();
        assert!(tgf_to_gfu(&f, &s2).is_err());
    }

    #[test]
    fn gfu_to_tgf_adds_universal_axiom() {
        let s = sig();
        let f = parse_formula("forall x y (U(x,y) -> (P(x) -> Q(y)))", &s).unwrap();
        let g = gfu_to_tgf(&f, &s).unwrap();
        assert!(classify_fragment(&g, &s).is_member(Fragment::Tgf));
        assert!(print_formula(&g).ends_with("forall a b U(a,b))"));
        let f = parse_formula("forall x y (S(x,y) -> !(x = y))", &s).unwrap();
        assert!(gfu_to_tgf(&f, &s).is_err());
    }
}
