use std::fmt::{self, Write};

use super::formula::{Formula, Term};

/// Canonical, fully parenthesised text of a formula, accepted back by the parser.
pub fn print_formula(f: &Formula) -> String {
    let mut s = String::new();
    write_formula(&mut s, f).expect("writing to a String");
    s
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn write_formula(out: &mut impl Write, f: &Formula) -> fmt::Result {
    match f {
        Formula::True => out.write_str("true"),
        Formula::False => out.write_str("false"),
        Formula::Atom(r, ts) => {
            write!(out, "{r}(")?;
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    out.write_char(',')?;
                }
                write!(out, "{t}")?;
            }
            out.write_char(')')
        }
        Formula::Eq(a, b) => write!(out, "{a} = {b}"),
        Formula::Not(a) => {
            out.write_char('!')?;
            if matches!(a.as_ref(), Formula::Eq(..)) {
                out.write_char('(')?;
                write_formula(out, a)?;
                out.write_char(')')
            } else {
                write_formula(out, a)
            }
        }
        Formula::And(a, b) => binary(out, a, "&", b),
        Formula::Or(a, b) => binary(out, a, "|", b),
        Formula::Implies(a, b) => binary(out, a, "->", b),
        Formula::Iff(a, b) => binary(out, a, "<->", b),
        Formula::Forall(vs, body) => quantifier(out, "forall", vs, body),
        Formula::Exists(vs, body) => quantifier(out, "exists", vs, body),
    }
}

fn binary(out: &mut impl Write, a: &Formula, op: &str, b: &Formula) -> fmt::Result {
    out.write_char('(')?;
    write_formula(out, a)?;
    write!(out, " {op} ")?;
    write_formula(out, b)?;
    out.write_char(')')
}

fn quantifier(out: &mut impl Write, kw: &str, vs: &[String], body: &Formula) -> fmt::Result {
    out.write_str(kw)?;
    for v in vs {
        write!(out, " {v}")?;
    }
    out.write_char(' ')?;
    write_formula(out, body)
}

#[cfg(test)]
mod tests {
    use super::super::{parse_formula, Signature};
    use super::*;
    use proptest::prelude::*;

    fn sig() -> Signature {
        Signature::parse_header("rel P/1; rel R/2; rel S/3; const c; universal U; transitive T;").unwrap()
    }

    #[test]
    fn conjunction_text() {
        let f = Formula::and(Formula::atom("P", &["x"]), Formula::atom("Q", &["x"]));
        assert_eq!(print_formula(&f), "(P(x) & Q(x))");
    }

    #[test]
    fn guarded_example_roundtrips() {
        let s = sig();
        let text = "forall x y (U(x,y) -> (P(x) & P(y) -> exists z S(x,y,z)))";
        let f = parse_formula(text, &s).unwrap();
        assert_eq!(print_formula(&f), "forall x y (U(x,y) -> ((P(x) & P(y)) -> exists z S(x,y,z)))");
        assert_eq!(parse_formula(&print_formula(&f), &s).unwrap(), f);
    }

    #[test]
    fn equality_forms() {
        let s = sig();
        for text in ["forall x x = x", "exists x y !(x = y)", "forall x (x = x -> P(x))", "!(c = x)"] {
            let f = parse_formula(text, &s).unwrap();
            assert_eq!(parse_formula(&print_formula(&f), &s).unwrap(), f, "{text}");
        }
    }

    const VARS: [&str; 3] = ["x", "y", "z"];

    fn term() -> impl Strategy<Value = Term> {
        prop_oneof![
            5 => (0..3usize).prop_map(|i| Term::var(VARS[i])),
            1 => Just(Term::Const("c".into())),
        ]
    }

    fn leaf() -> impl Strategy<Value = Formula> {
        prop_oneof![
            Just(Formula::True),
            Just(Formula::False),
            term().prop_map(|t| Formula::Atom("P".into(), vec![t])),
            (term(), term()).prop_map(|(a, b)| Formula::Atom("R".into(), vec![a, b])),
            (term(), term(), term()).prop_map(|(a, b, c)| Formula::Atom("S".into(), vec![a, b, c])),
            (term(), term()).prop_map(|(a, b)| Formula::Eq(a, b)),
        ]
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        leaf().prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::iff(a, b)),
                (proptest::sample::subsequence(VARS.to_vec(), 1..=2), inner.clone())
                    .prop_map(|(vs, b)| Formula::Forall(vs.iter().map(|v| v.to_string()).collect(), Box::new(b))),
                (proptest::sample::subsequence(VARS.to_vec(), 1..=2), inner)
                    .prop_map(|(vs, b)| Formula::Exists(vs.iter().map(|v| v.to_string()).collect(), Box::new(b))),
            ]
        })
    }

    /// Drops quantified variables already bound by an enclosing quantifier,
    /// so the parser has nothing to rename.
    fn unshadow(f: &Formula, bound: &mut Vec<String>) -> Formula {
        match f {
            Formula::Forall(vs, b) | Formula::Exists(vs, b) => {
                let keep: Vec<String> = vs.iter().filter(|v| !bound.contains(v)).cloned().collect();
                let before = bound.len();
                bound.extend(keep.iter().cloned());
                let body = unshadow(b, bound);
                bound.truncate(before);
                if matches!(f, Formula::Forall(..)) {
                    Formula::forall(keep, body)
                } else {
                    Formula::exists(keep, body)
                }
            }
            Formula::Not(a) => Formula::not(unshadow(a, bound)),
            Formula::And(a, b) => Formula::and(unshadow(a, bound), unshadow(b, bound)),
            Formula::Or(a, b) => Formula::or(unshadow(a, bound), unshadow(b, bound)),
            Formula::Implies(a, b) => Formula::implies(unshadow(a, bound), unshadow(b, bound)),
            Formula::Iff(a, b) => Formula::iff(unshadow(a, bound), unshadow(b, bound)),
            other => other.clone(),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn parse_print_roundtrip(f in arb_formula()) {
            let f = unshadow(&f, &mut Vec::new());
            let back = parse_formula(&print_formula(&f), &sig()).unwrap();
            prop_assert_eq!(back, f);
        }

        #[test]
        fn shadowing_input_is_stable_after_one_parse(f in arb_formula()) {
            let s = sig();
            let once = parse_formula(&print_formula(&f), &s).unwrap();
            let twice = parse_formula(&print_formula(&once), &s).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
