use std::collections::BTreeMap;

use super::CheckError;
use crate::structures::{Elem, Structure};
use crate::syntax::{Formula, RelId, Signature, Term};

/// A term after compilation: a variable slot or a constant index.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Arg {
    Slot(u16),
    Const(u16),
}

/// Guard argument: already known when the guard is matched, or bound by the match.
#[derive(Clone, Copy, Debug)]
pub(crate) enum GArg {
    Known(Arg),
    Bind(u16),
}

#[derive(Clone, Debug)]
pub(crate) enum Guard {
    Rel(RelId, Vec<GArg>),
    Eq(GArg, GArg),
}

#[derive(Clone, Debug)]
pub(crate) enum Expr {
    Const(bool),
    Atom(RelId, Vec<Arg>),
    Eq(Arg, Arg),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Iff(Box<Expr>, Box<Expr>),
    Quant {
        exists: bool,
        /// Bound by matching the guard; `None` means every slot ranges over the domain.
        guard: Option<Guard>,
        /// Quantified slots the guard does not bind.
        free_slots: Vec<u16>,
        /// `None` for `exists xs guard`.
        body: Option<Box<Expr>>,
    },
}

#[inline]
pub(crate) fn value(a: Arg, s: &Structure, env: &[Elem]) -> Elem {
    match a {
        Arg::Slot(i) => env[i as usize],
        Arg::Const(c) => s.constants()[c as usize].expect("constants are interpreted"),
    }
}

pub(crate) struct Compiler<'a> {
    sig: &'a Signature,
    scope: Vec<(String, u16)>,
    pub(crate) nslots: u16,
}

impl<'a> Compiler<'a> {
    pub(crate) fn new(sig: &'a Signature) -> Self {
        Compiler { sig, scope: Vec::new(), nslots: 0 }
    }

    /// Allocates slots for `vars` and brings them into scope.
    pub(crate) fn bind(&mut self, vars: &[String]) -> Vec<u16> {
        vars.iter()
            .map(|v| {
                let s = self.nslots;
                self.nslots += 1;
                self.scope.push((v.clone(), s));
                s
            })
            .collect()
    }

    fn unbind(&mut self, k: usize) {
        self.scope.truncate(self.scope.len() - k);
    }

    fn term(&self, t: &Term) -> Result<Arg, CheckError> {
        match t {
            Term::Var(v) => self
                .scope
                .iter()
                .rev()
                .find(|(n, _)| n == v)
                .map(|(_, s)| Arg::Slot(*s))
                .ok_or_else(|| CheckError::Unassigned(v.clone())),
            Term::Const(c) => self
                .sig
                .const_index(c)
                .map(|i| Arg::Const(i as u16))
                .ok_or_else(|| CheckError::Unknown(c.clone())),
        }
    }

    fn rel(&self, r: &str, n: usize) -> Result<RelId, CheckError> {
        let id = self.sig.rel_id(r).ok_or_else(|| CheckError::Unknown(r.to_string()))?;
        if self.sig.rel_arity(id) != n {
            return Err(CheckError::Unknown(format!("{r}/{n}")));
        }
        Ok(id)
    }

    /// Compiles an atomic guard; arguments that are slots in `binding` are bound by the match.
    pub(crate) fn guard(&self, g: &Formula, binding: &[u16]) -> Result<Guard, CheckError> {
        let garg = |t: &Term| -> Result<GArg, CheckError> {
            Ok(match self.term(t)? {
                Arg::Slot(s) if binding.contains(&s) => GArg::Bind(s),
                a => GArg::Known(a),
            })
        };
        match g {
            Formula::Atom(r, ts) => Ok(Guard::Rel(self.rel(r, ts.len())?, ts.iter().map(garg).collect::<Result<_, _>>()?)),
            Formula::Eq(a, b) => Ok(Guard::Eq(garg(a)?, garg(b)?)),
            _ => unreachable!("guards are atomic"),
        }
    }

    pub(crate) fn expr(&mut self, f: &Formula) -> Result<Expr, CheckError> {
        let bin = |c: &mut Self, a: &Formula, b: &Formula| -> Result<(Box<Expr>, Box<Expr>), CheckError> {
            Ok((Box::new(c.expr(a)?), Box::new(c.expr(b)?)))
        };
        Ok(match f {
            Formula::True => Expr::Const(true),
            Formula::False => Expr::Const(false),
            Formula::Atom(r, ts) => {
                Expr::Atom(self.rel(r, ts.len())?, ts.iter().map(|t| self.term(t)).collect::<Result<_, _>>()?)
            }
            Formula::Eq(a, b) => Expr::Eq(self.term(a)?, self.term(b)?),
            Formula::Not(a) => Expr::Not(Box::new(self.expr(a)?)),
            Formula::And(a, b) => {
                let (a, b) = bin(self, a, b)?;
                Expr::And(a, b)
            }
            Formula::Or(a, b) => {
                let (a, b) = bin(self, a, b)?;
                Expr::Or(a, b)
            }
            Formula::Implies(a, b) => {
                let (a, b) = bin(self, a, b)?;
                Expr::Implies(a, b)
            }
            Formula::Iff(a, b) => {
                let (a, b) = bin(self, a, b)?;
                Expr::Iff(a, b)
            }
            Formula::Forall(vars, body) | Formula::Exists(vars, body) => {
                let exists = matches!(f, Formula::Exists(..));
                let slots = self.bind(vars);
                let out = match f.guard_split() {
                    Some((g, rest)) => {
                        let guard = self.guard(g, &slots)?;
                        let gv = g.atom_vars();
                        let free_slots = vars
                            .iter()
                            .zip(&slots)
                            .filter(|(v, _)| !gv.contains(&v.as_str()))
                            .map(|(_, s)| *s)
                            .collect();
                        let body = match rest {
                            Some(r) => Some(Box::new(self.expr(r)?)),
                            None => None,
                        };
                        Expr::Quant { exists, guard: Some(guard), free_slots, body }
                    }
                    None => Expr::Quant { exists, guard: None, free_slots: slots, body: Some(Box::new(self.expr(body)?)) },
                };
                self.unbind(vars.len());
                out
            }
        })
    }
}

/// Calls `f` for every way of binding the `Bind` arguments of `g` that makes it true,
/// with the bindings written into `env`, until `f` returns false. Returns false if stopped.
pub(crate) fn for_each_guard_match(
    s: &Structure,
    g: &Guard,
    env: &mut [Elem],
    f: &mut dyn FnMut(&mut [Elem]) -> bool,
) -> bool {
    match g {
        Guard::Rel(rel, args) => {
            let pattern: smallvec::SmallVec<[Option<Elem>; 4]> = args
                .iter()
                .map(|a| match a {
                    GArg::Known(k) => Some(value(*k, s, env)),
                    GArg::Bind(_) => None,
                })
                .collect();
            s.for_each_match(*rel, &pattern, &mut |t| {
                for (i, a) in args.iter().enumerate() {
                    if let GArg::Bind(slot) = a {
                        env[*slot as usize] = t[i];
                    }
                }
                // repeated bound variables must agree
                for (i, a) in args.iter().enumerate() {
                    if let GArg::Bind(slot) = a {
                        if env[*slot as usize] != t[i] {
                            return true;
                        }
                    }
                }
                f(env)
            })
        }
        Guard::Eq(a, b) => match (*a, *b) {
            (GArg::Known(x), GArg::Known(y)) => value(x, s, env) != value(y, s, env) || f(env),
            (GArg::Known(k), GArg::Bind(slot)) | (GArg::Bind(slot), GArg::Known(k)) => {
                env[slot as usize] = value(k, s, env);
                f(env)
            }
            (GArg::Bind(p), GArg::Bind(q)) => {
                for e in s.domain() {
                    env[p as usize] = e;
                    env[q as usize] = e;
                    if !f(env) {
                        return false;
                    }
                }
                true
            }
        },
    }
}

/// Calls `f` for every assignment of `slots` over the domain, until it returns false.
fn for_each_assignment(s: &Structure, slots: &[u16], env: &mut [Elem], f: &mut dyn FnMut(&mut [Elem]) -> bool) -> bool {
    match slots.split_first() {
        None => f(env),
        Some((&first, rest)) => {
            for e in s.domain() {
                env[first as usize] = e;
                if !for_each_assignment(s, rest, env, f) {
                    return false;
                }
            }
            true
        }
    }
}

pub(crate) fn eval(e: &Expr, s: &Structure, env: &mut [Elem]) -> bool {
    match e {
        Expr::Const(b) => *b,
        Expr::Atom(r, args) => {
            let t: smallvec::SmallVec<[Elem; 4]> = args.iter().map(|a| value(*a, s, env)).collect();
            s.has_fact(*r, &t)
        }
        Expr::Eq(a, b) => value(*a, s, env) == value(*b, s, env),
        Expr::Not(a) => !eval(a, s, env),
        Expr::And(a, b) => eval(a, s, env) && eval(b, s, env),
        Expr::Or(a, b) => eval(a, s, env) || eval(b, s, env),
        Expr::Implies(a, b) => !eval(a, s, env) || eval(b, s, env),
        Expr::Iff(a, b) => eval(a, s, env) == eval(b, s, env),
        Expr::Quant { exists, guard, free_slots, body } => {
            // search for a counterexample (forall) or a witness (exists)
            let mut found = false;
            let mut visit = |env: &mut [Elem]| {
                for_each_assignment(s, free_slots, env, &mut |env| {
                    let holds = body.as_ref().is_none_or(|b| eval(b, s, env));
                    if holds == *exists {
                        found = true;
                        return false;
                    }
                    true
                })
            };
            match guard {
                Some(g) => {
                    for_each_guard_match(s, g, env, &mut visit);
                }
                None => {
                    visit(env);
                }
            }
            found == *exists
        }
    }
}

/// Compiles `f` with its free variables placed in slots `0..` in the order given.
pub(crate) fn compile_open(f: &Formula, sig: &Signature, free: &[String]) -> Result<(Expr, usize), CheckError> {
    let mut c = Compiler::new(sig);
    c.bind(free);
    let e = c.expr(f)?;
    Ok((e, c.nslots as usize))
}

/// Free-variable order used by [`compile_open`] for an assignment map.
pub(crate) fn assignment_order(assignment: &BTreeMap<String, Elem>) -> (Vec<String>, Vec<Elem>) {
    assignment.iter().map(|(k, v)| (k.clone(), *v)).unzip()
}
