//! Conversion of guarded sentences into a lazily produced disjunction of normal-form sentences.
//!
//! Every quantified subformula with free variables is renamed by a fresh atom over those
//! variables, with defining conjuncts in the direction its polarity requires. The truth
//! values of closed quantified subformulas are guessed; each consistent guess is one disjunct.

use std::collections::BTreeSet;

use thiserror::Error;

use super::sentence::{ConjunctClass, ForallConjunct, ForallExists, NormalFormSentence};
use crate::syntax::fragment::covers;
use crate::syntax::{Formula, Signature, Term};

/// Prefix of the relation symbols introduced by normalisation.
pub const FRESH_PREFIX: &str = "_nf";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalFormError {
    #[error("not a sentence: free variables {0:?}")]
    NotSentence(Vec<String>),
    #[error("unsupported quantifier: {0}")]
    Unsupported(String),
}

/// Boolean skeleton with quantified subformulas pulled out into an arena.
#[derive(Clone, Debug)]
enum Node {
    Const(bool),
    Atom(Formula),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Iff(Box<Node>, Box<Node>),
    Ex(usize),
}

/// `exists ys (guard & body)` with the free variables of the whole subformula.
#[derive(Clone, Debug)]
struct Ex {
    ys: Vec<String>,
    guard: Formula,
    body: Node,
    free: Vec<String>,
    /// Index among the closed subformulas.
    closed: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Pol {
    Pos,
    Neg,
    Both,
}

impl Pol {
    fn flip(self) -> Pol {
        match self {
            Pol::Pos => Pol::Neg,
            Pol::Neg => Pol::Pos,
            Pol::Both => Pol::Both,
        }
    }

    fn pos(self) -> bool {
        self != Pol::Neg
    }

    fn neg(self) -> bool {
        self != Pol::Pos
    }
}

fn mk_not(a: Formula) -> Formula {
    match a {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(b) => *b,
        a => Formula::not(a),
    }
}

fn mk_and(items: Vec<Formula>) -> Formula {
    let mut out = Vec::new();
    for f in items {
        match f {
            Formula::True => {}
            Formula::False => return Formula::False,
            f => out.push(f),
        }
    }
    Formula::and_all(out)
}

fn mk_or(items: Vec<Formula>) -> Formula {
    let mut out = Vec::new();
    for f in items {
        match f {
            Formula::False => {}
            Formula::True => return Formula::True,
            f => out.push(f),
        }
    }
    Formula::or_all(out)
}

fn mk_iff(a: Formula, b: Formula) -> Formula {
    match (a, b) {
        (Formula::True, x) | (x, Formula::True) => x,
        (Formula::False, x) | (x, Formula::False) => mk_not(x),
        (a, b) => Formula::iff(a, b),
    }
}

fn mk_implies(a: Formula, b: Formula) -> Formula {
    match (a, b) {
        (Formula::False, _) | (_, Formula::True) => Formula::True,
        (Formula::True, b) => b,
        (a, Formula::False) => mk_not(a),
        (a, b) => Formula::implies(a, b),
    }
}

fn guard_var_list(g: &Formula) -> Vec<String> {
    g.atom_vars().into_iter().map(String::from).collect()
}

struct Skeleton<'a> {
    sig: &'a Signature,
    exs: Vec<Ex>,
    closed: Vec<usize>,
    fresh_vars: usize,
    used_vars: BTreeSet<String>,
}

impl Skeleton<'_> {
    fn fresh_var(&mut self) -> String {
        loop {
            let v = format!("v{}", self.fresh_vars);
            self.fresh_vars += 1;
            if !self.used_vars.contains(&v) {
                return v;
            }
        }
    }

    fn node(&mut self, f: &Formula) -> Result<Node, NormalFormError> {
        Ok(match f {
            Formula::True => Node::Const(true),
            Formula::False => Node::Const(false),
            Formula::Atom(..) | Formula::Eq(..) => Node::Atom(f.clone()),
            Formula::Not(a) => Node::Not(Box::new(self.node(a)?)),
            Formula::And(a, b) => Node::And(vec![self.node(a)?, self.node(b)?]),
            Formula::Or(a, b) => Node::Or(vec![self.node(a)?, self.node(b)?]),
            Formula::Implies(a, b) => Node::Or(vec![Node::Not(Box::new(self.node(a)?)), self.node(b)?]),
            Formula::Iff(a, b) => Node::Iff(Box::new(self.node(a)?), Box::new(self.node(b)?)),
            Formula::Forall(vs, body) => {
                // forall ys (g -> rest) is !exists ys (g & !rest)
                match f.guard_split() {
                    Some((g, Some(rest))) if covers(g, vs, Some(rest)) => {
                        let inner = Node::Not(Box::new(self.node(rest)?));
                        Node::Not(Box::new(self.exists(vs, g.clone(), inner)))
                    }
                    _ => {
                        let inner = Node::Not(Box::new(self.node(body)?));
                        Node::Not(Box::new(self.unguarded(vs, &body.free_vars(), inner)?))
                    }
                }
            }
            Formula::Exists(vs, body) => match f.guard_split() {
                Some((g, rest)) if covers(g, vs, rest) => {
                    let inner = match rest {
                        Some(r) => self.node(r)?,
                        None => Node::Const(true),
                    };
                    self.exists(vs, g.clone(), inner)
                }
                _ => {
                    let inner = self.node(body)?;
                    self.unguarded(vs, &body.free_vars(), inner)?
                }
            },
        })
    }

    /// Adds a trivial guard, or the universal symbol for two variables.
    fn unguarded(&mut self, vs: &[String], body_free: &BTreeSet<String>, body: Node) -> Result<Node, NormalFormError> {
        let ys: Vec<String> = vs.iter().filter(|v| body_free.contains(*v)).cloned().collect();
        if ys.is_empty() {
            return Ok(body);
        }
        let mut all = ys.clone();
        all.extend(body_free.iter().filter(|v| !vs.contains(v)).cloned());
        let guard = match (all.len(), self.sig.universal()) {
            (1, _) => Formula::trivial_guard(&all[0]),
            (2, Some(u)) => Formula::atom(u, &[&all[0], &all[1]]),
            _ => {
                return Err(NormalFormError::Unsupported(format!(
                    "quantifier over {} with free variables {:?} has no guard",
                    vs.join(" "),
                    all
                )))
            }
        };
        Ok(self.exists(&ys, guard, body))
    }

    /// Builds `exists ys (g & body)`, splitting transitive guards into one-step existentials.
    fn exists(&mut self, ys: &[String], g: Formula, body: Node) -> Node {
        if let Formula::Atom(r, ts) = &g {
            if self.sig.is_transitive(r) && ts.len() == 2 {
                if let (Term::Var(a), Term::Var(b)) = (&ts[0], &ts[1]) {
                    let (qa, qb) = (ys.contains(a), ys.contains(b));
                    if a != b && qa && qb {
                        let inner = self.exists(std::slice::from_ref(b), g.clone(), body);
                        return self.exists(std::slice::from_ref(a), Formula::trivial_guard(a), inner);
                    }
                    if a == b && qa {
                        let y = self.fresh_var();
                        let step = self.push(vec![y.clone()], Formula::atom(r, &[a, &y]), Node::Atom(Formula::eq_vars(a, &y)));
                        return self.exists(std::slice::from_ref(a), Formula::trivial_guard(a), Node::And(vec![step, body]));
                    }
                }
            }
        }
        self.push(ys.to_vec(), g, body)
    }

    fn push(&mut self, ys: Vec<String>, guard: Formula, body: Node) -> Node {
        let free: Vec<String> = guard_var_list(&guard).into_iter().filter(|v| !ys.contains(v)).collect();
        let closed = free.is_empty().then(|| {
            self.closed.push(self.exs.len());
            self.closed.len() - 1
        });
        self.exs.push(Ex { ys, guard, body, free, closed });
        Node::Ex(self.exs.len() - 1)
    }
}

/// Three-valued evaluation of the top level under a partial guess for closed subformulas.
fn eval3(n: &Node, exs: &[Ex], guess: &[bool]) -> Option<bool> {
    match n {
        Node::Const(b) => Some(*b),
        Node::Atom(_) => None,
        Node::Not(a) => eval3(a, exs, guess).map(|b| !b),
        Node::And(items) => {
            let mut out = Some(true);
            for i in items {
                match eval3(i, exs, guess) {
                    Some(false) => return Some(false),
                    None => out = None,
                    _ => {}
                }
            }
            out
        }
        Node::Or(items) => {
            let mut out = Some(false);
            for i in items {
                match eval3(i, exs, guess) {
                    Some(true) => return Some(true),
                    None => out = None,
                    _ => {}
                }
            }
            out
        }
        Node::Iff(a, b) => Some(eval3(a, exs, guess)? == eval3(b, exs, guess)?),
        Node::Ex(i) => exs[*i].closed.and_then(|k| guess.get(k).copied()),
    }
}

/// Builds one disjunct for a full guess.
struct Builder<'a> {
    exs: &'a [Ex],
    guess: &'a [bool],
    out: NormalFormSentence,
}

impl Builder<'_> {
    fn fresh(&mut self, arity: usize) -> String {
        self.out.signature.add_fresh(FRESH_PREFIX, arity)
    }

    fn rename(&mut self, n: &Node, pol: Pol) -> Formula {
        match n {
            Node::Const(true) => Formula::True,
            Node::Const(false) => Formula::False,
            Node::Atom(f) => f.clone(),
            Node::Not(a) => mk_not(self.rename(a, pol.flip())),
            Node::And(items) => mk_and(items.iter().map(|i| self.rename(i, pol)).collect()),
            Node::Or(items) => mk_or(items.iter().map(|i| self.rename(i, pol)).collect()),
            Node::Iff(a, b) => {
                let a = self.rename(a, Pol::Both);
                let b = self.rename(b, Pol::Both);
                mk_iff(a, b)
            }
            Node::Ex(i) => match self.exs[*i].closed {
                Some(k) => {
                    if self.guess[k] {
                        Formula::True
                    } else {
                        Formula::False
                    }
                }
                None => self.define(*i, pol),
            },
        }
    }

    fn define(&mut self, i: usize, pol: Pol) -> Formula {
        let e = &self.exs[i];
        let body = self.rename(&e.body, pol);
        let h = self.fresh(e.free.len());
        let free: Vec<&str> = e.free.iter().map(String::as_str).collect();
        let atom = Formula::atom(&h, &free);
        if pol.pos() {
            self.out.forall_exists.push(ForallExists {
                xs: e.free.clone(),
                guard: atom.clone(),
                ys: e.ys.clone(),
                wguard: e.guard.clone(),
                matrix: body.clone(),
                class: ConjunctClass::Plain,
            });
        }
        if pol.neg() {
            self.out.foralls.push(ForallConjunct {
                xs: guard_var_list(&e.guard),
                guard: e.guard.clone(),
                matrix: mk_implies(body, atom.clone()),
            });
        }
        atom
    }

    fn closed(&mut self, i: usize, holds: bool) {
        let e = &self.exs[i];
        let body = self.rename(&e.body, if holds { Pol::Pos } else { Pol::Neg });
        if holds {
            let mut x = "x".to_string();
            let mut k = 0;
            while e.ys.contains(&x) {
                k += 1;
                x = format!("x{k}");
            }
            let g = self.fresh(1 + e.ys.len());
            let mut args: Vec<&str> = vec![&x];
            args.extend(e.ys.iter().map(String::as_str));
            let wguard = Formula::atom(&g, &args);
            self.out.forall_exists.push(ForallExists {
                xs: vec![x.clone()],
                guard: Formula::trivial_guard(&x),
                ys: e.ys.clone(),
                wguard,
                matrix: mk_and(vec![e.guard.clone(), body]),
                class: ConjunctClass::Plain,
            });
        } else {
            self.out.foralls.push(ForallConjunct {
                xs: guard_var_list(&e.guard),
                guard: e.guard.clone(),
                matrix: mk_not(body),
            });
        }
    }
}

/// Lazy sequence of normal-form disjuncts; see [`to_normal_form`].
pub struct NormalForms {
    sig: Signature,
    top: Node,
    exs: Vec<Ex>,
    closed: Vec<usize>,
    guess: Vec<bool>,
    started: bool,
    fixpoint: Option<NormalFormSentence>,
    done: bool,
}

impl NormalForms {
    /// Number of closed quantified subformulas whose truth values are guessed.
    pub fn guessed(&self) -> usize {
        self.closed.len()
    }

    fn consistent(&self) -> bool {
        eval3(&self.top, &self.exs, &self.guess) != Some(false)
    }

    fn backtrack(&mut self) -> bool {
        while let Some(v) = self.guess.pop() {
            if !v {
                self.guess.push(true);
                return true;
            }
        }
        false
    }

    fn build(&self) -> NormalFormSentence {
        let mut b = Builder { exs: &self.exs, guess: &self.guess, out: NormalFormSentence::new(self.sig.clone()) };
        let rest = b.rename(&self.top, Pol::Pos);
        for (k, &i) in self.closed.iter().enumerate() {
            b.closed(i, self.guess[k]);
        }
        if rest != Formula::True {
            b.out.foralls.push(ForallConjunct { xs: vec!["x".into()], guard: Formula::trivial_guard("x"), matrix: rest });
        }
        b.out
    }
}

impl Iterator for NormalForms {
    type Item = NormalFormSentence;

    fn next(&mut self) -> Option<NormalFormSentence> {
        if self.done {
            return None;
        }
        if let Some(nf) = self.fixpoint.take() {
            self.done = true;
            return Some(nf);
        }
        loop {
            if self.started && !self.backtrack() {
                self.done = true;
                return None;
            }
            self.started = true;
            loop {
                if !self.consistent() {
                    break;
                }
                if self.guess.len() == self.closed.len() {
                    return Some(self.build());
                }
                self.guess.push(false);
            }
        }
    }
}

/// Converts a sentence into normal-form sentences over `sig` plus fresh symbols whose
/// disjunction entails it, and such that every model of it expands to a model of one of
/// them. A sentence that already has the normal-form shape is returned unchanged.
/// Disjuncts are produced lazily, guesses enumerated with `false` before `true`.
pub fn to_normal_form(f: &Formula, sig: &Signature) -> Result<NormalForms, NormalFormError> {
    let free = f.free_vars();
    if !free.is_empty() {
        return Err(NormalFormError::NotSentence(free.into_iter().collect()));
    }
    let mut sk = Skeleton { sig, exs: Vec::new(), closed: Vec::new(), fresh_vars: 0, used_vars: f.all_vars() };
    let top = sk.node(f)?;
    let fixpoint = NormalFormSentence::from_formula(f, sig, false);
    Ok(NormalForms {
        sig: sig.clone(),
        top,
        exs: sk.exs,
        closed: sk.closed,
        guess: Vec::new(),
        started: false,
        fixpoint,
        done: false,
    })
}
