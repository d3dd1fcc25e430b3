use std::collections::BTreeSet;

use super::formula::{Formula, Term};
use super::{Pos, Signature, SyntaxError};

const KEYWORDS: &[&str] = &[
    "forall", "exists", "true", "false", "rel", "const", "universal", "transitive", "aux",
];
const DECL_KEYWORDS: &[&str] = &["rel", "const", "universal", "transitive", "aux"];

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    And,
    Or,
    Not,
    Arrow,
    DArrow,
    Equals,
    Forall,
    Exists,
    True,
    False,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::And => "`&`".into(),
        Tok::Or => "`|`".into(),
        Tok::Not => "`!`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::DArrow => "`<->`".into(),
        Tok::Equals => "`=`".into(),
        Tok::Forall => "`forall`".into(),
        Tok::Exists => "`exists`".into(),
        Tok::True => "`true`".into(),
        Tok::False => "`false`".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn lex(text: &str, base: Pos) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = base.line;
    let mut col = base.col;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let mut adv = 1;
        match c {
            '\n' => {
                line += 1;
                col = 0;
            }
            c if c.is_whitespace() => {}
            '#' => {
                while i + adv < chars.len() && chars[i + adv] != '\n' {
                    adv += 1;
                }
            }
            '(' => out.push((Tok::LParen, pos)),
            ')' => out.push((Tok::RParen, pos)),
            ',' => out.push((Tok::Comma, pos)),
            '&' => out.push((Tok::And, pos)),
            '|' => out.push((Tok::Or, pos)),
            '!' => out.push((Tok::Not, pos)),
            '=' => out.push((Tok::Equals, pos)),
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, pos));
                adv = 2;
            }
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                out.push((Tok::DArrow, pos));
                adv = 3;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i + adv < chars.len() && (chars[i + adv].is_ascii_alphanumeric() || chars[i + adv] == '_') {
                    adv += 1;
                }
                let word: String = chars[i..i + adv].iter().collect();
                let tok = match word.as_str() {
                    "forall" => Tok::Forall,
                    "exists" => Tok::Exists,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    w if is_keyword(w) => {
                        return Err(SyntaxError::Lex { pos, msg: format!("declaration keyword `{w}` inside a formula") })
                    }
                    _ => Tok::Ident(word),
                };
                out.push((tok, pos));
            }
            other => return Err(SyntaxError::Lex { pos, msg: format!("unexpected character `{other}`") }),
        }
        i += adv;
        col += adv;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    sig: &'a Signature,
    /// Source name to AST name for the quantifiers currently in scope.
    scope: Vec<(String, String)>,
    used: BTreeSet<String>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected {}", describe(&t))))
        }
    }

    fn unexpected(&self, what: &str) -> SyntaxError {
        SyntaxError::Parse { pos: self.pos(), msg: format!("{what}, found {}", describe(self.peek())) }
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.implication()?;
        while *self.peek() == Tok::DArrow {
            self.bump();
            let rhs = self.implication()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Forall | Tok::Exists => self.quantifier(),
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(name) => {
                if *self.peek_at(1) == Tok::LParen {
                    self.atom(name)
                } else {
                    let lhs = self.term()?;
                    self.expect(Tok::Equals)?;
                    let rhs = self.term()?;
                    Ok(Formula::Eq(lhs, rhs))
                }
            }
            _ => Err(self.unexpected("expected a formula")),
        }
    }

    fn quantifier(&mut self) -> Result<Formula, SyntaxError> {
        let is_forall = self.bump() == Tok::Forall;
        let mut src_vars = Vec::new();
        while let Tok::Ident(v) = self.peek().clone() {
            if *self.peek_at(1) == Tok::Equals || self.looks_like_atom() {
                break;
            }
            if self.sig.is_constant(&v) {
                return Err(SyntaxError::Parse { pos: self.pos(), msg: format!("cannot quantify over constant `{v}`") });
            }
            if self.sig.rel_id(&v).is_some() {
                return Err(SyntaxError::Parse {
                    pos: self.pos(),
                    msg: format!("`{v}` is a relation symbol, not a variable"),
                });
            }
            if src_vars.contains(&v) {
                return Err(SyntaxError::Parse { pos: self.pos(), msg: format!("variable `{v}` bound twice") });
            }
            src_vars.push(v);
            self.bump();
        }
        if src_vars.is_empty() {
            return Err(self.unexpected("expected at least one variable after the quantifier"));
        }
        let before = self.scope.len();
        let mut vars = Vec::new();
        for v in &src_vars {
            let shadowing = self.scope.iter().any(|(s, _)| s == v);
            let name = if shadowing { super::formula::fresh_var(v, &mut self.used) } else { v.clone() };
            self.scope.push((v.clone(), name.clone()));
            vars.push(name);
        }
        let body = self.unary()?;
        self.scope.truncate(before);
        Ok(if is_forall { Formula::Forall(vars, Box::new(body)) } else { Formula::Exists(vars, Box::new(body)) })
    }

    /// An identifier followed by `(` is an atom if it is a declared relation or
    /// its parenthesised group reads as an argument list.
    fn looks_like_atom(&self) -> bool {
        let Tok::Ident(name) = self.peek() else { return false };
        if *self.peek_at(1) != Tok::LParen {
            return false;
        }
        self.sig.rel_id(name).is_some()
            || (matches!(self.peek_at(2), Tok::Ident(_)) && matches!(self.peek_at(3), Tok::Comma | Tok::RParen))
    }

    fn atom(&mut self, name: String) -> Result<Formula, SyntaxError> {
        let pos = self.pos();
        self.bump();
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        match self.sig.arity(&name) {
            None => Err(SyntaxError::Undeclared { name, pos }),
            Some(a) if a != args.len() => Err(SyntaxError::Arity { name, expected: a, found: args.len(), pos }),
            Some(_) => Ok(Formula::Atom(name, args)),
        }
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(v) => {
                if self.sig.rel_id(&v).is_some() {
                    return Err(SyntaxError::Parse {
                        pos: self.pos(),
                        msg: format!("relation symbol `{v}` used as a term"),
                    });
                }
                self.bump();
                if self.sig.is_constant(&v) {
                    return Ok(Term::Const(v));
                }
                let name = self.scope.iter().rev().find(|(s, _)| *s == v).map(|(_, n)| n.clone()).unwrap_or(v);
                Ok(Term::Var(name))
            }
            _ => Err(self.unexpected("expected a variable or constant")),
        }
    }
}

fn parse_at(text: &str, sig: &Signature, base: Pos) -> Result<Formula, SyntaxError> {
    let toks = lex(text, base)?;
    let used: BTreeSet<String> =
        toks.iter().filter_map(|(t, _)| if let Tok::Ident(s) = t { Some(s.clone()) } else { None }).collect();
    let mut p = Parser { toks, i: 0, sig, scope: Vec::new(), used };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("expected end of formula"));
    }
    Ok(f)
}

/// Parses a formula over `sig`. Identifiers declared as constants are constants,
/// all other term identifiers are variables. A quantifier that rebinds a
/// variable already bound by an enclosing quantifier gets a fresh name.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, SyntaxError> {
    parse_at(text, sig, Pos { line: 1, col: 1 })
}

/// A signature header followed by a formula.
#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub signature: Signature,
    pub formula: Formula,
}

/// Parses a file made of declarations (`rel R/2; const c; ...`) followed by one formula.
pub fn parse_document(text: &str) -> Result<Document, SyntaxError> {
    let mut sig = Signature::new();
    let mut rest = text;
    let mut line = 1usize;
    loop {
        // skip whitespace and comments
        let mut skipped = 0;
        let bytes = rest.as_bytes();
        while skipped < bytes.len() {
            match bytes[skipped] {
                b'\n' => {
                    line += 1;
                    skipped += 1;
                }
                b' ' | b'\t' | b'\r' => skipped += 1,
                b'#' => {
                    while skipped < bytes.len() && bytes[skipped] != b'\n' {
                        skipped += 1;
                    }
                }
                _ => break,
            }
        }
        rest = &rest[skipped..];
        let word: String = rest.chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '_').collect();
        if !DECL_KEYWORDS.contains(&word.as_str()) {
            break;
        }
        let end = rest
            .find(';')
            .ok_or_else(|| SyntaxError::Parse { pos: Pos { line, col: 1 }, msg: "declaration without `;`".into() })?;
        let stmt = &rest[..end];
        sig.apply_statement(stmt.trim()).map_err(|e| match e {
            SyntaxError::Signature(m) => SyntaxError::Signature(format!("line {line}: {m}")),
            other => other,
        })?;
        line += stmt.matches('\n').count();
        rest = &rest[end + 1..];
    }
    let mut formula_text = rest.trim_end();
    if let Some(stripped) = formula_text.strip_suffix(';') {
        formula_text = stripped;
    }
    let formula = parse_at(formula_text, &sig, Pos { line, col: 1 })?;
    Ok(Document { signature: sig, formula })
}
