use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SyntaxError;

/// Index of a relation symbol inside its [`Signature`].
pub type RelId = usize;

/// A purely relational signature, possibly with constants, together with the
/// distinguished symbols used by the guarded logics: the universal role `U`,
/// transitive symbols and the auxiliary symbol `Aux`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "SignatureData")]
pub struct Signature {
    relations: Vec<(String, usize)>,
    #[serde(skip)]
    index: BTreeMap<String, RelId>,
    constants: Vec<String>,
    universal: Option<String>,
    transitive: BTreeSet<String>,
    aux: Option<String>,
}

#[derive(Deserialize)]
struct SignatureData {
    relations: Vec<(String, usize)>,
    constants: Vec<String>,
    universal: Option<String>,
    transitive: BTreeSet<String>,
    aux: Option<String>,
}

impl From<SignatureData> for Signature {
    fn from(d: SignatureData) -> Self {
        let mut s = Signature {
            relations: d.relations,
            index: BTreeMap::new(),
            constants: d.constants,
            universal: d.universal,
            transitive: d.transitive,
            aux: d.aux,
        };
        s.rebuild_index();
        s
    }
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a relation. Redeclaring with the same arity is a no-op.
    pub fn add_relation(&mut self, name: &str, arity: usize) -> Result<RelId, SyntaxError> {
        if arity == 0 {
            return Err(SyntaxError::Signature(format!("relation {name} must have positive arity")));
        }
        if self.constants.iter().any(|c| c == name) {
            return Err(SyntaxError::Signature(format!("{name} is already a constant")));
        }
        if let Some(&id) = self.index.get(name) {
            if self.relations[id].1 != arity {
                return Err(SyntaxError::Signature(format!(
                    "relation {name} redeclared with arity {arity} (was {})",
                    self.relations[id].1
                )));
            }
            return Ok(id);
        }
        let id = self.relations.len();
        self.relations.push((name.to_string(), arity));
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn add_constant(&mut self, name: &str) -> Result<(), SyntaxError> {
        if self.index.contains_key(name) {
            return Err(SyntaxError::Signature(format!("{name} is already a relation")));
        }
        if !self.constants.iter().any(|c| c == name) {
            self.constants.push(name.to_string());
        }
        Ok(())
    }

    pub fn set_universal(&mut self, name: &str) -> Result<(), SyntaxError> {
        self.add_relation(name, 2)?;
        if self.transitive.contains(name) {
            return Err(SyntaxError::Signature(format!("universal symbol {name} cannot be transitive")));
        }
        self.universal = Some(name.to_string());
        Ok(())
    }

    pub fn add_transitive(&mut self, name: &str) -> Result<(), SyntaxError> {
        self.add_relation(name, 2)?;
        if self.universal.as_deref() == Some(name) || self.aux.as_deref() == Some(name) {
            return Err(SyntaxError::Signature(format!("{name} cannot be transitive")));
        }
        self.transitive.insert(name.to_string());
        Ok(())
    }

    pub fn set_aux(&mut self, name: &str) -> Result<(), SyntaxError> {
        self.add_relation(name, 2)?;
        if self.transitive.contains(name) {
            return Err(SyntaxError::Signature(format!("aux symbol {name} cannot be transitive")));
        }
        self.aux = Some(name.to_string());
        Ok(())
    }

    pub fn relations(&self) -> impl Iterator<Item = (RelId, &str, usize)> + '_ {
        self.relations.iter().enumerate().map(|(i, (n, a))| (i, n.as_str(), *a))
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn rel_id(&self, name: &str) -> Option<RelId> {
        self.index.get(name).copied()
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.rel_id(name).map(|id| self.relations[id].1)
    }

    pub fn rel_name(&self, id: RelId) -> &str {
        &self.relations[id].0
    }

    pub fn rel_arity(&self, id: RelId) -> usize {
        self.relations[id].1
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn const_index(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c == name)
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.const_index(name).is_some()
    }

    pub fn universal(&self) -> Option<&str> {
        self.universal.as_deref()
    }

    pub fn aux(&self) -> Option<&str> {
        self.aux.as_deref()
    }

    pub fn transitive(&self) -> &BTreeSet<String> {
        &self.transitive
    }

    pub fn is_transitive(&self, name: &str) -> bool {
        self.transitive.contains(name)
    }

    pub fn is_transitive_id(&self, id: RelId) -> bool {
        self.transitive.contains(&self.relations[id].0)
    }

    /// Maximal arity among the relation symbols.
    pub fn width(&self) -> usize {
        self.relations.iter().map(|(_, a)| *a).max().unwrap_or(0)
    }

    /// Returns a name starting with `prefix` that is not yet used by any symbol.
    pub fn fresh_name(&self, prefix: &str) -> String {
        let mut i = 0usize;
        loop {
            let cand = format!("{prefix}{i}");
            if !self.index.contains_key(&cand) && !self.is_constant(&cand) {
                return cand;
            }
            i += 1;
        }
    }

    /// Declares a fresh relation symbol with the given prefix.
    pub fn add_fresh(&mut self, prefix: &str, arity: usize) -> String {
        let name = self.fresh_name(prefix);
        self.add_relation(&name, arity).expect("fresh relation name");
        name
    }

    /// The same signature without the listed relation symbols.
    pub fn restrict_to(&self, keep: &dyn Fn(&str) -> bool) -> Signature {
        let mut out = Signature::new();
        for (name, arity) in &self.relations {
            if keep(name) {
                out.add_relation(name, *arity).unwrap();
            }
        }
        for c in &self.constants {
            out.add_constant(c).unwrap();
        }
        if let Some(u) = &self.universal {
            if keep(u) {
                out.universal = Some(u.clone());
            }
        }
        if let Some(a) = &self.aux {
            if keep(a) {
                out.aux = Some(a.clone());
            }
        }
        out.transitive = self.transitive.iter().filter(|t| keep(t)).cloned().collect();
        out
    }

    /// Whether every symbol of `self` is declared in `other` with the same arity.
    pub fn is_subsignature_of(&self, other: &Signature) -> bool {
        self.relations.iter().all(|(n, a)| other.arity(n) == Some(*a))
            && self.constants.iter().all(|c| other.is_constant(c))
    }

    /// Parses a header block such as `rel R/3; const c; universal U; transitive T; aux Aux;`.
    pub fn parse_header(text: &str) -> Result<Signature, SyntaxError> {
        let mut sig = Signature::new();
        for stmt in text.split(';') {
            let stmt = stmt.trim();
            if stmt.is_empty() {
                continue;
            }
            sig.apply_statement(stmt)?;
        }
        Ok(sig)
    }

    pub(crate) fn apply_statement(&mut self, stmt: &str) -> Result<(), SyntaxError> {
        let mut words = stmt.split_whitespace();
        let kw = words.next().unwrap_or("");
        let rest: Vec<&str> = words.flat_map(|w| w.split(',')).filter(|w| !w.is_empty()).collect();
        if rest.is_empty() {
            return Err(SyntaxError::Signature(format!("empty declaration `{stmt}`")));
        }
        for item in rest {
            match kw {
                "rel" => {
                    let (name, arity) = item
                        .split_once('/')
                        .ok_or_else(|| SyntaxError::Signature(format!("expected NAME/ARITY, got `{item}`")))?;
                    let arity: usize = arity
                        .parse()
                        .map_err(|_| SyntaxError::Signature(format!("bad arity in `{item}`")))?;
                    check_ident(name)?;
                    self.add_relation(name, arity)?;
                }
                "const" => {
                    check_ident(item)?;
                    self.add_constant(item)?;
                }
                "universal" => {
                    check_ident(item)?;
                    self.set_universal(item)?;
                }
                "transitive" => {
                    check_ident(item)?;
                    self.add_transitive(item)?;
                }
                "aux" => {
                    check_ident(item)?;
                    self.set_aux(item)?;
                }
                other => return Err(SyntaxError::Signature(format!("unknown declaration keyword `{other}`"))),
            }
        }
        Ok(())
    }

    fn rebuild_index(&mut self) {
        self.index = self.relations.iter().enumerate().map(|(i, (n, _))| (n.clone(), i)).collect();
    }
}

fn check_ident(s: &str) -> Result<(), SyntaxError> {
    let ok = s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok && !super::parser::is_keyword(s) {
        Ok(())
    } else {
        Err(SyntaxError::Signature(format!("`{s}` is not a valid identifier")))
    }
}

impl fmt::Display for Signature {
    /// Prints the header block understood by [`Signature::parse_header`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, arity) in &self.relations {
            writeln!(f, "rel {name}/{arity};")?;
        }
        for c in &self.constants {
            writeln!(f, "const {c};")?;
        }
        if let Some(u) = &self.universal {
            writeln!(f, "universal {u};")?;
        }
        for t in &self.transitive {
            writeln!(f, "transitive {t};")?;
        }
        if let Some(a) = &self.aux {
            writeln!(f, "aux {a};")?;
        }
        Ok(())
    }
}
