use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Elem, Structure, StructureError};
use crate::syntax::Signature;

#[derive(Serialize, Deserialize)]
struct Header {
    domain: Vec<Elem>,
    constants: BTreeMap<String, Elem>,
}

#[derive(Serialize, Deserialize)]
struct FactLine {
    rel: String,
    tuple: Vec<Elem>,
}

/// Writes `s` as JSON lines: a header with domain and constants, then one line per
/// fact, sorted by relation declaration order and tuple.
pub fn write_jsonl(s: &Structure) -> String {
    let header = Header {
        domain: s.domain().collect(),
        constants: s
            .signature()
            .constants()
            .iter()
            .zip(s.constants())
            .filter_map(|(n, c)| c.map(|e| (n.clone(), e)))
            .collect(),
    };
    let mut out = serde_json::to_string(&header).expect("serializable header");
    out.push('\n');
    for (r, t) in s.all_facts() {
        let line = FactLine { rel: s.signature().rel_name(r).to_string(), tuple: t.to_vec() };
        out.push_str(&serde_json::to_string(&line).expect("serializable fact"));
        out.push('\n');
    }
    out
}

/// Reads the format produced by [`write_jsonl`]. The domain must be `0..n`.
pub fn read_jsonl(text: &str, sig: Arc<Signature>) -> Result<Structure, StructureError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| StructureError::Format { line: 1, msg: "missing header".into() })?;
    let header: Header =
        serde_json::from_str(first).map_err(|e| StructureError::Format { line: 1, msg: e.to_string() })?;
    if header.domain.iter().enumerate().any(|(i, &e)| e != i as Elem) {
        return Err(StructureError::Format { line: 1, msg: "domain must be 0, 1, ..., n-1 in order".into() });
    }
    let mut s = Structure::new(sig, header.domain.len() as u32);
    for (name, e) in &header.constants {
        s.set_constant(name, *e)?;
    }
    for (i, line) in lines {
        let fact: FactLine =
            serde_json::from_str(line).map_err(|e| StructureError::Format { line: i + 1, msg: e.to_string() })?;
        s.add_fact_named(&fact.rel, &fact.tuple)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_roundtrip() {
        let sig = Arc::new(Signature::parse_header("rel R/2; rel S/3; const c;").unwrap());
        let mut s = Structure::new(sig.clone(), 3);
        s.add_fact_named("S", &[2, 1, 0]).unwrap();
        s.add_fact_named("R", &[1, 0]).unwrap();
        s.add_fact_named("R", &[0, 2]).unwrap();
        s.set_constant("c", 2).unwrap();
        let text = write_jsonl(&s);
        assert_eq!(
            text,
            "{\"domain\":[0,1,2],\"constants\":{\"c\":2}}\n{\"rel\":\"R\",\"tuple\":[0,2]}\n\
             {\"rel\":\"R\",\"tuple\":[1,0]}\n{\"rel\":\"S\",\"tuple\":[2,1,0]}\n"
        );
        let back = read_jsonl(&text, sig.clone()).unwrap();
        assert_eq!(back, s);
        assert_eq!(write_jsonl(&back), text);
        assert!(read_jsonl("{\"domain\":[1],\"constants\":{}}\n", sig.clone()).is_err());
        assert!(read_jsonl("{\"domain\":[0],\"constants\":{}}\n{\"rel\":\"Q\",\"tuple\":[0]}\n", sig).is_err());
    }
}
