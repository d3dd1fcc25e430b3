//! The subcommands. Each returns an [`Outcome`]; artifacts are written only after the
//! model they hold has been checked.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Result};
use serde_json::json;
use triguard::finder::{find_model_formula, satisfies_mode, SearchConfig};
use triguard::modelcheck::{check_model, evaluate, CheckMode};
use triguard::normalform::{enhance_tg_normal_form, to_normal_form, NormalFormSentence};
use triguard::saturation::{prepare_seed, saturate_with, SaturateOptions, SaturationError};
use triguard::structures::{read_jsonl, write_jsonl, Structure};
use triguard::syntax::{classify_fragment, print_formula, Document, Formula, Fragment, Signature};
use triguard::tgconstruct::{decide_finsat_gftg, decide_finsat_gfutg, FinsatBudgets};

use crate::io::{display_name, emit, read_document, read_input, write_atomic, AtomicFile};

/// What a command concluded and wrote.
#[derive(Debug, Default)]
pub struct Outcome {
    pub verdict: Option<bool>,
    pub model_size: Option<u32>,
    pub steps: Option<usize>,
    pub outputs: Vec<PathBuf>,
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string(v).expect("serialisable"));
}

/// Whether `s` satisfies `f` under the side conditions of `mode`.
fn holds(s: &Structure, f: &Formula, mode: CheckMode) -> bool {
    evaluate(s, f, &BTreeMap::new()).unwrap_or(false) && satisfies_mode(s, mode)
}

fn fragment_name(f: Fragment) -> String {
    f.to_string()
}

pub fn parse(input: Option<&Path>) -> Result<Outcome> {
    let doc = read_document(input)?;
    print!("{}{}\n", doc.signature, print_formula(&doc.formula));
    Ok(Outcome::default())
}

pub fn classify(input: Option<&Path>) -> Result<Outcome> {
    let doc = read_document(input)?;
    let report = classify_fragment(&doc.formula, &doc.signature);
    let members: Vec<String> = Fragment::ALL.iter().filter(|f| report.is_member(**f)).map(|f| fragment_name(*f)).collect();
    print_json(&json!({ "members": members, "report": report }));
    Ok(Outcome::default())
}

/// A normal-form sentence as a document that parses back.
fn nf_document(nf: &NormalFormSentence) -> String {
    format!("{}{}\n", nf.signature, print_formula(&nf.to_formula()))
}

pub fn normalize(input: Option<&Path>, tg: bool, out_dir: Option<&Path>, max_disjuncts: usize) -> Result<Outcome> {
    let doc = read_document(input)?;
    let nfs = to_normal_form(&doc.formula, &doc.signature).map_err(|e| anyhow::anyhow!("{}: {e}", display_name(input)))?;
    let mut out = Outcome::default();
    let mut count = 0;
    for (i, nf) in nfs.take(max_disjuncts).enumerate() {
        let nf = if tg { enhance_tg_normal_form(&nf) } else { nf };
        let text = nf_document(&nf);
        count += 1;
        match out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("disjunct_{:03}.gf", i + 1));
                write_atomic(&path, &text)?;
                out.outputs.push(path);
            }
            None => print_json(&json!({ "disjunct": i + 1, "text": text })),
        }
    }
    if out_dir.is_some() {
        print_json(&json!({ "disjuncts": count }));
    }
    out.verdict = Some(count > 0);
    Ok(out)
}

pub fn check(model: &Path, formula: &Path, mode: CheckMode) -> Result<Outcome> {
    let doc = read_document(Some(formula))?;
    let sig = Arc::new(doc.signature.clone());
    let s = read_jsonl(&read_input(Some(model))?, sig).map_err(|e| anyhow::anyhow!("{}: {e}", model.display()))?;
    let formula_holds = evaluate(&s, &doc.formula, &BTreeMap::new()).map_err(|e| anyhow::anyhow!("{e}"))?;
    let ubiquitous = mode.ubiquitous.then(|| satisfies_mode(&s, CheckMode { ubiquitous: true, transitive: false }));
    let transitive = mode.transitive.then(|| satisfies_mode(&s, CheckMode { ubiquitous: false, transitive: true }));
    let conjuncts = NormalFormSentence::from_formula(&doc.formula, &doc.signature, true).map(|nf| check_model(&s, &nf, mode));
    let verdict = formula_holds && ubiquitous.unwrap_or(true) && transitive.unwrap_or(true);
    print_json(&json!({
        "verdict": verdict,
        "size": s.size(),
        "formula": formula_holds,
        "ubiquitous": ubiquitous,
        "transitive": transitive,
        "conjuncts": conjuncts,
    }));
    Ok(Outcome { verdict: Some(verdict), model_size: Some(s.size()), ..Outcome::default() })
}

#[derive(Clone, Debug)]
pub struct FindArgs {
    pub max_size: u32,
    pub mode: CheckMode,
    pub ramified: bool,
    pub max_fact_elems: Option<usize>,
    pub seed: u64,
}

pub fn find(input: &Path, args: &FindArgs, out: Option<&Path>, quiet: bool) -> Result<Outcome> {
    let doc = read_document(Some(input))?;
    let cfg = SearchConfig::new(args.max_size)
        .ubiquitous(args.mode.ubiquitous)
        .transitive(args.mode.transitive)
        .ramified(args.ramified)
        .max_fact_elems(args.max_fact_elems)
        .seed(args.seed);
    let Some(s) = find_model_formula(&doc.formula, &doc.signature, &cfg) else {
        return Ok(Outcome { verdict: Some(false), ..Outcome::default() });
    };
    if !holds(&s, &doc.formula, args.mode) {
        bail!("{}: the model found does not pass the checker", input.display());
    }
    let mut o = Outcome { verdict: Some(true), model_size: Some(s.size()), ..Outcome::default() };
    if !quiet {
        emit(out, &write_jsonl(&s))?;
        o.outputs.extend(out.map(Path::to_path_buf));
    }
    Ok(o)
}

#[derive(Clone, Debug)]
pub struct SaturateArgs {
    pub max_seed_size: u32,
    pub constants: bool,
    pub tg: bool,
    pub check_steps: bool,
}

fn normal_forms(doc: &Document, input: &Path) -> Result<Vec<NormalFormSentence>> {
    if let Some(nf) = NormalFormSentence::from_formula(&doc.formula, &doc.signature, true) {
        return Ok(vec![nf]);
    }
    let nfs = to_normal_form(&doc.formula, &doc.signature).map_err(|e| anyhow::anyhow!("{}: {e}", input.display()))?;
    Ok(nfs.take(FinsatBudgets::default().max_disjuncts).collect())
}

pub fn saturate(input: &Path, args: &SaturateArgs, out: Option<&Path>, trace: Option<&Path>, quiet: bool) -> Result<Outcome> {
    let doc = read_document(Some(input))?;
    let sig: &Signature = &doc.signature;
    if sig.universal().is_none() {
        bail!("{}: the signature declares no universal symbol", input.display());
    }
    if !sig.constants().is_empty() && !args.constants {
        bail!("{}: the signature declares constants; pass --constants", input.display());
    }
    if !sig.constants().is_empty() && args.tg {
        bail!("{}: constants are not supported together with transitive symbols", input.display());
    }
    let mut seed = None;
    for nf in normal_forms(&doc, input)? {
        match prepare_seed(&nf, args.max_seed_size, args.tg) {
            Ok(s) => {
                seed = Some((nf, s));
                break;
            }
            Err(SaturationError::NoModel(_)) => continue,
            Err(e) => bail!("{}: {e}", input.display()),
        }
    }
    let Some((nf, seed)) = seed else {
        if !quiet {
            print_json(&json!({ "verdict": false, "note": "no seed within the bound" }));
        }
        return Ok(Outcome { verdict: Some(false), ..Outcome::default() });
    };
    let mut trace_file = trace.map(AtomicFile::create).transpose()?;
    let mut write_err = None;
    let opts = SaturateOptions { tg: args.tg, check_every_step: args.check_steps };
    let state = saturate_with(&seed.c_minus, &seed.phi_star, opts, &mut |rec| {
        if let Some(f) = trace_file.as_mut() {
            let line = serde_json::to_string(rec).expect("serialisable");
            if let Err(e) = writeln!(f.writer(), "{line}") {
                write_err.get_or_insert(e);
            }
        }
    })
    .map_err(|e| anyhow::anyhow!("{}: {e}", input.display()))?;
    if let Some(e) = write_err {
        bail!("trace: {e}");
    }
    let steps = state.step_count();
    let full = state.into_current();
    let model = full.reduct(Arc::new(nf.signature.clone()))?;
    let mode = CheckMode { ubiquitous: true, transitive: args.tg };
    if !check_model(&model, &nf, mode).verdict {
        bail!("{}: the saturated model does not pass the checker", input.display());
    }
    let model = model.reduct(Arc::new(doc.signature.clone()))?;
    if !holds(&model, &doc.formula, mode) {
        bail!("{}: the saturated model does not satisfy the input", input.display());
    }
    let mut o = Outcome { verdict: Some(true), model_size: Some(model.size()), steps: Some(steps), ..Outcome::default() };
    if let Some(p) = out {
        write_atomic(p, &write_jsonl(&model))?;
        o.outputs.push(p.to_path_buf());
    }
    if let (Some(f), Some(p)) = (trace_file, trace) {
        f.commit()?;
        o.outputs.push(p.to_path_buf());
    }
    if !quiet {
        print_json(&json!({
            "verdict": true,
            "seed_size": seed.c_minus.size(),
            "size": model.size(),
            "steps": steps,
        }));
    }
    Ok(o)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Logic {
    Gftg,
    Gfutg,
}

pub fn finsat(input: &Path, logic: Logic, budgets: &FinsatBudgets, certificate: Option<&Path>, quiet: bool) -> Result<Outcome> {
    let doc = read_document(Some(input))?;
    let report = match logic {
        Logic::Gftg => decide_finsat_gftg(&doc.formula, &doc.signature, budgets),
        Logic::Gfutg => decide_finsat_gfutg(&doc.formula, &doc.signature, budgets),
    };
    let size = report.certificate.as_ref().map(Structure::size);
    let mut o = Outcome { verdict: Some(report.satisfiable), model_size: size, ..Outcome::default() };
    if !quiet {
        print_json(&json!({
            "satisfiable": report.satisfiable,
            "verified": report.verified,
            "kind": report.kind,
            "size": size,
            "disjuncts": report.disjuncts,
            "candidates": report.candidates,
            "note": report.note,
        }));
        if let (Some(p), Some(c)) = (certificate, report.certificate.as_ref().filter(|_| report.verified)) {
            write_atomic(p, &write_jsonl(c))?;
            o.outputs.push(p.to_path_buf());
        }
    }
    Ok(o)
}
