//! `triguard`: parse, classify, normalise, check, find, saturate and decide guarded
//! sentences from the command line.
//!
//! Exit codes: 0 on success or a positive verdict, 1 on a negative verdict, 2 on usage,
//! input or I/O errors.

mod commands;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use triguard::modelcheck::CheckMode;
use triguard::tgconstruct::FinsatBudgets;

use commands::{FindArgs, Logic, Outcome, SaturateArgs};
use io::{corpus_files, sha256_file, write_atomic, write_csv, CorpusRow, OutputRecord, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "triguard", version, about = "Guarded sentences with universal and transitive symbols")]
struct Cli {
    /// Write a JSON manifest of the run to this file.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Batch {
    /// Run on every `.gf` file of this directory and print a CSV summary.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Where to write the CSV summary in batch mode.
    #[arg(long, requires = "corpus")]
    csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Parse a document and print it in canonical form.
    Parse { input: Option<PathBuf> },
    /// Report the fragments a sentence belongs to.
    Classify { input: Option<PathBuf> },
    /// Convert a sentence to a disjunction of normal forms.
    Normalize {
        input: Option<PathBuf>,
        /// Bring every disjunct to the enhanced form for transitive guards.
        #[arg(long)]
        tg: bool,
        /// Write `disjunct_NNN.gf` files here instead of printing JSON lines.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        max_disjuncts: usize,
    },
    /// Check a structure against a sentence.
    Check {
        model: PathBuf,
        formula: PathBuf,
        #[arg(long)]
        ubiquitous: bool,
        #[arg(long)]
        transitive: bool,
    },
    /// Search for a model within a domain-size bound.
    Find {
        #[arg(required_unless_present = "corpus")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        max_size: u32,
        #[arg(long)]
        ubiquitous: bool,
        #[arg(long)]
        transitive: bool,
        #[arg(long)]
        ramified: bool,
        #[arg(long)]
        max_fact_elems: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        batch: Batch,
    },
    /// Build a finite U-biquitous model by saturating copies of a small seed.
    Saturate {
        #[arg(long, required_unless_present = "corpus")]
        phi: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        max_seed_size: u32,
        /// Accept sentences with constants.
        #[arg(long)]
        constants: bool,
        /// Treat the transitive symbols as transitive and leave their facts alone.
        #[arg(long)]
        tg: bool,
        /// Verify the preservation properties after every step.
        #[arg(long)]
        check_steps: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// One JSON record per step.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        batch: Batch,
    },
    /// Decide finite satisfiability within budgets.
    Finsat {
        #[arg(required_unless_present = "corpus")]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        logic: Logic,
        #[arg(long, default_value_t = FinsatBudgets::default().alpha_max)]
        alpha_max: usize,
        #[arg(long, default_value_t = FinsatBudgets::default().beta_max)]
        beta_max: usize,
        #[arg(long, default_value_t = FinsatBudgets::default().find_max)]
        find_max: u32,
        #[arg(long, default_value_t = FinsatBudgets::default().max_candidates)]
        max_candidates: usize,
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[command(flatten)]
        batch: Batch,
    },
    /// Rerun the command of a manifest and compare the outputs with the recorded digests.
    Replay { manifest: PathBuf },
}

fn verdict_label(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "sat",
        Some(false) => "unsat",
        None => "done",
    }
}

/// Runs `one` on each file of the corpus and writes the summary.
fn run_corpus(batch: &Batch, one: &dyn Fn(&Path) -> Result<Outcome>) -> Result<Outcome> {
    let dir = batch.corpus.as_deref().expect("batch mode");
    let mut rows = Vec::new();
    let mut failed = false;
    for path in corpus_files(dir)? {
        let start = Instant::now();
        let res = one(&path);
        let instance = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let row = match res {
            Ok(o) => CorpusRow {
                instance,
                verdict: verdict_label(o.verdict).into(),
                model_size: o.model_size,
                steps: o.steps,
                wall_ms: start.elapsed().as_millis(),
            },
            Err(e) => {
                eprintln!("{e:#}");
                failed = true;
                CorpusRow { instance, verdict: "error".into(), model_size: None, steps: None, wall_ms: start.elapsed().as_millis() }
            }
        };
        rows.push(row);
    }
    write_csv(batch.csv.as_deref(), &rows)?;
    if failed {
        bail!("some instances failed");
    }
    Ok(Outcome { outputs: batch.csv.iter().cloned().collect(), ..Outcome::default() })
}

fn execute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Parse { input } => commands::parse(input.as_deref()),
        Command::Classify { input } => commands::classify(input.as_deref()),
        Command::Normalize { input, tg, out_dir, max_disjuncts } => {
            commands::normalize(input.as_deref(), *tg, out_dir.as_deref(), *max_disjuncts)
        }
        Command::Check { model, formula, ubiquitous, transitive } => {
            commands::check(model, formula, CheckMode { ubiquitous: *ubiquitous, transitive: *transitive })
        }
        Command::Find { input, max_size, ubiquitous, transitive, ramified, max_fact_elems, seed, out, batch } => {
            let args = FindArgs {
                max_size: *max_size,
                mode: CheckMode { ubiquitous: *ubiquitous, transitive: *transitive },
                ramified: *ramified,
                max_fact_elems: *max_fact_elems,
                seed: *seed,
            };
            if batch.corpus.is_some() {
                return run_corpus(batch, &|p| commands::find(p, &args, None, true));
            }
            let input = input.as_deref().expect("required");
            let o = commands::find(input, &args, out.as_deref(), false)?;
            if o.verdict == Some(false) {
                println!("{}", json!({ "verdict": false, "max_size": max_size }));
            }
            Ok(o)
        }
        Command::Saturate { phi, max_seed_size, constants, tg, check_steps, out, trace, batch } => {
            let args =
                SaturateArgs { max_seed_size: *max_seed_size, constants: *constants, tg: *tg, check_steps: *check_steps };
            if batch.corpus.is_some() {
                return run_corpus(batch, &|p| commands::saturate(p, &args, None, None, true));
            }
            commands::saturate(phi.as_deref().expect("required"), &args, out.as_deref(), trace.as_deref(), false)
        }
        Command::Finsat { input, logic, alpha_max, beta_max, find_max, max_candidates, certificate, batch } => {
            let budgets = FinsatBudgets {
                alpha_max: *alpha_max,
                beta_max: *beta_max,
                find_max: *find_max,
                max_candidates: *max_candidates,
                ..FinsatBudgets::default()
            };
            if batch.corpus.is_some() {
                return run_corpus(batch, &|p| commands::finsat(p, *logic, &budgets, None, true));
            }
            commands::finsat(input.as_deref().expect("required"), *logic, &budgets, certificate.as_deref(), false)
        }
        Command::Replay { manifest } => replay(manifest),
    }
}

fn inputs_of(cmd: &Command) -> Vec<PathBuf> {
    match cmd {
        Command::Parse { input } | Command::Classify { input } | Command::Normalize { input, .. } => {
            input.iter().cloned().collect()
        }
        Command::Check { model, formula, .. } => vec![model.clone(), formula.clone()],
        Command::Find { input, batch, .. } | Command::Finsat { input, batch, .. } => {
            input.iter().chain(batch.corpus.iter()).cloned().collect()
        }
        Command::Saturate { phi, batch, .. } => phi.iter().chain(batch.corpus.iter()).cloned().collect(),
        Command::Replay { manifest } => vec![manifest.clone()],
    }
}

fn exit_code(o: &Outcome) -> i32 {
    if o.verdict == Some(false) {
        1
    } else {
        0
    }
}

fn replay(path: &Path) -> Result<Outcome> {
    let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))?;
    let m: RunManifest = serde_json::from_str(&text).with_context(|| format!("{}: not a manifest", path.display()))?;
    let argv = std::iter::once("triguard".to_string()).chain(m.argv.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    if matches!(cli.command, Command::Replay { .. }) {
        bail!("{}: a manifest cannot replay a replay", path.display());
    }
    let o = execute(&cli.command)?;
    let mut mismatched = Vec::new();
    for rec in &m.outputs {
        if sha256_file(&rec.path)? != rec.sha256 {
            mismatched.push(rec.path.display().to_string());
        }
    }
    let same_verdict = o.verdict == m.verdict;
    println!("{}", json!({ "replayed": m.command, "identical": mismatched.is_empty() && same_verdict, "mismatched": mismatched }));
    if !mismatched.is_empty() || !same_verdict {
        return Ok(Outcome { verdict: Some(false), ..Outcome::default() });
    }
    Ok(Outcome { verdict: Some(true), ..Outcome::default() })
}

/// Arguments without the program name and without `--manifest` and its value.
fn replay_argv(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--manifest" {
            it.next();
        } else if !a.starts_with("--manifest=") {
            out.push(a.clone());
        }
    }
    out
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Parse { .. } => "parse",
        Command::Classify { .. } => "classify",
        Command::Normalize { .. } => "normalize",
        Command::Check { .. } => "check",
        Command::Find { .. } => "find",
        Command::Saturate { .. } => "saturate",
        Command::Finsat { .. } => "finsat",
        Command::Replay { .. } => "replay",
    }
}

fn run(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let start = Instant::now();
    let result = execute(&cli.command);
    let (code, outcome) = match result {
        Ok(o) => (exit_code(&o), Some(o)),
        Err(e) => {
            eprintln!("error: {e:#}");
            (2, None)
        }
    };
    if let Some(path) = &cli.manifest {
        let outputs = outcome
            .iter()
            .flat_map(|o| o.outputs.iter())
            .map(|p| sha256_file(p).map(|h| OutputRecord { path: p.clone(), sha256: h }))
            .collect::<Result<Vec<_>>>();
        let m = outputs.map(|outputs| RunManifest {
            command: command_name(&cli.command).into(),
            argv: replay_argv(&args),
            inputs: inputs_of(&cli.command),
            config: serde_json::to_value(&cli.command).unwrap_or_default(),
            outputs,
            wall_ms: start.elapsed().as_millis(),
            exit_code: code,
            verdict: outcome.as_ref().and_then(|o| o.verdict),
        });
        let written = m.and_then(|m| write_atomic(path, &(serde_json::to_string_pretty(&m)? + "\n")));
        if let Err(e) = written {
            eprintln!("error: {e:#}");
            return 2;
        }
    }
    code
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args().collect()) as u8)
}
