//! Reading inputs, atomic artifact writing and run manifests.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use triguard::syntax::{parse_document, Document};

/// Reads a file, or standard input for `-` or no path.
pub fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) if p != Path::new("-") => fs::read_to_string(p).with_context(|| format!("{}: cannot read", p.display())),
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("<stdin>: cannot read")?;
            Ok(s)
        }
    }
}

pub fn display_name(path: Option<&Path>) -> String {
    match path {
        Some(p) if p != Path::new("-") => p.display().to_string(),
        _ => "<stdin>".into(),
    }
}

/// Parses a document, prefixing errors with the file name.
pub fn read_document(path: Option<&Path>) -> Result<Document> {
    let text = read_input(path)?;
    parse_document(&text).map_err(|e| anyhow::anyhow!("{}: {e}", display_name(path)))
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}

/// A file that appears at its final path only when committed.
pub struct AtomicFile {
    path: PathBuf,
    temp: PathBuf,
    out: BufWriter<File>,
}

impl AtomicFile {
    pub fn create(path: &Path) -> Result<AtomicFile> {
        let temp = temp_path(path);
        let file = File::create(&temp).with_context(|| format!("{}: cannot create", temp.display()))?;
        Ok(AtomicFile { path: path.to_path_buf(), temp, out: BufWriter::new(file) })
    }

    pub fn writer(&mut self) -> &mut BufWriter<File> {
        &mut self.out
    }

    pub fn commit(mut self) -> Result<()> {
        self.out.flush().with_context(|| format!("{}: cannot write", self.temp.display()))?;
        fs::rename(&self.temp, &self.path).with_context(|| format!("{}: cannot write", self.path.display()))?;
        Ok(())
    }
}

impl Drop for AtomicFile {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.temp);
    }
}

pub fn write_atomic(path: &Path, data: &str) -> Result<()> {
    let mut f = AtomicFile::create(path)?;
    f.writer().write_all(data.as_bytes()).with_context(|| format!("{}: cannot write", path.display()))?;
    f.commit()
}

/// Writes to `path` atomically, or to standard output without one.
pub fn emit(path: Option<&Path>, data: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, data),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(data.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("{}: cannot read", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

/// What a run read, how it was configured, what it wrote and what it concluded.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments without the program name and without `--manifest`.
    pub argv: Vec<String>,
    pub inputs: Vec<PathBuf>,
    pub config: serde_json::Value,
    pub outputs: Vec<OutputRecord>,
    pub wall_ms: u128,
    pub exit_code: i32,
    pub verdict: Option<bool>,
}

/// One line of a batch summary.
#[derive(Clone, Debug, Serialize)]
pub struct CorpusRow {
    pub instance: String,
    pub verdict: String,
    pub model_size: Option<u32>,
    pub steps: Option<usize>,
    pub wall_ms: u128,
}

pub fn write_csv(path: Option<&Path>, rows: &[CorpusRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let data = String::from_utf8(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)?;
    emit(path, &data)
}

/// The `.gf` files of a directory in name order.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("{}: cannot list", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "gf"))
        .collect();
    out.sort();
    Ok(out)
}
