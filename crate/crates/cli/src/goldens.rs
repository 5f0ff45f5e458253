use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;

use crate::error::CliError;
use crate::jobs::{self, JobSpec};
use crate::Cli;

/// One golden file and the invocation that produces it.
#[derive(Debug, Deserialize)]
pub struct Entry {
    pub file: String,
    pub args: Vec<String>,
}

#[derive(Debug, Default)]
pub struct Report {
    pub checked: usize,
    pub diffs: Vec<String>,
    pub written: Vec<String>,
}

impl Report {
    pub fn render(&self) -> String {
        let mut s = String::new();
        for d in &self.diffs {
            writeln!(s, "diff: {d}").unwrap();
        }
        for w in &self.written {
            writeln!(s, "wrote: {w}").unwrap();
        }
        writeln!(
            s,
            "{} goldens, {} differences",
            self.checked,
            self.diffs.len()
        )
        .unwrap();
        s
    }
}

pub fn default_dir() -> PathBuf {
    std::env::var_os("ZHAT_GOLDEN_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("goldens"))
}

fn read_manifest(dir: &Path) -> Result<Vec<Entry>, CliError> {
    let path = dir.join("manifest.json");
    let s = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&s)
        .map_err(|e| CliError::Invalid(format!("Manifest: {}: {e}", path.display())))
}

/// Recomputes every golden in `dir`. With `check`, nothing is written.
pub fn regenerate(dir: &Path, check: bool) -> Result<Report, CliError> {
    let mut report = Report::default();
    for entry in read_manifest(dir)? {
        let argv = std::iter::once("zhat".to_string()).chain(entry.args.iter().cloned());
        let cli = Cli::try_parse_from(argv)
            .map_err(|e| CliError::Invalid(format!("{}: {}", entry.file, e.to_string().trim())))?;
        let (kind, opts) = cli
            .command
            .job()
            .ok_or_else(|| CliError::Invalid(format!("{}: not a job command", entry.file)))?;
        let spec = JobSpec::new(kind, opts, Some(dir))?;
        let fresh = jobs::run(&spec)?.render(true);
        let path = dir.join(&entry.file);
        let old = std::fs::read_to_string(&path).ok();
        report.checked += 1;
        if old.as_deref() != Some(fresh.as_str()) {
            report.diffs.push(entry.file.clone());
            if !check {
                std::fs::write(&path, &fresh).map_err(|e| CliError::io(&path, e))?;
                report.written.push(entry.file.clone());
            }
        }
    }
    Ok(report)
}
