mod error;
mod goldens;
mod jobs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;
use crate::jobs::{CommandKind, JobSpec, Options};

#[derive(Parser, Debug)]
#[command(
    name = "zhat",
    version,
    about = "Exact q-series invariants of plumbed 3-manifolds and knot complements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Z_b(q) of a closed plumbed manifold, one line per class mod conjugation.
    Closed(Options),
    /// Z_0(q) of the Brieskorn sphere Sigma(b1, b2, b3).
    Brieskorn(Options),
    /// F_K(x, q) of a plumbed or builtin knot complement.
    KnotFk(Options),
    /// F_K(x, q) of a torus knot from its closed form.
    TorusFk(Options),
    /// Z_b(q) of p/r surgery on a builtin knot.
    Surgery(Options),
    /// Z_b(q) of the manifold obtained by gluing two graphs.
    Glue(Options),
    /// Normalized colored Jones polynomial J_n(q).
    Jones(Options),
    /// Quantum A-polynomial, its recursion for the slices of F_K, and optionally P_k.
    Recursion(Options),
    /// Checks the torus knot stability identity and prints the tails.
    Stability(Options),
    /// Recomputes the golden tables listed in the manifest.
    RegenerateGoldens {
        /// Report differences without writing anything.
        #[arg(long)]
        check: bool,
        /// Golden directory (default: $ZHAT_GOLDEN_DIR or the bundled one).
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

impl Command {
    /// The job kind and its options, or None for the golden harness.
    pub fn job(&self) -> Option<(CommandKind, &Options)> {
        let kind = match self {
            Command::Closed(_) => CommandKind::Closed,
            Command::Brieskorn(_) => CommandKind::Brieskorn,
            Command::KnotFk(_) => CommandKind::KnotFk,
            Command::TorusFk(_) => CommandKind::TorusFk,
            Command::Surgery(_) => CommandKind::Surgery,
            Command::Glue(_) => CommandKind::Glue,
            Command::Jones(_) => CommandKind::Jones,
            Command::Recursion(_) => CommandKind::Recursion,
            Command::Stability(_) => CommandKind::Stability,
            Command::RegenerateGoldens { .. } => return None,
        };
        let opts = match self {
            Command::Closed(o)
            | Command::Brieskorn(o)
            | Command::KnotFk(o)
            | Command::TorusFk(o)
            | Command::Surgery(o)
            | Command::Glue(o)
            | Command::Jones(o)
            | Command::Recursion(o)
            | Command::Stability(o) => o,
            Command::RegenerateGoldens { .. } => unreachable!(),
        };
        Some((kind, opts))
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match &cli.command {
        Command::RegenerateGoldens { check, dir } => {
            let dir = dir.clone().unwrap_or_else(goldens::default_dir);
            let report = goldens::regenerate(&dir, *check)?;
            print!("{}", report.render());
            Ok(if *check && !report.diffs.is_empty() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        cmd => {
            let (kind, opts) = cmd.job().expect("job command");
            let spec = JobSpec::new(kind, opts, None)?;
            let out = jobs::run(&spec)?.render(spec.json);
            match &spec.out {
                Some(path) => std::fs::write(path, out).map_err(|e| CliError::io(path, e))?,
                None => print!("{out}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
