//! Command-line entry point: `mopkit <command> <config.json> [flags]`.
//!
//! Exit codes: 0 success, 1 validation error, 2 numeric failure,
//! 3 verification failure.

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use commands::Ctx;
use config::{Level, LoadedConfig};
use manifest::{sha256_hex, RunManifest};

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Verification(String),
    #[error("{0}")]
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numeric(_) | Failure::Io(_) => 2,
            Failure::Verification(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mopkit", version, about = "Multiple orthogonal polynomials, MOP ensembles and equilibrium problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Experiment config (JSON).
    pub config: PathBuf,
    /// Output directory; overrides the config's "output" (default: out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid size for kernel, density and equilibrium computations.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Kept Monte Carlo samples.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Type II polynomials with roots and orthogonality residuals.
    Mop(RunArgs),
    /// Type I polynomials with normalization residuals.
    #[command(name = "typeI", alias = "type1")]
    TypeI(RunArgs),
    /// Correlation kernel on a grid.
    Kernel(RunArgs),
    /// Mean eigenvalue density on a grid.
    Density(RunArgs),
    /// MCMC samples of the ensemble.
    Sample(RunArgs),
    /// Oracle and Monte Carlo checks with a pass/fail report.
    Verify(RunArgs),
    /// Vector equilibrium measures.
    Equilibrium(RunArgs),
    /// Zero counting measures against equilibrium along a schedule.
    Compare(RunArgs),
    /// Check a config without running anything.
    Validate {
        config: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mop(_) => "mop",
            Command::TypeI(_) => "typeI",
            Command::Kernel(_) => "kernel",
            Command::Density(_) => "density",
            Command::Sample(_) => "sample",
            Command::Verify(_) => "verify",
            Command::Equilibrium(_) => "equilibrium",
            Command::Compare(_) => "compare",
            Command::Validate { .. } => "validate",
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    run(cli.command)
}

pub fn run(command: Command) -> i32 {
    let name = command.name();
    match command {
        Command::Validate { config } => validate(&config),
        Command::Mop(a) => execute(name, a, commands::mop),
        Command::TypeI(a) => execute(name, a, commands::type1),
        Command::Kernel(a) => execute(name, a, commands::kernel_grid),
        Command::Density(a) => execute(name, a, commands::density),
        Command::Sample(a) => execute(name, a, commands::sample),
        Command::Verify(a) => execute(name, a, commands::verify),
        Command::Equilibrium(a) => execute(name, a, commands::equilibrium),
        Command::Compare(a) => execute(name, a, commands::compare),
    }
}

fn validate(path: &Path) -> i32 {
    let loaded = match config::load(path) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("mopkit validate: {e}");
            return 1;
        }
    };
    let diags = config::validate(&loaded);
    for d in &diags {
        println!("{d}");
    }
    if diags.iter().any(|d| d.level == Level::Error) {
        1
    } else {
        0
    }
}

/// Hash of the parsed config, the resolved system and the effective overrides.
fn config_hash(loaded: &LoadedConfig, a: &RunArgs, seed: u64) -> String {
    let doc = serde_json::json!({
        "config": loaded.config,
        "system": loaded.system,
        "seed": seed,
        "grid": a.grid,
        "samples": a.samples,
    });
    sha256_hex(&serde_json::to_vec(&doc).expect("config serializes"))
}

fn execute(name: &str, a: RunArgs, f: fn(&mut Ctx) -> Result<(), Failure>) -> i32 {
    let fail = |e: &Failure| {
        eprintln!("mopkit {name}: {e}");
        e.exit_code()
    };
    let loaded = match config::load(&a.config) {
        Ok(l) => l,
        Err(e) => return fail(&e.into()),
    };
    let diags = config::validate(&loaded);
    for d in &diags {
        if d.level == Level::Error || !a.quiet {
            eprintln!("{d}");
        }
    }
    if diags.iter().any(|d| d.level == Level::Error) {
        return fail(&Failure::Validation("config is invalid".into()));
    }
    let ws = match loaded.system.build() {
        Ok(ws) => ws,
        Err(e) => return fail(&e.into()),
    };
    let seed = a
        .seed
        .or(loaded.config.seed)
        .or(loaded.config.sampler.as_ref().map(|s| s.seed))
        .unwrap_or(0);
    let out = a
        .out
        .clone()
        .or_else(|| loaded.config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&out) {
        return fail(&Failure::Io(format!("cannot create {}: {e}", out.display())));
    }
    let manifest = RunManifest::start(name, &a.config, config_hash(&loaded, &a, seed), seed);
    let mut ctx = Ctx {
        loaded,
        ws,
        out,
        seed,
        grid: a.grid,
        samples: a.samples,
        quiet: a.quiet,
        manifest,
    };
    let t = Instant::now();
    let r = f(&mut ctx);
    ctx.manifest.record(name, t, &r);
    let code = r.as_ref().err().map_or(0, Failure::exit_code);
    ctx.manifest.finish(code);
    let written = serde_json::to_string_pretty(&ctx.manifest)
        .map_err(|e| e.to_string())
        .and_then(|s| std::fs::write(ctx.out.join("manifest.json"), s + "\n").map_err(|e| e.to_string()));
    if let Err(e) = r {
        return fail(&e);
    }
    if let Err(e) = written {
        return fail(&Failure::Io(format!("cannot write manifest: {e}")));
    }
    if !a.quiet {
        eprintln!("wrote {} file(s) to {}", ctx.manifest.outputs.len() + 1, ctx.out.display());
    }
    0
}
