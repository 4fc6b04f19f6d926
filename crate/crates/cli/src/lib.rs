//! Experiment runner: TOML configs in, artifact directories (CSV, JSON
//! certificates, binary trajectories, manifest) out.

// `!(x > 0.0)` is how parameter checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod spec;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use experiments::run_experiment;
pub use output::{write_outputs, Artifacts};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "BURGERLAB_OUT";
const DEFAULT_OUT_ROOT: &str = "burgerlab-out";

/// Exit status when any certificate fails.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for invalid input or I/O errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "burgerlab", version, about = "Viscous Burgers numerical laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment from a config file or a built-in name.
    Run {
        config: String,
        /// Output directory (default: $BURGERLAB_OUT/<experiment>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's top-level seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for the parallel kernels.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List built-in experiments, optionally filtered by name or module.
    List { filter: Option<String> },
    /// Check a config without running it.
    Validate { config: String },
}

fn out_dir(cfg: &ExperimentConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| cfg.out.clone()).unwrap_or_else(|| {
        let root = std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
        root.join(&cfg.experiment)
    })
}

fn run(
    config: &str,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    stdout: &mut dyn Write,
) -> Result<bool> {
    let mut cfg = ExperimentConfig::load_or_builtin(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let dir = out_dir(&cfg, out);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Output(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let art = pool.install(|| run_experiment(&cfg))?;
    let wall = start.elapsed().as_secs_f64();
    let manifest = write_outputs(&dir, &cfg, &art, wall, pool.current_num_threads())?;
    for c in &art.certificates {
        writeln!(stdout, "{c}")?;
    }
    for n in &art.notes {
        writeln!(stdout, "note: {n}")?;
    }
    writeln!(stdout, "artifacts: {}", dir.display())?;
    writeln!(
        stdout,
        "result: {} ({wall:.2}s)",
        if manifest.pass { "PASS" } else { "FAIL" }
    )?;
    Ok(manifest.pass)
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => run(&config, out, seed, threads, stdout),
        Command::List { filter } => {
            for e in catalog::list(filter.as_deref()) {
                let _ = writeln!(
                    stdout,
                    "{:<16} [{}] {}; checks: {}",
                    e.name, e.module, e.description, e.exercises
                );
            }
            Ok(true)
        }
        Command::Validate { config } => ExperimentConfig::load_or_builtin(&config)
            .and_then(|cfg| cfg.validate())
            .map(|()| {
                let _ = writeln!(stdout, "ok: {config}");
                true
            }),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}
