//! Command-line front end: configuration, experiment dispatch and report
//! files.

pub mod config;
pub mod experiments;
pub mod functions;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

use crate::config::Config;
use crate::experiments::{RunError, SUBCOMMANDS};
use crate::output::Manifest;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "czo", version, about = "Singular integral operators with a curve singularity")]
struct Cli {
    /// Experiment to run.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUBCOMMANDS))]
    subcommand: String,
    /// `key = value` file read before the overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving the reports.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads; falls back to CZO_THREADS, then the core count.
    #[arg(long)]
    threads: Option<usize>,
    /// `key=value` overrides.
    overrides: Vec<String>,
}

fn threads(flag: Option<usize>) -> Result<usize, String> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("CZO_THREADS") {
        Ok(v) => v.trim().parse().map_err(|e| format!("CZO_THREADS=`{v}`: {e}")),
        Err(_) => Ok(0),
    }
}

fn load(cli: &Cli) -> Result<Config, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            Config::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => Config::default(),
    };
    cfg.apply_overrides(&cli.overrides).map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// Runs one invocation and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let setup = (|| {
        let cfg = load(&cli)?;
        let n = threads(cli.threads)?;
        std::fs::create_dir_all(&cli.out).map_err(|e| format!("{}: {e}", cli.out.display()))?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| e.to_string())?;
        Ok::<_, String>((cfg, pool))
    })();
    let (cfg, pool) = match setup {
        Ok(v) => v,
        Err(e) => {
            eprintln!("czo: {e}");
            return EXIT_ERROR;
        }
    };

    let start = Instant::now();
    let result = pool.install(|| experiments::run(&cli.subcommand, &cfg, &cli.out));
    let wall = start.elapsed().as_secs_f64();
    let (code, status, files) = match result {
        Ok(o) if o.passed => (EXIT_PASS, "pass".to_string(), o.files),
        Ok(o) => {
            for f in &o.failures {
                eprintln!("czo: check failed: {f}");
            }
            (EXIT_FAIL, "fail".to_string(), o.files)
        }
        Err(e) => {
            eprintln!("czo: {e}");
            let kind = match e {
                RunError::Config(_) => "config-error",
                RunError::Core(_) => "input-error",
                RunError::Io(_) => "io-error",
            };
            (EXIT_ERROR, kind.to_string(), Vec::new())
        }
    };
    let manifest = Manifest {
        subcommand: &cli.subcommand,
        config: &cfg.resolved(),
        threads: pool.current_num_threads(),
        wall_seconds: wall,
        files: &files,
        status: &status,
    };
    if let Err(e) = manifest.write(&cli.out) {
        eprintln!("czo: manifest: {e}");
        return EXIT_ERROR;
    }
    println!("{} {status} ({wall:.2} s) -> {}", cli.subcommand, cli.out.display());
    code
}
