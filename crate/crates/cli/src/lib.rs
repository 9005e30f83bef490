//! Command-line front end for occulp: reads a JSON run configuration, runs one
//! experiment and writes CSV/JSON artifacts.
//!
//! Exit codes: 0 on success, 1 when the experiment fails (including failed
//! `verify` checks), 2 when the configuration is rejected. Every failure writes
//! `diagnostic.json` to the output directory when one is known, and always
//! prints the diagnostic to stderr.

pub mod config;
pub mod run;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::json;

use crate::config::{parse_document, ConfigError, Experiment};

pub const EXIT_OK: i32 = 0;
pub const EXIT_EXPERIMENT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const DIAGNOSTIC_FILE: &str = "diagnostic.json";

#[derive(Debug, Parser)]
#[command(name = "occulp", version, about = "Occupational-measure LP experiments for discrete-time optimal control")]
pub struct Args {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Experiment to run (overrides `experiment` in the config).
    #[arg(long)]
    pub experiment: Option<String>,
    /// Print nothing on success.
    #[arg(long)]
    pub quiet: bool,
}

fn diagnose(dir: Option<&Path>, kind: &str, code: i32, message: &str, key_path: Option<&str>) -> i32 {
    let doc = json!({
        "status": "error",
        "kind": kind,
        "exit_code": code,
        "message": message,
        "key_path": key_path,
    });
    let text = serde_json::to_string_pretty(&doc).unwrap() + "\n";
    eprint!("{text}");
    if let Some(dir) = dir {
        if fs::create_dir_all(dir).and_then(|_| fs::write(dir.join(DIAGNOSTIC_FILE), &text)).is_err() {
            eprintln!("could not write {}", dir.join(DIAGNOSTIC_FILE).display());
        }
    }
    code
}

fn config_failure(dir: Option<&Path>, err: &ConfigError) -> i32 {
    diagnose(dir, "config", EXIT_CONFIG, &err.to_string(), err.path.as_deref())
}

fn thread_cap() -> Result<Option<usize>, ConfigError> {
    match std::env::var("OCCULP_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(ConfigError {
                path: None,
                message: format!("OCCULP_THREADS must be a positive integer, got \"{v}\""),
            }),
        },
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let early_dir = args.output.as_deref();
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            let err = ConfigError {
                path: None,
                message: format!("cannot read {}: {e}", args.config.display()),
            };
            return config_failure(early_dir, &err);
        }
    };
    let mut config = match parse_document(&text) {
        Ok(c) => c,
        Err(e) => return config_failure(early_dir, &e),
    };
    if let Some(dir) = &args.output {
        config.output_dir = dir.clone();
    }
    let dir = config.output_dir.clone();
    if let Some(name) = &args.experiment {
        match Experiment::from_name(name) {
            Some(e) => config.experiment = e,
            None => {
                let known: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
                let err = ConfigError {
                    path: Some("experiment".into()),
                    message: format!("unknown experiment \"{name}\" (known: {})", known.join(", ")),
                };
                return config_failure(Some(&dir), &err);
            }
        }
    }
    if let Err(e) = config.validate() {
        return config_failure(Some(&dir), &e);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    match thread_cap() {
        Ok(Some(n)) => pool = pool.num_threads(n),
        Ok(None) => {}
        Err(e) => return config_failure(Some(&dir), &e),
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => return diagnose(Some(&dir), "experiment", EXIT_EXPERIMENT, &e.to_string(), None),
    };
    match pool.install(|| run::execute(&config)) {
        Ok(summary) if summary.passed => {
            let _ = fs::remove_file(dir.join(DIAGNOSTIC_FILE));
            if !args.quiet {
                println!("{}: {}", summary.experiment, summary.headline);
                println!("wrote {} files to {}", summary.files.len(), summary.output_dir.display());
            }
            EXIT_OK
        }
        Ok(summary) => diagnose(Some(&dir), "experiment", EXIT_EXPERIMENT, &summary.headline, None),
        Err(e) => diagnose(Some(&dir), "experiment", EXIT_EXPERIMENT, &format!("{e:#}"), None),
    }
}
