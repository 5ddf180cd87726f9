//! `sparse-ident`: identification of sparse matrices from a single probe.
//!
//! Every run emits one JSON report `{command, params, seed, results, manifest}`
//! on stdout or at `--report`. Its `params` object is a valid `--config`, and
//! a whole report may be passed as `--config` to repeat the run.

mod commands;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{SecondsFormat, Utc};
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::commands::{bounds, coherence, phase, recover};
use crate::error::{CliError, CliResult};
use crate::output::{CommandOutput, Manifest, PendingFile, Report};

pub const SEED_ENV: &str = "SPARSE_IDENT_SEED";

#[derive(Debug, Parser)]
#[command(name = "sparse-ident", version, about = "Identify matrices that are sparse in a time-frequency dictionary")]
struct Cli {
    /// JSON file with default values for the flags (a flat object, or a previous report).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed; falls back to the config file, then SPARSE_IDENT_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for the trial harness (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coherence of a Gabor system, optionally with a Monte-Carlo tail estimate.
    Coherence(coherence::CoherenceArgs),
    /// One identification round with a chosen solver.
    Recover(recover::RecoverArgs),
    /// Phase-transition grid over (n, k).
    Phase(phase::PhaseArgs),
    /// Phase-transition grid over the number of windows r at fixed n.
    Multiwindow(phase::MultiwindowArgs),
    /// Evaluate a recovery guarantee.
    Bounds(bounds::BoundsArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Coherence(_) => "coherence",
            Command::Recover(_) => "recover",
            Command::Phase(_) => "phase",
            Command::Multiwindow(_) => "multiwindow",
            Command::Bounds(_) => "bounds",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    let config = match &cli.config {
        Some(path) => load_config(path)?,
        None => Map::new(),
    };
    let seed = resolve_seed(cli.seed, &config)?;
    let threads = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
            t
        }
        None => rayon::current_num_threads(),
    };
    let report_file = cli.report.as_deref().map(PendingFile::create).transpose()?;

    let name = cli.command.name();
    let started = Utc::now();
    let out = match cli.command {
        Command::Coherence(a) => coherence::run(merge(a, &config)?, seed)?,
        Command::Recover(a) => recover::run(merge(a, &config)?, seed)?,
        Command::Phase(a) => phase::run_phase(merge(a, &config)?, seed)?,
        Command::Multiwindow(a) => phase::run_multiwindow(merge(a, &config)?, seed)?,
        Command::Bounds(a) => bounds::run(merge(a, &config)?)?,
    };
    let finished = Utc::now();
    let CommandOutput { mut params, results, outputs, summary, failure } = out;
    if let Value::Object(map) = &mut params {
        map.insert("seed".into(), seed.into());
    }

    let report = Report {
        command: name.to_string(),
        params: params.clone(),
        seed,
        results,
        manifest: Manifest {
            tool: "sparse-ident",
            version: env!("CARGO_PKG_VERSION"),
            command: name.to_string(),
            params,
            base_seed: seed,
            threads,
            started: started.to_rfc3339_opts(SecondsFormat::Micros, true),
            finished: finished.to_rfc3339_opts(SecondsFormat::Micros, true),
            outputs,
        },
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match report_file {
        Some(file) => {
            file.finish(&json)?;
            for line in &summary {
                println!("{line}");
            }
        }
        None => print!("{json}"),
    }
    if let Some(msg) = failure {
        eprintln!("error: solver failure: {msg}");
        return Ok(3);
    }
    Ok(0)
}

fn load_config(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|source| CliError::Config { path: path.to_path_buf(), source })?;
    match value {
        // a previous report: reuse its parameters
        Value::Object(mut map) if map.get("params").is_some_and(Value::is_object) => match map.remove("params") {
            Some(Value::Object(p)) => Ok(p),
            _ => unreachable!(),
        },
        Value::Object(map) => Ok(map),
        _ => Err(CliError::Usage(format!("config file {} must hold a JSON object", path.display()))),
    }
}

fn resolve_seed(flag: Option<u64>, config: &Map<String, Value>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(v) = config.get("seed") {
        return v.as_u64().ok_or_else(|| CliError::Usage(format!("config seed must be a non-negative integer, got {v}")));
    }
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV} must be a non-negative integer, got '{s}'"))),
        Err(_) => Ok(0),
    }
}

/// Fills flags left unset on the command line from the config object.
fn merge<A: Serialize + DeserializeOwned>(args: A, config: &Map<String, Value>) -> CliResult<A> {
    let mut value = serde_json::to_value(&args).expect("arguments serialize");
    if let Value::Object(map) = &mut value {
        for (key, slot) in map.iter_mut() {
            let unset = slot.is_null() || *slot == Value::Bool(false);
            if let (true, Some(v)) = (unset, config.get(key)) {
                *slot = v.clone();
            }
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("config: {e}")))
}
