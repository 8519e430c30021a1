//! `bsosim`: runs the simulation scenarios from JSON configs and writes CSV
//! outputs with a checksummed manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use config::{ConfigError, ScenarioConfig};
use output::{FileEntry, Manifest};
use scenarios::RunError;

#[derive(Parser)]
#[command(name = "bsosim", version, about = "Bloch-Siegert oscillation simulator")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        config: PathBuf,
        /// Output directory; overrides BSOSIM_OUT and the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario once per value of a numeric config parameter.
    Sweep {
        config: PathBuf,
        /// Dotted path of the parameter, e.g. `field.g_dc`.
        #[arg(long)]
        param: String,
        /// Comma-separated values; an empty list does nothing.
        #[arg(
            long,
            allow_hyphen_values = true,
            conflicts_with = "range",
            required_unless_present = "range"
        )]
        values: Option<String>,
        /// `START STOP COUNT`: COUNT evenly spaced values in [START, STOP).
        #[arg(long, num_args = 3, value_names = ["START", "STOP", "COUNT"], allow_hyphen_values = true)]
        range: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn output_dir(flag: Option<PathBuf>, cfg: &ScenarioConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os("BSOSIM_OUT").map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("bsosim-out"))
}

fn load_resolved(path: &Path) -> Result<(Value, ScenarioConfig), RunError> {
    let (value, mut cfg) = config::load(path)?;
    scenarios::resolve(&mut cfg)?;
    Ok((value, cfg))
}

/// Resolved config as recorded in manifests; the output location is left
/// out so that manifests do not depend on where a run was written.
fn recorded(cfg: &ScenarioConfig) -> ScenarioConfig {
    ScenarioConfig {
        output_dir: None,
        ..cfg.clone()
    }
}

fn run(path: &Path, out: Option<PathBuf>) -> Result<(), RunError> {
    let (_, cfg) = load_resolved(path)?;
    let dir = output_dir(out, &cfg);
    log::info!("running {} into {}", cfg.scenario.name(), dir.display());
    let result = scenarios::run(&cfg)?;
    output::write_run(&dir, recorded(&cfg), &result)?;
    Ok(())
}

fn sweep_values(values: Option<String>, range: Option<Vec<f64>>) -> Result<Vec<f64>, ConfigError> {
    let Some(r) = range else {
        return values
            .unwrap_or_default()
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| ConfigError::new("--values", format!("{v:?}: {e}")))
            })
            .collect();
    };
    let (start, stop, count) = (r[0], r[1], r[2]);
    if !(count >= 0.0) || count.fract() != 0.0 {
        return Err(ConfigError::new(
            "--range",
            format!("COUNT must be a whole number, got {count}"),
        ));
    }
    let n = count as usize;
    Ok((0..n).map(|k| start + (stop - start) * k as f64 / n as f64).collect())
}

#[derive(Serialize)]
struct SweepRecord {
    base: ScenarioConfig,
    param: String,
    values: Vec<f64>,
}

fn sweep(
    path: &Path,
    param: &str,
    values: Vec<f64>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
) -> Result<(), RunError> {
    let (base_value, base) = load_resolved(path)?;
    if values.is_empty() {
        log::info!("empty value list, nothing to do");
        return Ok(());
    }
    // Every point is checked before anything runs.
    let configs = values
        .iter()
        .map(|&x| {
            let mut v = base_value.clone();
            config::set_leaf(&mut v, param, x)?;
            let mut cfg = config::from_value(v)?;
            scenarios::resolve(&mut cfg)?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>, RunError>>()?;

    let dir = output_dir(out, &base);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Io(e.to_string()))?;
    log::info!("sweeping {param} over {} values into {}", values.len(), dir.display());
    let results: Vec<_> = pool.install(|| configs.par_iter().map(scenarios::run).collect());

    let mut files: Vec<FileEntry> = Vec::new();
    let mut rows = Vec::new();
    for ((x, cfg), result) in values.iter().zip(&configs).zip(results) {
        let result = result?;
        let key = format!("{param}={x}");
        let entries = output::write_run(&dir.join(&key), recorded(cfg), &result)?;
        files.extend(entries.into_iter().map(|e| FileEntry {
            path: format!("{key}/{}", e.path),
            ..e
        }));
        rows.push((*x, result.summary));
    }

    let mut buf = Vec::new();
    let mut header = vec![param];
    header.extend(rows[0].1.iter().map(|(k, _)| *k));
    bsosim::csv::write_header(&mut buf, &header)?;
    for (x, summary) in &rows {
        let mut row = vec![*x];
        row.extend(summary.iter().map(|(_, v)| *v));
        bsosim::csv::write_row(&mut buf, &row)?;
    }
    std::fs::write(dir.join("summary.csv"), &buf)?;
    files.insert(
        0,
        FileEntry {
            path: "summary.csv".into(),
            sha256: output::sha256_hex(&buf),
        },
    );
    let record = SweepRecord {
        base: recorded(&base),
        param: param.to_string(),
        values,
    };
    Manifest::new(record, files).write(&dir)?;
    Ok(())
}

fn validate(path: &Path) -> Result<(), RunError> {
    let (_, cfg) = load_resolved(path)?;
    let resolved = serde_json::to_value(recorded(&cfg)).map_err(|e| RunError::Io(e.to_string()))?;
    println!(
        "{}",
        json!({ "ok": true, "scenario": cfg.scenario.name(), "resolved": resolved })
    );
    Ok(())
}

fn report(e: RunError) -> ExitCode {
    let (code, body) = match e {
        RunError::Config(c) => (2, json!({ "error": "config", "field": c.field, "message": c.message })),
        RunError::Numeric(m) => (3, json!({ "error": "numeric", "message": m })),
        RunError::Io(m) => (1, json!({ "error": "io", "message": m })),
    };
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Sweep {
            config,
            param,
            values,
            range,
            out,
            jobs,
        } => sweep_values(values, range)
            .map_err(RunError::from)
            .and_then(|v| sweep(&config, &param, v, out, jobs)),
        Command::Validate { config } => validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}
