//! Experiment harness: closed-schema configuration, study orchestration on a
//! bounded worker pool, and deterministic artifact emission.

pub mod config;
pub mod schema;
pub mod studies;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use config::ExperimentConfig;
use studies::StudyResult;
use svi_core::report::Verdict;

/// Exit codes: 0 pass, 1 verdict fail, 2 config error, 3 runtime error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass,
    VerdictFail,
    ConfigError,
    RuntimeError,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Pass => 0,
            ExitStatus::VerdictFail => 1,
            ExitStatus::ConfigError => 2,
            ExitStatus::RuntimeError => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct Provenance<'a> {
    command: &'a str,
    resolved_config: &'a ExperimentConfig,
    master_seed: u64,
    workers: usize,
    version: &'static str,
    wall_time_s: f64,
    artifacts: Vec<String>,
    verdicts: &'a [Verdict],
    partial: bool,
}

pub struct RunOptions {
    pub command: String,
    pub config_text: String,
    pub seed_override: Option<u64>,
    pub workers_override: Option<usize>,
    pub out_override: Option<PathBuf>,
}

/// Serializes a report to disk in the requested format ("csv" or "json");
/// the two renderings parse back to the same table.
pub fn write_report(
    report: &svi_core::report::ConvergenceReport,
    path: &Path,
    format: &str,
) -> std::io::Result<()> {
    let contents = match format {
        "csv" => report.csv_string(),
        "json" => report
            .json_string()
            .map_err(|e| std::io::Error::other(e.to_string()))?,
        other => {
            return Err(std::io::Error::other(format!(
                "unknown report format {other}; expected csv or json"
            )))
        }
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)
}

/// Effective seed precedence: --seed flag, then the SVI_SEED environment
/// variable (decimal 64-bit), then the config value.
fn effective_seed(cfg: &ExperimentConfig, flag: Option<u64>) -> Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("SVI_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map_err(|e| format!("SVI_SEED must be a decimal 64-bit integer: {e}")),
        Err(_) => Ok(cfg.mc.master_seed as u64),
    }
}

fn dispatch(command: &str, cfg: &ExperimentConfig, seed: u64) -> svi_core::Result<StudyResult> {
    match command {
        "simulate" => studies::run_simulate(cfg, seed),
        "converge-dt" => studies::run_converge_dt(cfg, seed),
        "converge-yosida" => studies::run_converge_yosida(cfg, seed),
        "picard" => studies::run_picard(cfg, seed),
        "averaging-sweep" => studies::run_averaging_sweep(cfg, seed),
        "spde" => studies::run_spde(cfg, seed),
        "particles" => studies::run_particles(cfg, seed),
        "proptest" => studies::run_proptest(cfg, seed),
        other => Err(svi_core::SviError::InvalidSpec(format!("unknown command {other}"))),
    }
}

/// Parses, validates, executes, and writes artifacts. Prints verdict lines
/// and errors to the given writers.
pub fn run(opts: &RunOptions) -> ExitStatus {
    let cfg = match config::parse_config(&opts.config_text) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!("configuration rejected with {} error(s):", errors.len());
            for e in &errors {
                eprintln!("  {e}");
            }
            return ExitStatus::ConfigError;
        }
    };
    if !config::COMMANDS.contains(&opts.command.as_str()) {
        eprintln!("unknown command {}", opts.command);
        return ExitStatus::ConfigError;
    }
    if let Some(declared) = &cfg.command {
        if declared != &opts.command {
            eprintln!(
                "config declares command = {declared}, but {} was invoked",
                opts.command
            );
            return ExitStatus::ConfigError;
        }
    }
    let seed = match effective_seed(&cfg, opts.seed_override) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitStatus::ConfigError;
        }
    };
    let workers = opts.workers_override.unwrap_or(cfg.mc.workers.max(0) as usize);
    let out_dir = opts
        .out_override
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.directory));

    let started = Instant::now();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("worker pool construction failed: {e}");
            return ExitStatus::RuntimeError;
        }
    };
    let result = pool.install(|| dispatch(&opts.command, &cfg, seed));
    let wall = started.elapsed().as_secs_f64();

    let (study, partial, status) = match result {
        Ok(study) => {
            let ok = study.verdicts.iter().all(|v| v.pass);
            (study, false, if ok { ExitStatus::Pass } else { ExitStatus::VerdictFail })
        }
        Err(e) => {
            eprintln!("runtime failure: {e}");
            (
                StudyResult { files: Vec::new(), verdicts: Vec::new() },
                true,
                ExitStatus::RuntimeError,
            )
        }
    };

    for v in &study.verdicts {
        println!(
            "[{}] {} - {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.criterion,
            v.detail
        );
    }

    if let Err(e) = write_artifacts(&out_dir, &opts.command, &cfg, seed, workers, wall, &study, partial)
    {
        eprintln!("artifact write failed: {e}");
        return ExitStatus::RuntimeError;
    }
    status
}

#[allow(clippy::too_many_arguments)]
fn write_artifacts(
    out_dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    seed: u64,
    workers: usize,
    wall: f64,
    study: &StudyResult,
    partial: bool,
) -> std::io::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    for (name, contents) in &study.files {
        std::fs::write(out_dir.join(name), contents)?;
    }
    let provenance = Provenance {
        command,
        resolved_config: cfg,
        master_seed: seed,
        workers,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s: wall,
        artifacts: study.files.iter().map(|(n, _)| n.clone()).collect(),
        verdicts: &study.verdicts,
        partial,
    };
    let text = serde_json::to_string_pretty(&provenance)
        .map_err(|e| std::io::Error::other(format!("provenance serialization: {e}")))?;
    std::fs::write(out_dir.join("provenance.json"), text)?;
    Ok(())
}
