//! Driver behind the `exactgrowth` binary: configuration, dispatch and
//! output files.

pub mod config;
pub mod run;

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::json;

use config::ExperimentConfig;
use run::{dispatch, Table};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "EXACTGROWTH_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }
}

fn classify(e: exactgrowth::Error) -> Failure {
    let code = if e.is_hypothesis() {
        EXIT_HYPOTHESIS
    } else if e.is_convergence() {
        EXIT_NONCONVERGENCE
    } else {
        EXIT_CONFIG
    };
    Failure { code, message: e.to_string() }
}

fn threads() -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::config(format!("{THREADS_ENV}: not a thread count: {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn write_csv(path: &Path, table: &Table) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::config(format!("writing {}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(io)?;
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::config(format!("writing {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable summary");
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::config(format!("writing {}: {e}", path.display())))
}

/// Runs `cfg` and writes `<stem>.csv`, `<stem>.json` and
/// `<stem>.timing.json`. The summary holds no timing or thread data, so
/// equal configs give byte-identical summaries.
pub fn run(cfg: &ExperimentConfig) -> Result<i32, Failure> {
    cfg.check().map_err(Failure::config)?;
    let threads = threads()?;
    let start = Instant::now();
    let outcome = exactgrowth::par::with_threads(threads, || dispatch(cfg)).map_err(classify)?;
    let wall = start.elapsed().as_secs_f64();

    let stem = &cfg.output_path;
    if let Some(dir) = Path::new(stem).parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::config(format!("output_path: {e}")))?;
    }
    write_csv(Path::new(&format!("{stem}.csv")), &outcome.table)?;
    let summary = json!({
        "tool": "exactgrowth",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "config": cfg,
        "resolved_space": cfg.space.resolve(),
        "converged": !outcome.nonconverged,
        "results": outcome.results,
    });
    write_json(Path::new(&format!("{stem}.json")), &summary)?;
    let timing = json!({
        "wall_seconds": wall,
        "threads": if threads == 0 { "default".to_string() } else { threads.to_string() },
        "parallel": exactgrowth::par::is_parallel(),
    });
    write_json(Path::new(&format!("{stem}.timing.json")), &timing)?;
    Ok(if outcome.nonconverged { EXIT_NONCONVERGENCE } else { EXIT_OK })
}

/// Reads and parses a JSON config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("reading {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text).map_err(Failure::config)
}
