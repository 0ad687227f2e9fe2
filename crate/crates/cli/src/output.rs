use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug)]
pub enum CliError {
    Core(weyl_core::Error),
    Usage(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<weyl_core::Error> for CliError {
    fn from(e: weyl_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub params: Value,
    pub seed: Option<u64>,
    pub worker_count: usize,
    pub version: &'static str,
    pub wall_time: Option<f64>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    manifest: &'a RunManifest,
    result: &'a T,
}

/// Timing and identity of one run.
pub struct Run {
    subcommand: &'static str,
    params: Value,
    seed: Option<u64>,
    started: Instant,
    record_time: bool,
}

impl Run {
    pub fn new<P: Serialize>(subcommand: &'static str, params: &P, seed: Option<u64>, record_time: bool) -> Self {
        Self {
            subcommand,
            params: serde_json::to_value(params).unwrap_or(Value::Null),
            seed,
            started: Instant::now(),
            record_time,
        }
    }

    pub fn manifest(&self) -> RunManifest {
        RunManifest {
            subcommand: self.subcommand,
            params: self.params.clone(),
            seed: self.seed,
            worker_count: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION"),
            wall_time: self.record_time.then(|| self.started.elapsed().as_secs_f64()),
        }
    }

    pub fn envelope<T: Serialize>(&self, result: &T) -> CliResult<String> {
        let manifest = self.manifest();
        let mut s = serde_json::to_string_pretty(&Envelope {
            manifest: &manifest,
            result,
        })
        .map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes `text` to `path`, or stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
