//! `cantor-forge`: run scenario files through the cantor-core pipelines and
//! dump geometry as CSV.

pub mod config;
pub mod dump;
pub mod pipelines;
pub mod specs;

use clap::{Parser, Subcommand};
use config::{ConfigError, Scenario, DEFAULT_PRECISION_BITS, DEFAULT_SEED};
use serde::Serialize;
use serde_json::Value;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const PRECISION_ENV: &str = "CANTOR_FORGE_PRECISION_BITS";

#[derive(Parser, Debug)]
#[command(name = "cantor-forge", version, about = "Finite-depth Cantor set containment certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Run a scenario file and write its report.
    Run {
        /// scenario JSON
        config: PathBuf,
        /// report path; defaults to the scenario's `output`, else stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
        /// overrides the scenario's seed
        #[arg(long)]
        seed: Option<u64>,
        /// record wall-clock time in the report (makes it non-reproducible)
        #[arg(long)]
        timing: bool,
    },
    /// Write a CSV of the geometry held in a report or tree file.
    Dump {
        /// report or tree JSON
        input: PathBuf,
        #[arg(long, value_enum)]
        format: dump::Format,
        /// CSV path, else stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// tree level or box level; defaults to the deepest available
        #[arg(long)]
        level: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Precision {
    pub bits: u32,
    /// "env", "config" or "default"
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub pipeline: String,
    pub version: String,
    pub seed: u64,
    pub precision: Precision,
    pub inputs: Value,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub results: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

impl RunReport {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Precision from the environment value, then the scenario, then the default.
pub fn precision(env: Option<&str>, scenario: Option<u32>) -> Result<Precision, ConfigError> {
    if let Some(e) = env {
        let bits = e.trim().parse::<u32>().map_err(|err| ConfigError::field(PRECISION_ENV, err))?;
        return Ok(Precision { bits, source: "env".into() });
    }
    Ok(match scenario {
        Some(bits) => Precision { bits, source: "config".into() },
        None => Precision { bits: DEFAULT_PRECISION_BITS, source: "default".into() },
    })
}

pub fn run_scenario(s: &Scenario, seed: u64, prec: Precision, timing: bool) -> Result<RunReport, ConfigError> {
    if !(8..=4096).contains(&prec.bits) {
        return Err(ConfigError::field("precision_bits", "must lie in 8..=4096"));
    }
    let start = Instant::now();
    let ctx = pipelines::Ctx { seed, bits: prec.bits, base: &s.base_dir };
    let out = pipelines::run(s, &ctx)?;
    Ok(RunReport {
        pipeline: s.pipeline.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        precision: prec,
        inputs: s.params.clone(),
        status: if out.error.is_none() { "ok" } else { "failed" }.into(),
        error: out.error,
        results: out.results,
        timing_ms: timing.then(|| start.elapsed().as_millis()),
    })
}

fn write_out(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

/// Whole command line in, exit code out: 0 success, 2 failed
/// computation (report still written), 1 usage or configuration error.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.cmd {
        Cmd::Run { config, out, threads, seed, timing } => {
            if let Some(n) = threads {
                if n == 0 {
                    eprintln!("error: --threads must be positive");
                    return 1;
                }
                // a pool may already exist when called repeatedly in one process
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            let scenario = match config::load(&config) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return 1;
                }
            };
            let env = std::env::var(PRECISION_ENV).ok();
            let report = precision(env.as_deref(), scenario.precision_bits).and_then(|p| {
                run_scenario(&scenario, seed.or(scenario.seed).unwrap_or(DEFAULT_SEED), p, timing)
            });
            let report = match report {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return 1;
                }
            };
            let path = out.or(scenario.output.clone());
            if let Err(e) = write_out(path.as_deref(), &report.to_json()) {
                eprintln!("cannot write report: {e}");
                return 1;
            }
            if let Some(err) = &report.error {
                eprintln!("{} failed: {err}", report.pipeline);
                return 2;
            }
            0
        }
        Cmd::Dump { input, format, out, level } => {
            let v = match config::read_json(&input) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            };
            match dump::emit(&v, format, level) {
                Ok(csv) => match write_out(out.as_deref(), &csv) {
                    Ok(()) => 0,
                    Err(e) => {
                        eprintln!("cannot write csv: {e}");
                        1
                    }
                },
                Err(e) => {
                    eprintln!("error: {e}");
                    1
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_order() {
        assert_eq!(precision(Some("96"), Some(80)).unwrap(), Precision { bits: 96, source: "env".into() });
        assert_eq!(precision(None, Some(80)).unwrap().bits, 80);
        assert_eq!(precision(None, None).unwrap().source, "default");
        assert!(precision(Some("lots"), None).is_err());
    }
}
