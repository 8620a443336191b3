//! JSON summaries and CSV series, written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use rdslab_core::PathMetadata;

use crate::config::{ExperimentConfig, OutputFormat, SnapEntry};
use crate::experiments::{Check, Outcome};
use crate::{Retry, RunError, RunOutcome};

/// Version of the JSON summary layout.
pub const SCHEMA_VERSION: u32 = 1;

const ARTIFACT_VERSION: &str = concat!("rdslab ", env!("CARGO_PKG_VERSION"));

#[derive(Serialize)]
struct Metadata {
    generated_at_unix: u64,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    artifact_version: &'static str,
    experiment: &'static str,
    seed: u64,
    noise_paths: &'a [PathMetadata],
    config: &'a ExperimentConfig,
    snapping: &'a [SnapEntry],
    retries: &'a [Retry],
    results: &'a Value,
    checks: &'a [Check],
    passed: bool,
    files: Vec<String>,
    metadata: Metadata,
}

/// Shortest decimal that parses back to `x`.
pub fn format_number(x: f64) -> String {
    format!("{x}")
}

fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, RunError> {
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", dir.join(name).display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(target)
}

pub(crate) fn emit(
    dir: &Path,
    cfg: &ExperimentConfig,
    snaps: &[SnapEntry],
    retries: &[Retry],
    outcome: Outcome,
) -> Result<RunOutcome, RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    let name = cfg.experiment.name();
    let mut files = Vec::new();
    if cfg.output.formats.contains(&OutputFormat::Csv) {
        for (file, contents) in &outcome.csv {
            files.push(write_atomic(dir, file, contents.as_bytes())?);
        }
    }
    let passed = outcome.checks.iter().all(|c| c.passed);
    let generated_at_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        artifact_version: ARTIFACT_VERSION,
        experiment: name,
        seed: cfg.noise.seed,
        noise_paths: &outcome.noise,
        config: cfg,
        snapping: snaps,
        retries,
        results: &outcome.results,
        checks: &outcome.checks,
        passed,
        files: files
            .iter()
            .filter_map(|p| p.file_name())
            .map(|f| f.to_string_lossy().into_owned())
            .collect(),
        metadata: Metadata { generated_at_unix },
    };
    let mut json = serde_json::to_string_pretty(&summary).map_err(|e| RunError::Runtime(e.to_string()))?;
    json.push('\n');
    let summary_path = write_atomic(dir, &format!("{name}_summary.json"), json.as_bytes())?;
    Ok(RunOutcome {
        experiment: cfg.experiment,
        checks: outcome.checks,
        passed,
        summary_path,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_number(0.1), "0.1");
    }

    #[test]
    fn atomic_write_replaces_existing_file() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.txt", b"one").unwrap();
        let p = write_atomic(dir.path(), "a.txt", b"two").unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
