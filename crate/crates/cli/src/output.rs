//! CSV and run-manifest emission.
//!
//! Result CSVs contain no timestamps or environment data, so rerunning the
//! same configuration reproduces them byte for byte. Provenance lives in a
//! manifest written next to each CSV.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use irsnet::sim::{SimConfig, SweepRow, TrialResult};
use serde::Serialize;

use crate::CliError;

/// Formats a float with 17 significant digits so that parsing the text
/// recovers the exact bit pattern, independent of locale.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV row per (trial, scheme), trials outermost, schemes in
/// configuration order.
pub fn trial_csv(results: &[TrialResult]) -> String {
    let mut out = String::from(
        "trial,scheme,sum_rate_bps_per_hz,candidate_evaluations,proposals,phase1_rounds,phase2_rounds\n",
    );
    for trial in results {
        for s in &trial.schemes {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                trial.trial,
                s.scheme,
                fmt_float(s.sum_rate_bps_per_hz),
                s.candidate_evaluations,
                s.proposals,
                s.phase1_rounds,
                s.phase2_rounds
            ));
        }
    }
    out
}

/// One CSV row per (sweep value, scheme) in sweep order.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "sweep_variable,sweep_value,scheme,mean_sum_rate_bps_per_hz,stderr,trials,mean_candidate_evaluations,mean_proposals\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.sweep_variable,
            fmt_float(row.sweep_value),
            row.scheme,
            fmt_float(row.mean_sum_rate_bps_per_hz),
            fmt_float(row.stderr),
            row.trials,
            fmt_float(row.mean_candidate_evaluations),
            fmt_float(row.mean_proposals)
        ));
    }
    out
}

/// Everything needed to reproduce a result file exactly: the resolved
/// configuration, the tool version, and the seed. The timestamp records
/// when the run happened and is the only non-reproducible field.
#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    tool_version: &'static str,
    command: &'a str,
    seed: u64,
    timestamp_unix_s: u64,
    outputs: Vec<String>,
    config: &'a SimConfig,
}

/// Path of the manifest written alongside `csv_path`.
pub fn manifest_path(csv_path: &Path) -> std::path::PathBuf {
    let mut name = csv_path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    csv_path.with_file_name(name)
}

/// Writes the CSV and its sibling manifest.
pub fn write_result(
    csv_path: &Path,
    csv: &str,
    config: &SimConfig,
    command: &str,
) -> Result<(), CliError> {
    let write = |path: &Path, data: &str| {
        fs::write(path, data)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
    };
    write(csv_path, csv)?;

    let timestamp_unix_s =
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = RunManifest {
        tool_version: irsnet::VERSION,
        command,
        seed: config.seed,
        timestamp_unix_s,
        outputs: vec![csv_path.display().to_string()],
        config,
    };
    let body = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Runtime(format!("cannot serialize manifest: {e}")))?;
    write(&manifest_path(csv_path), &body)
}
