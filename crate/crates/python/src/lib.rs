//! Python bindings for the simulator.
//!
//! Structured results (trials, sweeps, fixture reports, configurations)
//! cross the boundary as JSON strings so Python callers can load them with
//! the standard library; scalar helpers and the matching primitives are
//! plain functions.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use irsnet::matching::{build_priorities, deferred_acceptance, is_stable as check_stable};
use irsnet::sim::{self, SimConfig};

fn value_err<E: std::fmt::Display>(err: E) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn runtime_err<E: std::fmt::Display>(err: E) -> PyErr {
    PyRuntimeError::new_err(err.to_string())
}

fn parse_config(config_json: &str) -> PyResult<SimConfig> {
    let config: SimConfig = serde_json::from_str(config_json).map_err(value_err)?;
    config.validate().map_err(value_err)?;
    Ok(config)
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(runtime_err)
}

/// Crate version of the underlying simulator.
#[pyfunction]
fn version() -> &'static str {
    irsnet::VERSION
}

/// The default configuration as a JSON document.
#[pyfunction]
fn default_config() -> PyResult<String> {
    to_json(&SimConfig::default())
}

/// Runs one Monte-Carlo trial and returns its per-scheme results as JSON.
#[pyfunction]
fn run_trial(config_json: &str, trial: u64) -> PyResult<String> {
    let config = parse_config(config_json)?;
    let result = sim::run_trial(&config, trial).map_err(runtime_err)?;
    to_json(&result)
}

/// Runs all configured trials and returns the result list as JSON.
#[pyfunction]
fn run_trials(config_json: &str) -> PyResult<String> {
    let config = parse_config(config_json)?;
    let results = sim::run_trials(&config).map_err(runtime_err)?;
    to_json(&results)
}

/// Runs the configured parameter sweep and returns aggregated rows as JSON.
#[pyfunction]
fn run_sweep(config_json: &str) -> PyResult<String> {
    let config = parse_config(config_json)?;
    let rows = sim::run_sweep(&config).map_err(runtime_err)?;
    to_json(&rows)
}

/// Replays the embedded reference fixtures and returns the report as JSON.
#[pyfunction]
fn run_fixtures() -> PyResult<String> {
    let report = irsnet::fixtures::run_all().map_err(runtime_err)?;
    to_json(&report)
}

/// Deferred acceptance on utility matrices: `proposer_utilities[p][r]` and
/// `responder_utilities[r][p]`. Returns each proposer's responder index,
/// or None for unmatched proposers.
#[pyfunction]
fn match_deferred_acceptance(
    proposer_utilities: Vec<Vec<f64>>,
    responder_utilities: Vec<Vec<f64>>,
) -> PyResult<Vec<Option<usize>>> {
    let pp = build_priorities(proposer_utilities).map_err(value_err)?;
    let rp = build_priorities(responder_utilities).map_err(value_err)?;
    let outcome = deferred_acceptance(&pp, &rp).map_err(value_err)?;
    Ok(outcome.proposer_partner)
}

/// Blocking-pair check of a matching against the same utility matrices.
/// Returns (stable, blocking pairs).
#[pyfunction]
fn is_stable(
    matching: Vec<Option<usize>>,
    proposer_utilities: Vec<Vec<f64>>,
    responder_utilities: Vec<Vec<f64>>,
) -> PyResult<(bool, Vec<(usize, usize)>)> {
    let pp = build_priorities(proposer_utilities).map_err(value_err)?;
    let rp = build_priorities(responder_utilities).map_err(value_err)?;
    let report = check_stable(&matching, &pp, &rp).map_err(value_err)?;
    let blocking = report.blocking.iter().map(|b| (b.proposer, b.responder)).collect();
    Ok((report.stable, blocking))
}

/// Near-field boundary `2 D² / λ` of an aperture, in meters.
#[pyfunction]
fn rayleigh_distance(aperture_m: f64, wavelength_m: f64) -> PyResult<f64> {
    irsnet::geometry::rayleigh_distance(aperture_m, wavelength_m).map_err(value_err)
}

/// Receiver noise floor in dBm from a power spectral density (dBm/Hz),
/// bandwidth (Hz), and noise figure (dB).
#[pyfunction]
fn noise_power_dbm(psd_dbm_per_hz: f64, bandwidth_hz: f64, noise_figure_db: f64) -> PyResult<f64> {
    irsnet::sinr::noise_power(psd_dbm_per_hz, bandwidth_hz, noise_figure_db).map_err(value_err)
}

/// Spectral efficiency `log2(1 + sinr)` in bit/s/Hz.
#[pyfunction]
fn rate(sinr: f64) -> f64 {
    irsnet::sinr::rate(sinr)
}

#[pymodule]
fn irsnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(run_trials, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_fixtures, m)?)?;
    m.add_function(wrap_pyfunction!(match_deferred_acceptance, m)?)?;
    m.add_function(wrap_pyfunction!(is_stable, m)?)?;
    m.add_function(wrap_pyfunction!(rayleigh_distance, m)?)?;
    m.add_function(wrap_pyfunction!(noise_power_dbm, m)?)?;
    m.add_function(wrap_pyfunction!(rate, m)?)?;
    Ok(())
}
