//! Monte-Carlo harness: configuration, scenario generation, trial
//! execution, and parameter sweeps.
//!
//! A configuration fully determines every trial. Scenario randomness and
//! each scheme's internal randomness live on separate, fixed stream
//! indices of a counter-based generator, so per-scheme results are
//! reproducible and unaffected by which other schemes a run enables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{run_scheme, BaselineError, SchemeId};
use crate::channel::{
    ChannelError, ChannelSet, CsiErrorModel, GainModel, RadioParams, VarianceNorm,
    SPEED_OF_LIGHT,
};
use crate::geometry::{GeometryError, IrsPanel, Point3, Topology};
use crate::matching::MatchingError;
use crate::sinr::{db_to_linear, dbm_to_watts, NoiseModel, Scenario, SinrError};

/// Errors from configuration validation or trial execution.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Sinr(#[from] SinrError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

/// Node counts and placement volume. Transmitters and receivers are
/// dropped uniformly in an `area_side × area_side` square at fixed
/// heights; panels are dropped in the same square with a uniform height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    #[serde(default = "default_num_pairs")]
    pub num_transmitters: usize,
    #[serde(default = "default_num_pairs")]
    pub num_receivers: usize,
    #[serde(default = "default_num_irs")]
    pub num_irs: usize,
    #[serde(default = "default_elements_side")]
    pub elements_x: usize,
    #[serde(default = "default_elements_side")]
    pub elements_y: usize,
    #[serde(default = "default_area_side")]
    pub area_side_m: f64,
    #[serde(default)]
    pub irs_height_min_m: f64,
    #[serde(default = "default_irs_height_max")]
    pub irs_height_max_m: f64,
    #[serde(default = "default_node_height")]
    pub tx_height_m: f64,
    #[serde(default = "default_node_height")]
    pub rx_height_m: f64,
}

fn default_num_pairs() -> usize {
    3
}
fn default_num_irs() -> usize {
    5
}
fn default_elements_side() -> usize {
    30
}
fn default_area_side() -> f64 {
    20.0
}
fn default_irs_height_max() -> f64 {
    5.0
}
fn default_node_height() -> f64 {
    1.0
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            num_transmitters: default_num_pairs(),
            num_receivers: default_num_pairs(),
            num_irs: default_num_irs(),
            elements_x: default_elements_side(),
            elements_y: default_elements_side(),
            area_side_m: default_area_side(),
            irs_height_min_m: 0.0,
            irs_height_max_m: default_irs_height_max(),
            tx_height_m: default_node_height(),
            rx_height_m: default_node_height(),
        }
    }
}

/// Transmit power, either one level shared by all transmitters or one
/// level per transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TxPowerDbm {
    Uniform(f64),
    PerTransmitter(Vec<f64>),
}

impl TxPowerDbm {
    /// Per-transmitter powers in watts.
    pub fn resolve(&self, num_transmitters: usize) -> Result<Vec<f64>, SimError> {
        match self {
            TxPowerDbm::Uniform(dbm) => Ok(vec![dbm_to_watts(*dbm); num_transmitters]),
            TxPowerDbm::PerTransmitter(list) => {
                if list.len() != num_transmitters {
                    return Err(SimError::InvalidConfig(format!(
                        "tx_power_dbm lists {} entries for {} transmitters",
                        list.len(),
                        num_transmitters
                    )));
                }
                Ok(list.iter().map(|&dbm| dbm_to_watts(dbm)).collect())
            }
        }
    }
}

/// Carrier, element, and antenna parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    #[serde(default = "default_carrier")]
    pub carrier_frequency_hz: f64,
    /// Element side as a fraction of the wavelength.
    #[serde(default = "default_element_side_wl")]
    pub element_side_wavelengths: f64,
    /// Molecular absorption coefficient, 1/m.
    #[serde(default = "default_absorption")]
    pub absorption_per_m: f64,
    #[serde(default)]
    pub tx_gain_dbi: f64,
    #[serde(default)]
    pub rx_gain_dbi: f64,
    #[serde(default = "default_unit")]
    pub element_efficiency: f64,
    #[serde(default = "default_directivity_exponent")]
    pub directivity_exponent: f64,
    #[serde(default)]
    pub gain_model: GainModel,
    #[serde(default)]
    pub far_field_phase: bool,
    #[serde(default = "default_tx_power")]
    pub tx_power_dbm: TxPowerDbm,
    /// Reflection amplitude applied by every configured element.
    #[serde(default = "default_unit")]
    pub reflect_amplitude: f64,
}

fn default_carrier() -> f64 {
    3.0e11
}
fn default_element_side_wl() -> f64 {
    0.4
}
fn default_absorption() -> f64 {
    0.0033
}
fn default_unit() -> f64 {
    1.0
}
fn default_directivity_exponent() -> f64 {
    2.0
}
fn default_tx_power() -> TxPowerDbm {
    TxPowerDbm::Uniform(25.0)
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: default_carrier(),
            element_side_wavelengths: default_element_side_wl(),
            absorption_per_m: default_absorption(),
            tx_gain_dbi: 0.0,
            rx_gain_dbi: 0.0,
            element_efficiency: default_unit(),
            directivity_exponent: default_directivity_exponent(),
            gain_model: GainModel::default(),
            far_field_phase: false,
            tx_power_dbm: default_tx_power(),
            reflect_amplitude: default_unit(),
        }
    }
}

/// Receiver noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "default_noise_density")]
    pub density_dbm_per_hz: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_noise_figure")]
    pub noise_figure_db: f64,
}

fn default_noise_density() -> f64 {
    -174.0
}
fn default_bandwidth() -> f64 {
    1.0e10
}
fn default_noise_figure() -> f64 {
    10.0
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            density_dbm_per_hz: default_noise_density(),
            bandwidth_hz: default_bandwidth(),
            noise_figure_db: default_noise_figure(),
        }
    }
}

/// Channel state information quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsiConfig {
    /// Error standard deviation relative to the per-entry channel
    /// magnitude; `0` models perfect knowledge.
    #[serde(default = "default_relative_error")]
    pub relative_error: f64,
    #[serde(default)]
    pub variance_norm: VarianceNorm,
}

fn default_relative_error() -> f64 {
    0.1
}

impl Default for CsiConfig {
    fn default() -> Self {
        Self { relative_error: default_relative_error(), variance_norm: VarianceNorm::default() }
    }
}

/// Which configuration knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    /// Shared transmit power in dBm.
    #[serde(rename = "tx_power")]
    TxPower,
    /// Total elements per panel; values must be perfect squares.
    #[serde(rename = "m", alias = "num_elements")]
    NumElements,
    /// Reflection amplitude in `(0, 1]`.
    #[serde(rename = "reflecting_efficiency")]
    ReflectingEfficiency,
    /// Deployment square side in meters.
    #[serde(rename = "area")]
    Area,
    /// Number of transmitter-receiver pairs.
    #[serde(rename = "num_pairs")]
    NumPairs,
    /// Carrier frequency in Hz.
    #[serde(rename = "frequency")]
    Frequency,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::TxPower => "tx_power",
            SweepVariable::NumElements => "m",
            SweepVariable::ReflectingEfficiency => "reflecting_efficiency",
            SweepVariable::Area => "area",
            SweepVariable::NumPairs => "num_pairs",
            SweepVariable::Frequency => "frequency",
        }
    }
}

impl std::fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A one-dimensional parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    /// Optional per-point bandwidth override for frequency sweeps, same
    /// length as `values`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_values_hz: Option<Vec<f64>>,
}

/// Full simulator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub topology: TopologyConfig,
    #[serde(default)]
    pub radio: RadioConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub csi: CsiConfig,
    /// Schemes to run, in reporting order.
    #[serde(default = "default_schemes")]
    pub schemes: Vec<SchemeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    /// Root RNG seed. The only field without a default: runs must be
    /// reproducible on purpose, never by accident.
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Cap on candidate evaluations of the enumerating schemes.
    #[serde(default = "default_enumeration_budget")]
    pub enumeration_budget: u64,
    /// Default output path, overridable on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_schemes() -> Vec<SchemeId> {
    SchemeId::all().to_vec()
}
fn default_seed() -> u64 {
    1
}
fn default_trials() -> u64 {
    100
}
fn default_enumeration_budget() -> u64 {
    10_000_000
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            topology: TopologyConfig::default(),
            radio: RadioConfig::default(),
            noise: NoiseConfig::default(),
            csi: CsiConfig::default(),
            schemes: default_schemes(),
            sweep: None,
            seed: default_seed(),
            trials: default_trials(),
            enumeration_budget: default_enumeration_budget(),
            output: None,
        }
    }
}

impl SimConfig {
    /// Validates every field, naming the offender on failure.
    pub fn validate(&self) -> Result<(), SimError> {
        let t = &self.topology;
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if t.num_transmitters == 0 {
            return bad("topology.num_transmitters must be at least 1".into());
        }
        if t.num_receivers != t.num_transmitters {
            return bad(format!(
                "topology.num_receivers ({}) must equal topology.num_transmitters ({})",
                t.num_receivers, t.num_transmitters
            ));
        }
        if t.num_irs < t.num_transmitters {
            return bad(format!(
                "topology.num_irs ({}) must be at least topology.num_transmitters ({})",
                t.num_irs, t.num_transmitters
            ));
        }
        if t.elements_x == 0 || t.elements_y == 0 {
            return bad("topology.elements_x and elements_y must be at least 1".into());
        }
        if !(t.area_side_m > 0.0) || !t.area_side_m.is_finite() {
            return bad(format!("topology.area_side_m must be positive, got {}", t.area_side_m));
        }
        if !(t.irs_height_min_m >= 0.0) || t.irs_height_max_m < t.irs_height_min_m {
            return bad(format!(
                "topology IRS heights must satisfy 0 <= min <= max, got [{}, {}]",
                t.irs_height_min_m, t.irs_height_max_m
            ));
        }
        if !t.tx_height_m.is_finite() || !t.rx_height_m.is_finite() {
            return bad("topology node heights must be finite".into());
        }

        let r = &self.radio;
        if !(r.carrier_frequency_hz > 0.0) || !r.carrier_frequency_hz.is_finite() {
            return bad(format!(
                "radio.carrier_frequency_hz must be positive, got {}",
                r.carrier_frequency_hz
            ));
        }
        if !(r.element_side_wavelengths > 0.0) {
            return bad(format!(
                "radio.element_side_wavelengths must be positive, got {}",
                r.element_side_wavelengths
            ));
        }
        if !(r.absorption_per_m >= 0.0) {
            return bad(format!(
                "radio.absorption_per_m must be non-negative, got {}",
                r.absorption_per_m
            ));
        }
        if !(r.element_efficiency > 0.0 && r.element_efficiency <= 1.0) {
            return bad(format!(
                "radio.element_efficiency must lie in (0, 1], got {}",
                r.element_efficiency
            ));
        }
        if !(r.reflect_amplitude > 0.0 && r.reflect_amplitude <= 1.0) {
            return bad(format!(
                "radio.reflect_amplitude must lie in (0, 1], got {}",
                r.reflect_amplitude
            ));
        }
        if let TxPowerDbm::PerTransmitter(list) = &r.tx_power_dbm {
            if list.len() != t.num_transmitters {
                return bad(format!(
                    "radio.tx_power_dbm lists {} entries for {} transmitters",
                    list.len(),
                    t.num_transmitters
                ));
            }
        }

        if !(self.noise.bandwidth_hz > 0.0) {
            return bad(format!(
                "noise.bandwidth_hz must be positive, got {}",
                self.noise.bandwidth_hz
            ));
        }
        if !(self.csi.relative_error >= 0.0) || !self.csi.relative_error.is_finite() {
            return bad(format!(
                "csi.relative_error must be non-negative, got {}",
                self.csi.relative_error
            ));
        }
        if self.schemes.is_empty() {
            return bad("schemes must list at least one scheme".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return bad("sweep.values must be non-empty".into());
            }
            if let Some(bw) = &sweep.bandwidth_values_hz {
                if bw.len() != sweep.values.len() {
                    return bad(format!(
                        "sweep.bandwidth_values_hz lists {} entries for {} sweep values",
                        bw.len(),
                        sweep.values.len()
                    ));
                }
                if sweep.variable != SweepVariable::Frequency {
                    return bad(
                        "sweep.bandwidth_values_hz is only meaningful for frequency sweeps"
                            .into(),
                    );
                }
            }
        }
        Ok(())
    }

    fn radio_params(&self) -> Result<RadioParams, SimError> {
        let wavelength = SPEED_OF_LIGHT / self.radio.carrier_frequency_hz;
        Ok(RadioParams::new(
            self.radio.carrier_frequency_hz,
            self.radio.element_side_wavelengths * wavelength,
            self.radio.absorption_per_m,
            db_to_linear(self.radio.tx_gain_dbi),
            db_to_linear(self.radio.rx_gain_dbi),
            self.radio.element_efficiency,
            self.radio.directivity_exponent,
            self.radio.gain_model,
            self.radio.far_field_phase,
        )?)
    }
}

/// Stream index of the scenario generator for `trial`. Streams
/// `base + 1 + offset` belong to the schemes.
fn scenario_stream(trial: u64) -> u64 {
    trial.wrapping_mul(8)
}

/// Generates the scenario of one trial.
///
/// Draw order is fixed: per transmitter `(x, y)`, per receiver `(x, y)`,
/// per panel `(x, y, z)`, then the channel set. Changing the draw order
/// breaks byte-for-byte reproducibility of archived runs.
pub fn generate_scenario(config: &SimConfig, trial: u64) -> Result<Scenario, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(scenario_stream(trial));

    let t = &config.topology;
    let params = config.radio_params()?;
    let element_side = params.element_area.sqrt();
    let side = t.area_side_m;

    let transmitters: Vec<Point3> = (0..t.num_transmitters)
        .map(|_| {
            Point3::new(rng.random_range(0.0..side), rng.random_range(0.0..side), t.tx_height_m)
        })
        .collect();
    let receivers: Vec<Point3> = (0..t.num_receivers)
        .map(|_| {
            Point3::new(rng.random_range(0.0..side), rng.random_range(0.0..side), t.rx_height_m)
        })
        .collect();
    let panels: Vec<IrsPanel> = (0..t.num_irs)
        .map(|_| {
            let x = rng.random_range(0.0..side);
            let y = rng.random_range(0.0..side);
            let z = if t.irs_height_max_m > t.irs_height_min_m {
                rng.random_range(t.irs_height_min_m..t.irs_height_max_m)
            } else {
                t.irs_height_min_m
            };
            IrsPanel::horizontal(Point3::new(x, y, z), t.elements_x, t.elements_y, element_side)
        })
        .collect::<Result<_, _>>()?;
    let topology = Topology { transmitters, receivers, panels };

    let csi = CsiErrorModel::new(config.csi.relative_error, config.csi.variance_norm)?;
    let channels = ChannelSet::generate(&topology, &params, &csi, &mut rng)?;

    let tx_powers_w = config.radio.tx_power_dbm.resolve(t.num_transmitters)?;
    let noise = NoiseModel {
        density_dbm_per_hz: config.noise.density_dbm_per_hz,
        bandwidth_hz: config.noise.bandwidth_hz,
        noise_figure_db: config.noise.noise_figure_db,
    };
    Ok(Scenario::new(
        topology,
        params,
        channels,
        tx_powers_w,
        noise.power_watts()?,
        config.csi.variance_norm,
        config.radio.reflect_amplitude,
    )?)
}

/// One scheme's result on one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeResult {
    pub scheme: SchemeId,
    pub sum_rate_bps_per_hz: f64,
    pub candidate_evaluations: u64,
    pub proposals: u64,
    pub phase1_rounds: u64,
    pub phase2_rounds: u64,
}

/// All scheme results of one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: u64,
    pub schemes: Vec<SchemeResult>,
}

/// Runs every configured scheme on the scenario of `trial`.
///
/// Each scheme draws from its own stream regardless of which other
/// schemes are enabled, so adding or removing schemes never changes
/// another scheme's result.
pub fn run_trial(config: &SimConfig, trial: u64) -> Result<TrialResult, SimError> {
    let scenario = generate_scenario(config, trial)?;
    let mut schemes = Vec::with_capacity(config.schemes.len());
    for &scheme in &config.schemes {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(scenario_stream(trial) + 1 + scheme.stream_offset());
        let run = run_scheme(&scenario, scheme, config.enumeration_budget, &mut rng)?;
        let sum_rate_bps_per_hz = scenario.sum_rate(&run.allocation)?;
        schemes.push(SchemeResult {
            scheme,
            sum_rate_bps_per_hz,
            candidate_evaluations: run.candidate_evaluations,
            proposals: run.proposals,
            phase1_rounds: run.phase1_rounds,
            phase2_rounds: run.phase2_rounds,
        });
    }
    Ok(TrialResult { trial, schemes })
}

/// Runs all trials in parallel, results ordered by trial index.
pub fn run_trials(config: &SimConfig) -> Result<Vec<TrialResult>, SimError> {
    config.validate()?;
    (0..config.trials).into_par_iter().map(|trial| run_trial(config, trial)).collect()
}

/// Aggregated per-scheme statistics at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep_variable: SweepVariable,
    pub sweep_value: f64,
    pub scheme: SchemeId,
    pub mean_sum_rate_bps_per_hz: f64,
    /// Standard error of the mean (sample std over √trials), `0` for a
    /// single trial.
    pub stderr: f64,
    pub trials: u64,
    pub mean_candidate_evaluations: f64,
    pub mean_proposals: f64,
}

/// Returns `config` with the swept variable set to `value`.
pub fn apply_sweep_value(
    config: &SimConfig,
    variable: SweepVariable,
    value: f64,
    bandwidth_hz: Option<f64>,
) -> Result<SimConfig, SimError> {
    let mut derived = config.clone();
    derived.sweep = None;
    match variable {
        SweepVariable::TxPower => {
            derived.radio.tx_power_dbm = TxPowerDbm::Uniform(value);
        }
        SweepVariable::NumElements => {
            let total = value as usize;
            let side = (value.max(0.0)).sqrt().round() as usize;
            if value.fract() != 0.0 || side * side != total || side == 0 {
                return Err(SimError::InvalidConfig(format!(
                    "sweep value {value} is not a positive perfect square element count"
                )));
            }
            derived.topology.elements_x = side;
            derived.topology.elements_y = side;
        }
        SweepVariable::ReflectingEfficiency => {
            derived.radio.reflect_amplitude = value;
        }
        SweepVariable::Area => {
            derived.topology.area_side_m = value;
        }
        SweepVariable::NumPairs => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(SimError::InvalidConfig(format!(
                    "sweep value {value} is not a positive pair count"
                )));
            }
            derived.topology.num_transmitters = value as usize;
            derived.topology.num_receivers = value as usize;
        }
        SweepVariable::Frequency => {
            derived.radio.carrier_frequency_hz = value;
        }
    }
    if let Some(bw) = bandwidth_hz {
        derived.noise.bandwidth_hz = bw;
    }
    derived.validate()?;
    Ok(derived)
}

/// Sample mean and standard error (ddof 1) of `values`.
fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs the configured sweep: every sweep point runs the same seeded
/// trials, so points are paired and scheme curves are directly
/// comparable.
pub fn run_sweep(config: &SimConfig) -> Result<Vec<SweepRow>, SimError> {
    config.validate()?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| SimError::InvalidConfig("sweep section is required".into()))?
        .clone();
    let mut rows = Vec::new();
    for (i, &value) in sweep.values.iter().enumerate() {
        let bandwidth = sweep.bandwidth_values_hz.as_ref().map(|bw| bw[i]);
        let derived = apply_sweep_value(config, sweep.variable, value, bandwidth)?;
        let results = run_trials(&derived)?;
        for (s, &scheme) in derived.schemes.iter().enumerate() {
            let rates: Vec<f64> =
                results.iter().map(|r| r.schemes[s].sum_rate_bps_per_hz).collect();
            let (mean, stderr) = mean_stderr(&rates);
            let mean_candidate_evaluations = results
                .iter()
                .map(|r| r.schemes[s].candidate_evaluations as f64)
                .sum::<f64>()
                / results.len() as f64;
            let mean_proposals =
                results.iter().map(|r| r.schemes[s].proposals as f64).sum::<f64>()
                    / results.len() as f64;
            rows.push(SweepRow {
                sweep_variable: sweep.variable,
                sweep_value: value,
                scheme,
                mean_sum_rate_bps_per_hz: mean,
                stderr,
                trials: results.len() as u64,
                mean_candidate_evaluations,
                mean_proposals,
            });
        }
    }
    Ok(rows)
}

/// Round-by-round utility sums of the two matching phases on one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub trial: u64,
    pub phase1: Vec<f64>,
    pub phase2: Vec<f64>,
}

/// The proposed scheme's convergence behavior on the scenario of `trial`.
pub fn convergence_trace(config: &SimConfig, trial: u64) -> Result<ConvergenceTrace, SimError> {
    let scenario = generate_scenario(config, trial)?;
    let result = crate::matching::two_phase_association(
        &scenario,
        crate::matching::ProposalDirection::NodesPropose,
    )?;
    Ok(ConvergenceTrace {
        trial,
        phase1: result.phase1.outcome.utility_trace(),
        phase2: result.phase2.outcome.utility_trace(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Small, fast configuration for tests.
    fn test_config() -> SimConfig {
        let mut config = SimConfig::default();
        config.topology.elements_x = 2;
        config.topology.elements_y = 2;
        config.trials = 3;
        config
    }

    #[test]
    fn seed_only_json_yields_default_config() {
        let config: SimConfig = serde_json::from_str(r#"{"seed": 1}"#).unwrap();
        assert_eq!(config, SimConfig::default());
        assert_eq!(config.topology.num_transmitters, 3);
        assert_eq!(config.topology.num_irs, 5);
        assert_eq!(config.topology.elements_x, 30);
        assert_relative_eq!(config.radio.carrier_frequency_hz, 3.0e11);
        assert_eq!(config.radio.tx_power_dbm, TxPowerDbm::Uniform(25.0));
        assert_relative_eq!(config.csi.relative_error, 0.1);
        assert_eq!(config.schemes.len(), 7);
        assert_eq!(config.trials, 100);
        assert_eq!(config.enumeration_budget, 10_000_000);
        config.validate().unwrap();
    }

    #[test]
    fn missing_seed_is_a_schema_error_naming_the_field() {
        let err = serde_json::from_str::<SimConfig>("{}").unwrap_err();
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<SimConfig>(r#"{"topologee": {}}"#).unwrap_err();
        assert!(err.to_string().contains("topologee"));
        let err =
            serde_json::from_str::<SimConfig>(r#"{"topology": {"num_tx": 3}}"#).unwrap_err();
        assert!(err.to_string().contains("num_tx"));
    }

    #[test]
    fn validation_names_offending_fields() {
        let mut config = test_config();
        config.topology.num_receivers = 2;
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("num_receivers"));

        let mut config = test_config();
        config.topology.num_irs = 2;
        assert!(config.validate().unwrap_err().to_string().contains("num_irs"));

        let mut config = test_config();
        config.radio.reflect_amplitude = 0.0;
        assert!(config.validate().unwrap_err().to_string().contains("reflect_amplitude"));

        let mut config = test_config();
        config.radio.tx_power_dbm = TxPowerDbm::PerTransmitter(vec![25.0, 25.0]);
        assert!(config.validate().unwrap_err().to_string().contains("tx_power_dbm"));

        let mut config = test_config();
        config.schemes.clear();
        assert!(config.validate().unwrap_err().to_string().contains("schemes"));

        let mut config = test_config();
        config.sweep = Some(SweepConfig {
            variable: SweepVariable::TxPower,
            values: vec![10.0, 20.0],
            bandwidth_values_hz: Some(vec![1.0e9]),
        });
        assert!(config.validate().unwrap_err().to_string().contains("bandwidth_values_hz"));
    }

    #[test]
    fn scenario_generation_is_deterministic_per_trial() {
        let config = test_config();
        let a = generate_scenario(&config, 4).unwrap();
        let b = generate_scenario(&config, 4).unwrap();
        assert_eq!(a.topology.transmitters, b.topology.transmitters);
        assert_eq!(a.topology.receivers, b.topology.receivers);
        assert_eq!(
            a.channels.tx_link(0, 0).estimate.entries,
            b.channels.tx_link(0, 0).estimate.entries
        );
        assert_eq!(a.channels.rx_link(2, 1).error.entries, b.channels.rx_link(2, 1).error.entries);

        let c = generate_scenario(&config, 5).unwrap();
        assert_ne!(a.topology.transmitters, c.topology.transmitters);
    }

    #[test]
    fn scenario_positions_respect_bounds() {
        let config = test_config();
        for trial in 0..20 {
            let s = generate_scenario(&config, trial).unwrap();
            for p in &s.topology.transmitters {
                assert!(p.x >= 0.0 && p.x < 20.0 && p.y >= 0.0 && p.y < 20.0);
                assert_relative_eq!(p.z, 1.0);
            }
            for p in &s.topology.receivers {
                assert_relative_eq!(p.z, 1.0);
            }
            for panel in &s.topology.panels {
                assert!(panel.center.z >= 0.0 && panel.center.z < 5.0);
            }
        }
    }

    #[test]
    fn panel_heights_are_uniform_over_the_configured_range() {
        let mut config = test_config();
        config.topology.elements_x = 1;
        config.topology.elements_y = 1;
        let mut sum = 0.0;
        let mut count = 0usize;
        for trial in 0..200 {
            let s = generate_scenario(&config, trial).unwrap();
            for panel in &s.topology.panels {
                sum += panel.center.z;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        assert!((mean - 2.5).abs() < 0.2, "panel height mean {mean}");
    }

    #[test]
    fn noise_power_matches_reference() {
        let config = test_config();
        let scenario = generate_scenario(&config, 0).unwrap();
        assert_relative_eq!(
            scenario.noise_power_w,
            dbm_to_watts(-64.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn trial_results_cover_every_scheme_with_exact_counters() {
        let config = test_config();
        let result = run_trial(&config, 0).unwrap();
        assert_eq!(result.schemes.len(), 7);
        for s in &result.schemes {
            assert!(s.sum_rate_bps_per_hz.is_finite() && s.sum_rate_bps_per_hz > 0.0);
        }
        let es = result.schemes.iter().find(|s| s.scheme == SchemeId::ExhaustiveSearch).unwrap();
        // 5 panels taken 3 at a time, times 3! receiver orders.
        assert_eq!(es.candidate_evaluations, 60 * 6);
        let pes =
            result.schemes.iter().find(|s| s.scheme == SchemeId::PartialExhaustiveSearch).unwrap();
        assert_eq!(pes.candidate_evaluations, 60 + 6);
        let proposed = result.schemes.iter().find(|s| s.scheme == SchemeId::Proposed).unwrap();
        assert!(proposed.proposals >= 6);
        assert!(proposed.proposals <= (3 * 5 + 3 * 3) as u64);
    }

    #[test]
    fn scheme_results_do_not_depend_on_other_schemes() {
        let mut solo = test_config();
        solo.schemes = vec![SchemeId::RandomAllocation];
        let alone = run_trial(&solo, 2).unwrap();

        let full = run_trial(&test_config(), 2).unwrap();
        let in_full =
            full.schemes.iter().find(|s| s.scheme == SchemeId::RandomAllocation).unwrap();
        assert_eq!(&alone.schemes[0], in_full);
    }

    #[test]
    fn trials_run_in_order() {
        let config = test_config();
        let results = run_trials(&config).unwrap();
        assert_eq!(results.len(), 3);
        for (i, r) in results.iter().enumerate() {
            assert_eq!(r.trial, i as u64);
        }
        // Parallel execution returns exactly what serial execution does.
        let serial: Vec<TrialResult> =
            (0..config.trials).map(|t| run_trial(&config, t).unwrap()).collect();
        assert_eq!(results, serial);
    }

    #[test]
    fn sweep_rows_cover_points_and_schemes() {
        let mut config = test_config();
        config.schemes = vec![SchemeId::Proposed, SchemeId::RandomAllocation];
        config.trials = 3;
        config.sweep = Some(SweepConfig {
            variable: SweepVariable::TxPower,
            values: vec![20.0, 25.0],
            bandwidth_values_hz: None,
        });
        let rows = run_sweep(&config).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].sweep_variable, SweepVariable::TxPower);
        assert_relative_eq!(rows[0].sweep_value, 20.0);
        assert_eq!(rows[0].scheme, SchemeId::Proposed);
        for row in &rows {
            assert!(row.mean_sum_rate_bps_per_hz.is_finite());
            assert!(row.stderr >= 0.0);
            assert_eq!(row.trials, 3);
        }
    }

    #[test]
    fn sweep_values_apply_to_the_right_knob() {
        let config = test_config();
        let derived =
            apply_sweep_value(&config, SweepVariable::NumElements, 25.0, None).unwrap();
        assert_eq!((derived.topology.elements_x, derived.topology.elements_y), (5, 5));
        assert!(apply_sweep_value(&config, SweepVariable::NumElements, 24.0, None).is_err());

        let derived = apply_sweep_value(&config, SweepVariable::Area, 40.0, None).unwrap();
        assert_relative_eq!(derived.topology.area_side_m, 40.0);

        let derived = apply_sweep_value(&config, SweepVariable::NumPairs, 4.0, None).unwrap();
        assert_eq!(derived.topology.num_transmitters, 4);
        assert_eq!(derived.topology.num_receivers, 4);
        assert!(apply_sweep_value(&config, SweepVariable::NumPairs, 2.5, None).is_err());
        // Six pairs exceed the five panels of the default topology.
        assert!(apply_sweep_value(&config, SweepVariable::NumPairs, 6.0, None).is_err());

        let derived = apply_sweep_value(
            &config,
            SweepVariable::Frequency,
            1.0e11,
            Some(5.0e9),
        )
        .unwrap();
        assert_relative_eq!(derived.radio.carrier_frequency_hz, 1.0e11);
        assert_relative_eq!(derived.noise.bandwidth_hz, 5.0e9);

        let derived =
            apply_sweep_value(&config, SweepVariable::ReflectingEfficiency, 0.6, None).unwrap();
        assert_relative_eq!(derived.radio.reflect_amplitude, 0.6);

        let derived = apply_sweep_value(&config, SweepVariable::TxPower, 30.0, None).unwrap();
        assert_eq!(derived.radio.tx_power_dbm, TxPowerDbm::Uniform(30.0));
    }

    #[test]
    fn mean_stderr_reference_values() {
        let (mean, stderr) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(mean, 2.5);
        // Sample variance 5/3, stderr sqrt(5/12).
        assert_relative_eq!(stderr, (5.0f64 / 12.0).sqrt(), epsilon = 1e-12);
        let (mean, stderr) = mean_stderr(&[7.0]);
        assert_relative_eq!(mean, 7.0);
        assert_relative_eq!(stderr, 0.0);
    }

    #[test]
    fn convergence_trace_is_nondecreasing() {
        let config = test_config();
        let trace = convergence_trace(&config, 1).unwrap();
        assert!(!trace.phase1.is_empty());
        assert!(!trace.phase2.is_empty());
        for w in trace.phase1.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn sweep_requires_sweep_section() {
        let config = test_config();
        assert!(matches!(run_sweep(&config), Err(SimError::InvalidConfig(_))));
    }
}
