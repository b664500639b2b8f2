//! Wideband THz channel model for IRS-assisted links.
//!
//! Every transmitter–panel and panel–receiver link is a vector of
//! per-element complex gains. Each entry combines a deterministic pathloss
//! (antenna gain, element gain, spreading loss, molecular absorption) with
//! the propagation phase of the exact element distance:
//!
//! ```text
//! h_m = √ξ_m · e^(−j 2π d_m / λ),
//! ξ_m = G_endpoint · G_element(ψ, φ) · A² · e^(−κ_abs d_m) / (4π d_m)²
//! ```
//!
//! Channel state information is imperfect: the simulator works with channel
//! estimates plus zero-mean circularly-symmetric Gaussian estimation errors
//! whose per-entry variance is a configurable fraction of the link's mean
//! entry power.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{distance, link_angles, GeometryError, IrsPanel, LinkAngles, Point3, Topology};

/// Propagation speed used to derive the wavelength, in m/s. Rounded so that
/// a 300 GHz carrier maps to an exact 1 mm wavelength.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Errors from channel construction or evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid radio parameter: {0}")]
    InvalidParameter(String),
    #[error("link distance must be strictly positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("error variance must be non-negative and finite, got {0}")]
    InvalidVariance(f64),
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("reflection amplitude must lie in (0, 1], got {0}")]
    InvalidAmplitude(f64),
}

/// Element radiation pattern used for panel gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainModel {
    /// Projected-aperture model: the product of incident and reflected
    /// element gains reproduces the closed-form cascaded element gain
    /// `(4πA/λ²)² cos²ψ_inc (cos²φ_rfl cos²ψ_rfl + sin²φ_rfl)`.
    #[default]
    Trigonometric,
    /// Directivity model `2γ(q+1) cos^q ψ`, applied per link.
    CosQ,
}

/// Which vector norm the cascaded estimation-error variance uses.
///
/// The closed-form expression is stated with plain transpose products
/// `|hᵀh|`; the variance of the sampled error terms actually follows the
/// Hermitian norms `‖h‖²` (plus an `M`-scaled cross term). Both are
/// available; `Transpose` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceNorm {
    #[default]
    Transpose,
    Hermitian,
}

/// Physical-layer constants shared by all links of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Carrier frequency `f_c`, Hz.
    pub carrier_frequency: f64,
    /// Wavelength `λ = c / f_c`, m.
    pub wavelength: f64,
    /// Molecular absorption coefficient `κ_abs`, 1/m.
    pub absorption: f64,
    /// Transmit antenna gain `G_T`, linear.
    pub tx_gain: f64,
    /// Receive antenna gain `G_R`, linear.
    pub rx_gain: f64,
    /// Element area `A`, m².
    pub element_area: f64,
    /// Element efficiency `γ` of the directivity pattern.
    pub element_efficiency: f64,
    /// Directivity exponent `q` of the cos-q pattern.
    pub directivity_exponent: f64,
    pub gain_model: GainModel,
    /// When set, propagation phases use the panel-center distance instead
    /// of exact per-element distances (far-field approximation). Amplitudes
    /// always use exact distances.
    pub far_field_phase: bool,
}

impl RadioParams {
    /// Parameters for a carrier at `carrier_frequency` with square elements
    /// of side `element_side` meters. Gains are linear (not dB).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        carrier_frequency: f64,
        element_side: f64,
        absorption: f64,
        tx_gain: f64,
        rx_gain: f64,
        element_efficiency: f64,
        directivity_exponent: f64,
        gain_model: GainModel,
        far_field_phase: bool,
    ) -> Result<Self, ChannelError> {
        let positive = [
            ("carrier_frequency", carrier_frequency),
            ("element_side", element_side),
            ("tx_gain", tx_gain),
            ("rx_gain", rx_gain),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ChannelError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if !(absorption >= 0.0) || !absorption.is_finite() {
            return Err(ChannelError::InvalidParameter(format!(
                "absorption must be non-negative, got {absorption}"
            )));
        }
        if !(element_efficiency > 0.0 && element_efficiency <= 1.0) {
            return Err(ChannelError::InvalidParameter(format!(
                "element_efficiency must lie in (0, 1], got {element_efficiency}"
            )));
        }
        if !(directivity_exponent >= 0.0) || !directivity_exponent.is_finite() {
            return Err(ChannelError::InvalidParameter(format!(
                "directivity_exponent must be non-negative, got {directivity_exponent}"
            )));
        }
        Ok(Self {
            carrier_frequency,
            wavelength: SPEED_OF_LIGHT / carrier_frequency,
            absorption,
            tx_gain,
            rx_gain,
            element_area: element_side * element_side,
            element_efficiency,
            directivity_exponent,
            gain_model,
            far_field_phase,
        })
    }

    /// Free-space wavenumber `2π / λ`.
    #[inline]
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    /// Peak element gain `4πA / λ²` of the projected-aperture model.
    #[inline]
    pub fn element_peak_gain(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.element_area / (self.wavelength * self.wavelength)
    }
}

/// Which hop of the cascade a link belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkDirection {
    TxToIrs,
    IrsToRx,
}

/// Directivity element gain `2γ(q+1) cos^q ψ` for `ψ < π/2`, zero beyond.
///
/// This model treats the panel as one-sided: a link arriving from behind
/// the panel plane (`ψ ≥ π/2`) sees no gain at all. The projected-aperture
/// gains below instead square the elevation cosine and so are even in it.
#[inline]
pub fn element_gain_cos_q(elevation: f64, params: &RadioParams) -> f64 {
    if elevation >= std::f64::consts::FRAC_PI_2 {
        return 0.0;
    }
    2.0 * params.element_efficiency
        * (params.directivity_exponent + 1.0)
        * elevation.cos().powf(params.directivity_exponent)
}

/// Incident-side projected-aperture gain `(4πA/λ²) cos²ψ`.
#[inline]
pub fn trig_gain_incident(elevation: f64, params: &RadioParams) -> f64 {
    let c = elevation.cos();
    params.element_peak_gain() * c * c
}

/// Reflected-side projected-aperture gain
/// `(4πA/λ²)(cos²φ cos²ψ + sin²φ)`.
#[inline]
pub fn trig_gain_reflected(angles: &LinkAngles, params: &RadioParams) -> f64 {
    let cos_e = angles.elevation.cos();
    let (sin_a, cos_a) = angles.azimuth.sin_cos();
    params.element_peak_gain() * (cos_a * cos_a * cos_e * cos_e + sin_a * sin_a)
}

/// Closed-form cascaded element gain of an incident/reflected angle pair
/// under the projected-aperture model:
/// `(4πA/λ²)² cos²ψ_inc (cos²φ_rfl cos²ψ_rfl + sin²φ_rfl)`.
#[inline]
pub fn cascaded_element_gain_trig(
    incident_elevation: f64,
    reflected: &LinkAngles,
    params: &RadioParams,
) -> f64 {
    trig_gain_incident(incident_elevation, params) * trig_gain_reflected(reflected, params)
}

/// Element gain of one hop under the configured model.
#[inline]
pub fn element_gain(direction: LinkDirection, angles: &LinkAngles, params: &RadioParams) -> f64 {
    match (params.gain_model, direction) {
        (GainModel::Trigonometric, LinkDirection::TxToIrs) => {
            trig_gain_incident(angles.elevation, params)
        }
        (GainModel::Trigonometric, LinkDirection::IrsToRx) => trig_gain_reflected(angles, params),
        (GainModel::CosQ, _) => element_gain_cos_q(angles.elevation, params),
    }
}

/// Endpoint antenna gain of one hop.
#[inline]
pub fn endpoint_gain(direction: LinkDirection, params: &RadioParams) -> f64 {
    match direction {
        LinkDirection::TxToIrs => params.tx_gain,
        LinkDirection::IrsToRx => params.rx_gain,
    }
}

/// Single-hop pathloss of one element at distance `d`:
/// `G_endpoint · G_element · A² · e^(−κ_abs d) / (4πd)²`.
pub fn pathloss_link(
    d: f64,
    element_gain: f64,
    endpoint_gain: f64,
    params: &RadioParams,
) -> Result<f64, ChannelError> {
    if !(d > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d));
    }
    let spread = 4.0 * std::f64::consts::PI * d;
    Ok(endpoint_gain * element_gain * params.element_area * params.element_area
        * (-params.absorption * d).exp()
        / (spread * spread))
}

/// Combined two-hop pathloss of one element with hop distances `d1`, `d2`:
/// `G_T G_inc G_rfl G_R · λ⁴ · e^(−κ_abs (d1+d2)) / ((4π)⁴ (d1 d2)²)`.
pub fn pathloss_cascaded(
    d1: f64,
    d2: f64,
    incident_gain: f64,
    reflected_gain: f64,
    params: &RadioParams,
) -> Result<f64, ChannelError> {
    if !(d1 > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d1));
    }
    if !(d2 > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d2));
    }
    let four_pi = 4.0 * std::f64::consts::PI;
    let lambda2 = params.wavelength * params.wavelength;
    Ok(params.tx_gain * incident_gain * reflected_gain * params.rx_gain
        * lambda2 * lambda2
        * (-params.absorption * (d1 + d2)).exp()
        / (four_pi.powi(4) * (d1 * d2) * (d1 * d2)))
}

/// Per-element complex gains of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub entries: Vec<Complex64>,
}

impl ChannelVector {
    pub fn zeros(len: usize) -> Self {
        Self { entries: vec![Complex64::new(0.0, 0.0); len] }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Plain transpose product `hᵀh = Σ h_m²` (no conjugation).
    pub fn transpose_product(&self) -> Complex64 {
        self.entries.iter().map(|e| e * e).sum()
    }

    /// Squared Hermitian norm `‖h‖² = Σ |h_m|²`.
    pub fn hermitian_norm_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum()
    }

    /// Mean per-entry power `‖h‖² / M`.
    pub fn mean_entry_power(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.hermitian_norm_sq() / self.entries.len() as f64
    }

    /// Entry-wise sum with another vector.
    pub fn add(&self, other: &ChannelVector) -> Result<ChannelVector, ChannelError> {
        if self.len() != other.len() {
            return Err(ChannelError::LengthMismatch(self.len(), other.len()));
        }
        Ok(ChannelVector {
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        })
    }
}

/// Deterministic channel vector of the link between `endpoint` and every
/// element of `panel`.
pub fn channel_vector(
    endpoint: Point3,
    panel: &IrsPanel,
    direction: LinkDirection,
    params: &RadioParams,
) -> Result<ChannelVector, ChannelError> {
    let k = params.wavenumber();
    let g_end = endpoint_gain(direction, params);
    let center_distance = if params.far_field_phase {
        let d = distance(endpoint, panel.center);
        if !(d > 0.0) {
            return Err(ChannelError::NonPositiveDistance(d));
        }
        Some(d)
    } else {
        None
    };
    let mut entries = Vec::with_capacity(panel.num_elements());
    for m in 0..panel.num_elements() {
        let element = panel.element_position(m);
        let d = distance(endpoint, element);
        let angles = link_angles(endpoint, element)?;
        let xi = pathloss_link(d, element_gain(direction, &angles, params), g_end, params)?;
        let phase_distance = center_distance.unwrap_or(d);
        entries.push(Complex64::from_polar(xi.sqrt(), -k * phase_distance));
    }
    Ok(ChannelVector { entries })
}

/// IID circularly-symmetric complex Gaussian vector with per-entry
/// variance `variance`.
pub fn sample_csi_error<R: Rng + ?Sized>(
    variance: f64,
    len: usize,
    rng: &mut R,
) -> Result<ChannelVector, ChannelError> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(ChannelError::InvalidVariance(variance));
    }
    let normal = Normal::new(0.0, (variance / 2.0).sqrt())
        .map_err(|_| ChannelError::InvalidVariance(variance))?;
    let entries = (0..len)
        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect();
    Ok(ChannelVector { entries })
}

/// Channel-estimation-error model: per-link error variance is
/// `relative_error² ×` the link's mean per-entry power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsiErrorModel {
    pub relative_error: f64,
    pub variance_norm: VarianceNorm,
}

impl CsiErrorModel {
    pub fn new(relative_error: f64, variance_norm: VarianceNorm) -> Result<Self, ChannelError> {
        if !(relative_error >= 0.0) || !relative_error.is_finite() {
            return Err(ChannelError::InvalidParameter(format!(
                "relative_error must be non-negative, got {relative_error}"
            )));
        }
        Ok(Self { relative_error, variance_norm })
    }

    /// Perfect CSI (zero error variance).
    pub fn perfect() -> Self {
        Self { relative_error: 0.0, variance_norm: VarianceNorm::Transpose }
    }

    /// Error variance of a link given its estimated channel.
    pub fn link_variance(&self, estimate: &ChannelVector) -> f64 {
        self.relative_error * self.relative_error * estimate.mean_entry_power()
    }
}

/// One link's estimated channel, sampled estimation error, and error
/// variance. The actual channel is `estimate + error`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannel {
    pub estimate: ChannelVector,
    pub error: ChannelVector,
    pub error_variance: f64,
}

impl LinkChannel {
    pub fn actual(&self) -> Result<ChannelVector, ChannelError> {
        self.estimate.add(&self.error)
    }
}

/// All channels of one scenario: transmitter–panel links indexed `[k][n]`
/// and panel–receiver links indexed `[n][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub tx_irs: Vec<Vec<LinkChannel>>,
    pub irs_rx: Vec<Vec<LinkChannel>>,
}

impl ChannelSet {
    /// Generates every link of `topology`: estimates from the deterministic
    /// model, error variances from `csi`, errors drawn from `rng`.
    /// Links are generated in a fixed order (all transmitter–panel links
    /// row-major, then all panel–receiver links) so a seeded `rng` yields
    /// reproducible channels.
    pub fn generate<R: Rng + ?Sized>(
        topology: &Topology,
        params: &RadioParams,
        csi: &CsiErrorModel,
        rng: &mut R,
    ) -> Result<Self, ChannelError> {
        let mut tx_irs = Vec::with_capacity(topology.num_transmitters());
        for tx in &topology.transmitters {
            let mut row = Vec::with_capacity(topology.num_panels());
            for panel in &topology.panels {
                row.push(Self::generate_link(*tx, panel, LinkDirection::TxToIrs, params, csi, rng)?);
            }
            tx_irs.push(row);
        }
        let mut irs_rx = Vec::with_capacity(topology.num_panels());
        for panel in &topology.panels {
            let mut row = Vec::with_capacity(topology.num_receivers());
            for rx in &topology.receivers {
                row.push(Self::generate_link(*rx, panel, LinkDirection::IrsToRx, params, csi, rng)?);
            }
            irs_rx.push(row);
        }
        Ok(Self { tx_irs, irs_rx })
    }

    fn generate_link<R: Rng + ?Sized>(
        endpoint: Point3,
        panel: &IrsPanel,
        direction: LinkDirection,
        params: &RadioParams,
        csi: &CsiErrorModel,
        rng: &mut R,
    ) -> Result<LinkChannel, ChannelError> {
        let estimate = channel_vector(endpoint, panel, direction, params)?;
        let error_variance = csi.link_variance(&estimate);
        let error = sample_csi_error(error_variance, estimate.len(), rng)?;
        Ok(LinkChannel { estimate, error, error_variance })
    }

    /// Estimated transmitter-to-panel channel of link `(k, n)`.
    pub fn tx_link(&self, k: usize, n: usize) -> &LinkChannel {
        &self.tx_irs[k][n]
    }

    /// Estimated panel-to-receiver channel of link `(n, l)`.
    pub fn rx_link(&self, n: usize, l: usize) -> &LinkChannel {
        &self.irs_rx[n][l]
    }

    pub fn num_transmitters(&self) -> usize {
        self.tx_irs.len()
    }

    pub fn num_panels(&self) -> usize {
        self.irs_rx.len()
    }

    pub fn num_receivers(&self) -> usize {
        self.irs_rx.first().map_or(0, Vec::len)
    }
}

/// Per-element reflection coefficients of one panel: amplitude
/// `κ_m ∈ (0, 1]` and phase `θ_m ∈ [0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftConfig {
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl PhaseShiftConfig {
    /// Builds a configuration, normalizing phases into `[0, 2π)`.
    pub fn new(amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self, ChannelError> {
        if amplitudes.len() != phases.len() {
            return Err(ChannelError::LengthMismatch(amplitudes.len(), phases.len()));
        }
        for &a in &amplitudes {
            if !(a > 0.0 && a <= 1.0) {
                return Err(ChannelError::InvalidAmplitude(a));
            }
        }
        let tau = 2.0 * std::f64::consts::PI;
        let phases = phases.into_iter().map(|p| p.rem_euclid(tau)).collect();
        Ok(Self { amplitudes, phases })
    }

    /// Uniform amplitude and phase across all elements.
    pub fn uniform(amplitude: f64, phase: f64, len: usize) -> Result<Self, ChannelError> {
        Self::new(vec![amplitude; len], vec![phase; len])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    #[inline]
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Reflection coefficient `κ_m e^(jθ_m)` of element `m`.
    #[inline]
    pub fn coefficient(&self, m: usize) -> Complex64 {
        Complex64::from_polar(self.amplitudes[m], self.phases[m])
    }
}

/// Estimated and error components of the cascaded per-pair channel
/// `hᵀ Θ g` for one panel.
///
/// Returns `(estimate, error)` where `estimate = ĥᵀΘĝ` and
/// `error = h̃ᵀΘĝ + ĥᵀΘg̃ + h̃ᵀΘg̃`.
pub fn cascaded_channel(
    h_est: &ChannelVector,
    h_err: &ChannelVector,
    theta: &PhaseShiftConfig,
    g_est: &ChannelVector,
    g_err: &ChannelVector,
) -> Result<(Complex64, Complex64), ChannelError> {
    let m = h_est.len();
    for len in [h_err.len(), theta.len(), g_est.len(), g_err.len()] {
        if len != m {
            return Err(ChannelError::LengthMismatch(m, len));
        }
    }
    let mut estimate = Complex64::new(0.0, 0.0);
    let mut error = Complex64::new(0.0, 0.0);
    for i in 0..m {
        let coeff = theta.coefficient(i);
        let he = h_est.entries[i];
        let hd = h_err.entries[i];
        let ge = g_est.entries[i];
        let gd = g_err.entries[i];
        estimate += he * coeff * ge;
        error += hd * coeff * ge + he * coeff * gd + hd * coeff * gd;
    }
    Ok((estimate, error))
}

/// Closed-form variance proxy of the cascaded estimation error of one
/// panel/pair:
///
/// ```text
/// Transpose:  σ²_g |ĥᵀĥ| + σ²_h |ĝᵀĝ| + σ²_h σ²_g
/// Hermitian:  σ²_g ‖ĥ‖²  + σ²_h ‖ĝ‖²  + M σ²_h σ²_g
/// ```
///
/// The Hermitian form is the exact variance of the sampled error terms at
/// unit reflection amplitude; the transpose form is the conventional
/// closed-form expression.
pub fn cee_cascaded_variance(
    h_est: &ChannelVector,
    g_est: &ChannelVector,
    h_variance: f64,
    g_variance: f64,
    norm: VarianceNorm,
) -> Result<f64, ChannelError> {
    if h_est.len() != g_est.len() {
        return Err(ChannelError::LengthMismatch(h_est.len(), g_est.len()));
    }
    for v in [h_variance, g_variance] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(ChannelError::InvalidVariance(v));
        }
    }
    Ok(match norm {
        VarianceNorm::Transpose => {
            g_variance * h_est.transpose_product().norm()
                + h_variance * g_est.transpose_product().norm()
                + h_variance * g_variance
        }
        VarianceNorm::Hermitian => {
            g_variance * h_est.hermitian_norm_sq()
                + h_variance * g_est.hermitian_norm_sq()
                + h_est.len() as f64 * h_variance * g_variance
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference_params(model: GainModel) -> RadioParams {
        RadioParams::new(3.0e11, 0.4e-3, 0.0033, 1.0, 1.0, 1.0, 2.0, model, false).unwrap()
    }

    #[test]
    fn wavelength_follows_carrier() {
        let p = reference_params(GainModel::Trigonometric);
        assert_eq!(p.wavelength, 0.001);
        assert_relative_eq!(p.element_area, 1.6e-7, epsilon = 1e-20);
        let p142 = RadioParams::new(
            1.42e11, 0.4e-3, 0.0033, 1.0, 1.0, 1.0, 2.0, GainModel::Trigonometric, false,
        )
        .unwrap();
        assert_relative_eq!(p142.wavelength, 3.0e8 / 1.42e11, epsilon = 1e-18);
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = RadioParams::new(
            0.0, 0.4e-3, 0.0033, 1.0, 1.0, 1.0, 2.0, GainModel::CosQ, false,
        );
        assert!(bad.is_err());
        let bad = RadioParams::new(
            3.0e11, 0.4e-3, -0.1, 1.0, 1.0, 1.0, 2.0, GainModel::CosQ, false,
        );
        assert!(bad.is_err());
        let bad = RadioParams::new(
            3.0e11, 0.4e-3, 0.0033, 1.0, 1.0, 1.5, 2.0, GainModel::CosQ, false,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn cos_q_gain_boresight_and_grazing() {
        let p = reference_params(GainModel::CosQ);
        // 2γ(q+1) at boresight with γ=1, q=2 gives 6.
        assert_eq!(element_gain_cos_q(0.0, &p), 6.0);
        // 6·cos²(π/3) = 1.5.
        assert_relative_eq!(
            element_gain_cos_q(std::f64::consts::FRAC_PI_3, &p),
            1.5,
            epsilon = 1e-12
        );
        assert_eq!(element_gain_cos_q(std::f64::consts::FRAC_PI_2, &p), 0.0);
        assert_eq!(element_gain_cos_q(2.0, &p), 0.0);
    }

    #[test]
    fn trig_gains_at_boresight_hit_peak() {
        let p = reference_params(GainModel::Trigonometric);
        let peak = p.element_peak_gain();
        assert_relative_eq!(
            peak,
            4.0 * std::f64::consts::PI * 1.6e-7 / 1e-6,
            epsilon = 1e-12
        );
        assert_relative_eq!(trig_gain_incident(0.0, &p), peak, epsilon = 1e-12);
        let boresight = LinkAngles { elevation: 0.0, azimuth: 0.0 };
        assert_relative_eq!(trig_gain_reflected(&boresight, &p), peak, epsilon = 1e-12);
        assert_relative_eq!(
            cascaded_element_gain_trig(0.0, &boresight, &p),
            peak * peak,
            epsilon = 1e-6
        );
    }

    #[test]
    fn trig_reflected_azimuth_term_survives_grazing() {
        // At φ = π/2 the reflected gain is the full peak regardless of ψ.
        let p = reference_params(GainModel::Trigonometric);
        let angles = LinkAngles { elevation: 1.0, azimuth: std::f64::consts::FRAC_PI_2 };
        assert_relative_eq!(trig_gain_reflected(&angles, &p), p.element_peak_gain(), epsilon = 1e-12);
    }

    #[test]
    fn gains_are_even_in_the_elevation_cosine() {
        // The projected-aperture expressions square the cosine, so a link
        // arriving from below the panel plane sees the mirror-image gain.
        let p = reference_params(GainModel::Trigonometric);
        let above = LinkAngles { elevation: 0.7, azimuth: 0.3 };
        let below =
            LinkAngles { elevation: std::f64::consts::PI - 0.7, azimuth: 0.3 };
        assert_relative_eq!(
            trig_gain_incident(above.elevation, &p),
            trig_gain_incident(below.elevation, &p),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            trig_gain_reflected(&above, &p),
            trig_gain_reflected(&below, &p),
            epsilon = 1e-12
        );
        // The directivity model is one-sided: the mirror-image link is dead.
        let q = reference_params(GainModel::CosQ);
        assert!(element_gain_cos_q(above.elevation, &q) > 0.0);
        assert_eq!(element_gain_cos_q(below.elevation, &q), 0.0);
    }

    #[test]
    fn pathloss_link_decays_with_distance_and_absorption() {
        let p = reference_params(GainModel::Trigonometric);
        let g = p.element_peak_gain();
        let near = pathloss_link(1.0, g, 1.0, &p).unwrap();
        let far = pathloss_link(10.0, g, 1.0, &p).unwrap();
        assert!(near > far);
        // Pure spreading ratio is 100; absorption adds e^(−κ·9).
        assert_relative_eq!(near / far, 100.0 * (0.0033f64 * 9.0).exp(), epsilon = 1e-9);
        assert!(pathloss_link(0.0, g, 1.0, &p).is_err());
        assert!(pathloss_link(-1.0, g, 1.0, &p).is_err());
    }

    #[test]
    fn cascaded_pathloss_matches_link_product_up_to_aperture_ratio() {
        // Two single hops with A² each differ from the cascade's λ⁴ by
        // (λ/A)⁴ exactly.
        let p = reference_params(GainModel::Trigonometric);
        let inc = LinkAngles { elevation: 0.35, azimuth: 1.1 };
        let rfl = LinkAngles { elevation: 0.6, azimuth: 4.0 };
        let (d1, d2) = (3.0, 7.5);
        let g_inc = trig_gain_incident(inc.elevation, &p);
        let g_rfl = trig_gain_reflected(&rfl, &p);
        let cascade = pathloss_cascaded(d1, d2, g_inc, g_rfl, &p).unwrap();
        let product = pathloss_link(d1, g_inc, p.tx_gain, &p).unwrap()
            * pathloss_link(d2, g_rfl, p.rx_gain, &p).unwrap();
        let ratio = (p.wavelength / p.element_area).powi(4);
        assert_relative_eq!(cascade, product * ratio, epsilon = 1e-9);
    }

    #[test]
    fn channel_vector_entries_match_per_element_recomputation() {
        let p = reference_params(GainModel::Trigonometric);
        let panel = IrsPanel::horizontal(Point3::new(4.0, 5.0, 3.0), 4, 3, 0.4e-3).unwrap();
        let tx = Point3::new(1.0, 2.0, 1.0);
        let h = channel_vector(tx, &panel, LinkDirection::TxToIrs, &p).unwrap();
        assert_eq!(h.len(), 12);
        for m in 0..panel.num_elements() {
            let elem = panel.element_position(m);
            let d = distance(tx, elem);
            let angles = link_angles(tx, elem).unwrap();
            let xi = pathloss_link(
                d,
                trig_gain_incident(angles.elevation, &p),
                p.tx_gain,
                &p,
            )
            .unwrap();
            let expected = Complex64::from_polar(xi.sqrt(), -p.wavenumber() * d);
            assert_abs_diff_eq!(h.entries[m].re, expected.re, epsilon = 1e-30);
            assert_abs_diff_eq!(h.entries[m].im, expected.im, epsilon = 1e-30);
        }
    }

    #[test]
    fn far_field_phase_uses_center_distance() {
        let mut p = reference_params(GainModel::Trigonometric);
        p.far_field_phase = true;
        let panel = IrsPanel::horizontal(Point3::new(0.0, 0.0, 3.0), 3, 3, 0.4e-3).unwrap();
        let tx = Point3::new(10.0, 0.0, 1.0);
        let h = channel_vector(tx, &panel, LinkDirection::TxToIrs, &p).unwrap();
        let d_center = distance(tx, panel.center);
        let expected_phase =
            (-p.wavenumber() * d_center).rem_euclid(2.0 * std::f64::consts::PI);
        for e in &h.entries {
            let got = e.arg().rem_euclid(2.0 * std::f64::consts::PI);
            assert_relative_eq!(got, expected_phase, epsilon = 1e-9);
        }
    }

    #[test]
    fn csi_error_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let variance = 0.37;
        let v = sample_csi_error(variance, 200_000, &mut rng).unwrap();
        let mean_power = v.mean_entry_power();
        assert_relative_eq!(mean_power, variance, max_relative = 0.02);
        let mean: Complex64 = v.entries.iter().sum::<Complex64>() / v.len() as f64;
        assert!(mean.norm() < 0.01);

        let zero = sample_csi_error(0.0, 16, &mut rng).unwrap();
        assert!(zero.entries.iter().all(|e| *e == Complex64::new(0.0, 0.0)));
        assert!(sample_csi_error(-1.0, 4, &mut rng).is_err());
    }

    #[test]
    fn link_variance_is_relative_to_mean_entry_power() {
        let est = ChannelVector {
            entries: vec![Complex64::new(3.0, 4.0), Complex64::new(0.0, 5.0)],
        };
        let model = CsiErrorModel::new(0.1, VarianceNorm::Transpose).unwrap();
        assert_relative_eq!(model.link_variance(&est), 0.01 * 25.0, epsilon = 1e-12);
        assert_eq!(CsiErrorModel::perfect().link_variance(&est), 0.0);
        assert!(CsiErrorModel::new(-0.5, VarianceNorm::Transpose).is_err());
    }

    #[test]
    fn phase_config_validation_and_normalization() {
        let cfg = PhaseShiftConfig::new(vec![1.0, 0.5], vec![-1.0, 7.0]).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        assert!(cfg.phases().iter().all(|&p| (0.0..tau).contains(&p)));
        assert_relative_eq!(cfg.phases()[0], tau - 1.0, epsilon = 1e-12);
        assert_relative_eq!(cfg.phases()[1], 7.0 - tau, epsilon = 1e-12);
        assert!(PhaseShiftConfig::new(vec![0.0], vec![0.0]).is_err());
        assert!(PhaseShiftConfig::new(vec![1.2], vec![0.0]).is_err());
        assert!(PhaseShiftConfig::new(vec![1.0], vec![0.0, 1.0]).is_err());
        let c = cfg.coefficient(1);
        assert_relative_eq!(c.norm(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn cascaded_channel_splits_estimate_and_error() {
        let h_est = ChannelVector { entries: vec![Complex64::new(1.0, 0.5), Complex64::new(-0.25, 2.0)] };
        let h_err = ChannelVector { entries: vec![Complex64::new(0.1, -0.2), Complex64::new(0.0, 0.3)] };
        let g_est = ChannelVector { entries: vec![Complex64::new(0.5, -1.0), Complex64::new(1.5, 0.0)] };
        let g_err = ChannelVector { entries: vec![Complex64::new(-0.1, 0.0), Complex64::new(0.2, 0.1)] };
        let theta = PhaseShiftConfig::new(vec![1.0, 0.8], vec![0.3, 5.0]).unwrap();

        let (est, err) = cascaded_channel(&h_est, &h_err, &theta, &g_est, &g_err).unwrap();
        // The full product with actual channels equals estimate + error.
        let h_act = h_est.add(&h_err).unwrap();
        let g_act = g_est.add(&g_err).unwrap();
        let zero = ChannelVector::zeros(2);
        let (full, no_err) = cascaded_channel(&h_act, &zero, &theta, &g_act, &zero).unwrap();
        assert_eq!(no_err, Complex64::new(0.0, 0.0));
        assert_abs_diff_eq!((est + err).re, full.re, epsilon = 1e-12);
        assert_abs_diff_eq!((est + err).im, full.im, epsilon = 1e-12);

        let short = ChannelVector::zeros(1);
        assert!(cascaded_channel(&h_est, &h_err, &theta, &g_est, &short).is_err());
    }

    #[test]
    fn perfect_csi_collapses_cascaded_error() {
        let h_est = ChannelVector { entries: vec![Complex64::new(1.0, 0.5); 8] };
        let g_est = ChannelVector { entries: vec![Complex64::new(0.3, -0.4); 8] };
        let zero = ChannelVector::zeros(8);
        let theta = PhaseShiftConfig::uniform(1.0, 0.0, 8).unwrap();
        let (_, err) = cascaded_channel(&h_est, &zero, &theta, &g_est, &zero).unwrap();
        assert_eq!(err, Complex64::new(0.0, 0.0));
        let v = cee_cascaded_variance(&h_est, &g_est, 0.0, 0.0, VarianceNorm::Transpose).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn cee_variance_norm_modes() {
        let h = ChannelVector { entries: vec![Complex64::new(1.0, 1.0), Complex64::new(1.0, -1.0)] };
        let g = ChannelVector { entries: vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 2.0)] };
        // hᵀh = (1+i)² + (1−i)² = 0; ‖h‖² = 4. gᵀg = 4 + (2i)² = 0; ‖g‖² = 8.
        let t = cee_cascaded_variance(&h, &g, 0.5, 0.25, VarianceNorm::Transpose).unwrap();
        assert_relative_eq!(t, 0.25 * 0.0 + 0.5 * 0.0 + 0.5 * 0.25, epsilon = 1e-15);
        let herm = cee_cascaded_variance(&h, &g, 0.5, 0.25, VarianceNorm::Hermitian).unwrap();
        assert_relative_eq!(herm, 0.25 * 4.0 + 0.5 * 8.0 + 2.0 * 0.5 * 0.25, epsilon = 1e-15);
        assert!(cee_cascaded_variance(&h, &g, -0.1, 0.0, VarianceNorm::Transpose).is_err());
    }

    #[test]
    fn hermitian_variance_matches_monte_carlo() {
        // Sample the cascaded error for fixed estimates at unit amplitude;
        // its empirical variance must match the Hermitian-mode closed form.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let m = 16;
        let p = reference_params(GainModel::Trigonometric);
        let panel = IrsPanel::horizontal(Point3::new(2.0, 3.0, 2.5), 4, 4, 0.4e-3).unwrap();
        let h_est = channel_vector(Point3::new(0.0, 0.0, 1.0), &panel, LinkDirection::TxToIrs, &p).unwrap();
        let g_est = channel_vector(Point3::new(5.0, 1.0, 1.0), &panel, LinkDirection::IrsToRx, &p).unwrap();
        let scale = h_est.mean_entry_power().sqrt() * g_est.mean_entry_power().sqrt();
        let (var_h, var_g) = (0.04 * h_est.mean_entry_power(), 0.09 * g_est.mean_entry_power());
        let theta = PhaseShiftConfig::uniform(1.0, 1.234, m).unwrap();

        let trials = 100_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let h_err = sample_csi_error(var_h, m, &mut rng).unwrap();
            let g_err = sample_csi_error(var_g, m, &mut rng).unwrap();
            let (_, err) = cascaded_channel(&h_est, &h_err, &theta, &g_est, &g_err).unwrap();
            acc += err.norm_sqr();
        }
        let empirical = acc / trials as f64;
        let predicted =
            cee_cascaded_variance(&h_est, &g_est, var_h, var_g, VarianceNorm::Hermitian).unwrap();
        assert!(scale > 0.0);
        assert_relative_eq!(empirical, predicted, max_relative = 0.03);
    }
}
