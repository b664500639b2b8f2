//! System-level simulator for terahertz networks assisted by multiple
//! intelligent reflecting surfaces.
//!
//! The crate models a deployment region in which every transmitter
//! reaches its receiver only through a reflecting panel: per-element
//! line-of-sight channels with molecular absorption, imperfect channel
//! estimates, SINR and sum-rate evaluation under ideal phase
//! configuration, and the allocation problem of deciding which
//! transmitter uses which panel to serve which receiver.
//!
//! Modules, bottom up:
//!
//! - [`geometry`]: points, panels, element grids, near/far-field boundary.
//! - [`channel`]: element gains, pathloss, channel vectors, CSI error
//!   model, phase-shift configurations.
//! - [`sinr`]: allocations, SINR with co-channel and estimation-error
//!   interference, sum rate, pseudo SINRs, and a memoizing evaluator.
//! - [`matching`]: deferred acceptance with audit trails and the
//!   two-phase association built on it.
//! - [`baselines`]: exhaustive, partial-exhaustive, greedy, nearest, and
//!   random allocation schemes.
//! - [`sim`]: configuration, seeded scenario generation, Monte-Carlo
//!   trials, and parameter sweeps.
//! - [`fixtures`]: embedded reference traces and radio constants used by
//!   the validation tooling.
//!
//! Determinism: all randomness flows through a counter-based generator
//! seeded from the configuration; every trial's scenario and every
//! scheme's internal draws use disjoint, fixed stream indices. Repeated
//! runs of the same configuration reproduce results bit for bit,
//! including under parallel execution.

pub mod baselines;
pub mod channel;
pub mod fixtures;
pub mod geometry;
pub mod matching;
pub mod sim;
pub mod sinr;

pub use baselines::{run_scheme, BaselineError, SchemeId, SchemeRun};
pub use channel::{
    ChannelError, ChannelSet, CsiErrorModel, GainModel, PhaseShiftConfig, RadioParams,
    VarianceNorm, SPEED_OF_LIGHT,
};
pub use geometry::{FieldRegion, GeometryError, IrsPanel, Point3, Topology};
pub use matching::{
    deferred_acceptance, is_stable, two_phase_association, MatchOutcome, MatchingError,
    PriorityMatrix, ProposalDirection,
};
pub use sim::{
    generate_scenario, run_sweep, run_trial, run_trials, SimConfig, SimError, SweepRow,
    SweepVariable, TrialResult,
};
pub use sinr::{Allocation, Scenario, SinrError, SumRateEvaluator};

/// Crate version, surfaced in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(test)]
pub(crate) mod testkit {
    //! Small seeded scenarios for unit tests.

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::channel::{
        ChannelSet, CsiErrorModel, GainModel, RadioParams, VarianceNorm, SPEED_OF_LIGHT,
    };
    use crate::geometry::{IrsPanel, Point3, Topology};
    use crate::sinr::{dbm_to_watts, Scenario};

    /// A random scenario with default radio parameters: `m_side × m_side`
    /// elements per panel, 25 dBm transmitters, a -64 dBm noise floor,
    /// and full reflection amplitude.
    pub fn scenario(
        num_tx: usize,
        num_rx: usize,
        num_panels: usize,
        m_side: usize,
        relative_error: f64,
        seed: u64,
    ) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let csi = CsiErrorModel::new(relative_error, VarianceNorm::Transpose).unwrap();
        scenario_with(
            num_tx,
            num_rx,
            num_panels,
            m_side,
            csi,
            GainModel::Trigonometric,
            &mut rng,
        )
    }

    /// [`scenario`] with explicit CSI model, gain model, and generator.
    pub fn scenario_with(
        num_tx: usize,
        num_rx: usize,
        num_panels: usize,
        m_side: usize,
        csi: CsiErrorModel,
        gain_model: GainModel,
        rng: &mut ChaCha8Rng,
    ) -> Scenario {
        let carrier = 3.0e11;
        let wavelength = SPEED_OF_LIGHT / carrier;
        let params = RadioParams::new(
            carrier,
            0.4 * wavelength,
            0.0033,
            1.0,
            1.0,
            1.0,
            2.0,
            gain_model,
            false,
        )
        .unwrap();
        let element_side = params.element_area.sqrt();

        let area = 20.0;
        let transmitters: Vec<Point3> = (0..num_tx)
            .map(|_| {
                Point3::new(rng.random_range(0.0..area), rng.random_range(0.0..area), 1.0)
            })
            .collect();
        let receivers: Vec<Point3> = (0..num_rx)
            .map(|_| {
                Point3::new(rng.random_range(0.0..area), rng.random_range(0.0..area), 1.0)
            })
            .collect();
        let panels: Vec<IrsPanel> = (0..num_panels)
            .map(|_| {
                let center = Point3::new(
                    rng.random_range(0.0..area),
                    rng.random_range(0.0..area),
                    rng.random_range(0.0..5.0),
                );
                IrsPanel::horizontal(center, m_side, m_side, element_side).unwrap()
            })
            .collect();
        let topology = Topology { transmitters, receivers, panels };
        let channels = ChannelSet::generate(&topology, &params, &csi, rng).unwrap();

        Scenario::new(
            topology,
            params,
            channels,
            vec![dbm_to_watts(25.0); num_tx],
            dbm_to_watts(-64.0),
            csi.variance_norm,
            1.0,
        )
        .unwrap()
    }
}
