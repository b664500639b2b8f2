//! Embedded reference data for validating the association engine and the
//! radio arithmetic.
//!
//! The association fixture is a worked three-pair, four-panel instance
//! with utilities rounded to three decimals. Both sides' utility tables
//! are embedded verbatim (they are rounded independently, so the
//! responder table is not exactly the transpose). The expected
//! round-by-round traces, final matchings, and proposal counts were
//! worked out by hand and are checked against the engine.
//!
//! The radio fixtures pin the near/far-field boundary for three panel
//! sizes and the receiver noise floor for the default waveform.

use serde::Serialize;

use crate::channel::SPEED_OF_LIGHT;
use crate::geometry::rayleigh_distance;
use crate::matching::{
    build_priorities, deferred_acceptance, is_stable, MatchingError, RoundRecord,
};
use crate::sinr::{noise_power, Allocation};

/// A worked association instance with its expected traces.
#[derive(Debug, Clone)]
pub struct AssociationFixture {
    /// First-phase proposer utilities, transmitters over panels.
    pub tx_utilities: Vec<Vec<f64>>,
    /// First-phase responder utilities, panels over transmitters.
    pub panel_utilities: Vec<Vec<f64>>,
    /// Second-phase proposer utilities, receivers over active pairs.
    pub rx_utilities: Vec<Vec<f64>>,
    /// Second-phase responder utilities, active pairs over receivers.
    pub pair_utilities: Vec<Vec<f64>>,
    /// Expected standing-match utility sum after each first-phase round.
    pub phase1_round_sums: Vec<f64>,
    /// Expected first-phase matching, `(transmitter, panel)`.
    pub phase1_pairs: Vec<(usize, usize)>,
    /// Panels expected to stay vacant after phase one.
    pub phase1_vacant: Vec<usize>,
    pub phase1_proposals: usize,
    pub phase1_acceptances: usize,
    /// Expected standing-match utility sum after each second-phase round.
    pub phase2_round_sums: Vec<f64>,
    /// Expected second-phase matching, `(receiver, pair slot)`.
    pub phase2_matches: Vec<(usize, usize)>,
    /// Expected composed allocation triples, `(tx, panel, rx)`.
    pub allocation: Vec<(usize, usize, usize)>,
}

/// The reference association instance.
pub fn reference_association() -> AssociationFixture {
    AssociationFixture {
        tx_utilities: vec![
            vec![0.623, 0.134, 0.026, 0.012],
            vec![0.505, 0.448, 0.044, 0.022],
            vec![0.025, 0.203, 0.160, 0.157],
        ],
        panel_utilities: vec![
            vec![0.623, 0.504, 0.025],
            vec![0.134, 0.448, 0.203],
            vec![0.026, 0.044, 0.160],
            vec![0.012, 0.022, 0.157],
        ],
        rx_utilities: vec![
            vec![0.021, 0.033, 0.010],
            vec![0.040, 0.038, 0.003],
            vec![0.058, 0.012, 0.020],
        ],
        pair_utilities: vec![
            vec![0.020, 0.040, 0.058],
            vec![0.033, 0.038, 0.012],
            vec![0.010, 0.003, 0.020],
        ],
        phase1_round_sums: vec![0.826, 1.071, 1.231],
        phase1_pairs: vec![(0, 0), (1, 1), (2, 2)],
        phase1_vacant: vec![3],
        phase1_proposals: 5,
        phase1_acceptances: 4,
        phase2_round_sums: vec![0.091, 0.096, 0.096, 0.106],
        phase2_matches: vec![(0, 2), (1, 1), (2, 0)],
        allocation: vec![(0, 0, 2), (1, 1, 1), (2, 2, 0)],
    }
}

/// Near/far boundary reference: square panels of half-wavelength-spaced
/// elements at 300 GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighRow {
    pub elements_per_side: usize,
    pub aperture_m: f64,
    pub distance_m: f64,
}

/// The boundary distances for three panel sizes at 300 GHz with 0.4
/// wavelength elements.
pub fn rayleigh_reference() -> Vec<RayleighRow> {
    vec![
        RayleighRow { elements_per_side: 30, aperture_m: 0.012, distance_m: 0.288 },
        RayleighRow { elements_per_side: 50, aperture_m: 0.020, distance_m: 0.800 },
        RayleighRow { elements_per_side: 100, aperture_m: 0.040, distance_m: 3.200 },
    ]
}

/// Receiver noise floor reference for the default waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRow {
    pub psd_dbm_per_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub expected_dbm: f64,
}

/// Thermal density -174 dBm/Hz over 10 GHz with a 10 dB noise figure.
pub fn noise_reference() -> NoiseRow {
    NoiseRow {
        psd_dbm_per_hz: -174.0,
        bandwidth_hz: 1e10,
        noise_figure_db: 10.0,
        expected_dbm: -64.0,
    }
}

/// A single named fixture check.
#[derive(Debug, Clone, Serialize)]
pub struct FixtureCheck {
    pub name: String,
    pub passed: bool,
    /// Human-readable expected/actual summary, with per-round diffs on
    /// mismatch.
    pub detail: String,
}

/// Results of running every fixture.
#[derive(Debug, Clone, Serialize)]
pub struct FixtureReport {
    pub checks: Vec<FixtureCheck>,
}

impl FixtureReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &FixtureCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

const SUM_TOLERANCE: f64 = 1e-9;

fn fmt_sums(sums: &[f64]) -> String {
    sums.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join(" ")
}

fn fmt_pairs(pairs: &[(usize, usize)]) -> String {
    pairs.iter().map(|&(a, b)| format!("({a},{b})")).collect::<Vec<_>>().join(" ")
}

fn check(name: &str, passed: bool, detail: String) -> FixtureCheck {
    FixtureCheck { name: name.to_string(), passed, detail }
}

fn check_round_sums(name: &str, rounds: &[RoundRecord], expected: &[f64]) -> FixtureCheck {
    let actual: Vec<f64> = rounds.iter().map(|r| r.matched_utility_sum).collect();
    if actual.len() != expected.len() {
        return check(
            name,
            false,
            format!("expected {} rounds, got {}", expected.len(), actual.len()),
        );
    }
    let mismatches: Vec<String> = expected
        .iter()
        .zip(&actual)
        .enumerate()
        .filter(|(_, (e, a))| (*e - *a).abs() > SUM_TOLERANCE)
        .map(|(i, (e, a))| format!("round {}: expected {e:.3}, got {a:.3}", i + 1))
        .collect();
    if mismatches.is_empty() {
        check(name, true, format!("sums {}", fmt_sums(&actual)))
    } else {
        check(name, false, mismatches.join("; "))
    }
}

fn check_matching(
    name: &str,
    actual: &[(usize, usize)],
    expected: &[(usize, usize)],
) -> FixtureCheck {
    if actual == expected {
        check(name, true, format!("pairs {}", fmt_pairs(actual)))
    } else {
        check(
            name,
            false,
            format!("expected {}, got {}", fmt_pairs(expected), fmt_pairs(actual)),
        )
    }
}

fn check_count(name: &str, actual: usize, expected: usize) -> FixtureCheck {
    check(
        name,
        actual == expected,
        if actual == expected {
            format!("{actual}")
        } else {
            format!("expected {expected}, got {actual}")
        },
    )
}

/// Runs all embedded fixtures against the live implementation.
pub fn run_all() -> Result<FixtureReport, MatchingError> {
    let fixture = reference_association();
    let mut checks = Vec::new();

    let tx_prio = build_priorities(fixture.tx_utilities.clone())?;
    let panel_prio = build_priorities(fixture.panel_utilities.clone())?;
    let phase1 = deferred_acceptance(&tx_prio, &panel_prio)?;
    checks.push(check_round_sums(
        "phase1 utility trace",
        &phase1.rounds,
        &fixture.phase1_round_sums,
    ));
    checks.push(check_matching("phase1 matching", &phase1.pairs(), &fixture.phase1_pairs));
    let vacant: Vec<usize> = phase1
        .responder_partner
        .iter()
        .enumerate()
        .filter_map(|(n, p)| p.is_none().then_some(n))
        .collect();
    checks.push(check(
        "phase1 vacancy",
        vacant == fixture.phase1_vacant,
        format!("vacant panels {vacant:?}"),
    ));
    checks.push(check_count("phase1 proposals", phase1.total_proposals, fixture.phase1_proposals));
    checks.push(check_count(
        "phase1 acceptances",
        phase1.total_acceptances,
        fixture.phase1_acceptances,
    ));
    let stability = is_stable(&phase1.proposer_partner, &tx_prio, &panel_prio)?;
    checks.push(check(
        "phase1 stability",
        stability.stable,
        format!("blocking pairs {:?}", stability.blocking),
    ));

    let rx_prio = build_priorities(fixture.rx_utilities.clone())?;
    let pair_prio = build_priorities(fixture.pair_utilities.clone())?;
    let phase2 = deferred_acceptance(&rx_prio, &pair_prio)?;
    checks.push(check_round_sums(
        "phase2 utility trace",
        &phase2.rounds,
        &fixture.phase2_round_sums,
    ));
    checks.push(check_matching("phase2 matching", &phase2.pairs(), &fixture.phase2_matches));
    let stability = is_stable(&phase2.proposer_partner, &rx_prio, &pair_prio)?;
    checks.push(check(
        "phase2 stability",
        stability.stable,
        format!("blocking pairs {:?}", stability.blocking),
    ));

    let triples: Vec<(usize, usize, usize)> = phase2
        .pairs()
        .iter()
        .map(|&(l, slot)| {
            let (k, n) = fixture.phase1_pairs[slot];
            (k, n, l)
        })
        .collect();
    let allocation = Allocation::new(triples)?;
    checks.push(check(
        "allocation composition",
        allocation.triples() == fixture.allocation.as_slice(),
        format!("triples {:?}", allocation.triples()),
    ));

    let wavelength = SPEED_OF_LIGHT / 3e11;
    for row in rayleigh_reference() {
        let aperture = row.elements_per_side as f64 * 0.4 * wavelength;
        let name = format!("rayleigh distance {0}x{0}", row.elements_per_side);
        match rayleigh_distance(aperture, wavelength) {
            Ok(distance) => {
                let aperture_ok = (aperture - row.aperture_m).abs() < 1e-9;
                let distance_ok = (distance - row.distance_m).abs() < 1e-9;
                checks.push(check(
                    &name,
                    aperture_ok && distance_ok,
                    format!(
                        "aperture {aperture:.4} m (expected {:.4}), boundary {distance:.4} m (expected {:.4})",
                        row.aperture_m, row.distance_m
                    ),
                ));
            }
            Err(err) => checks.push(check(&name, false, format!("error: {err}"))),
        }
    }

    let noise = noise_reference();
    match noise_power(noise.psd_dbm_per_hz, noise.bandwidth_hz, noise.noise_figure_db) {
        Ok(actual) => checks.push(check(
            "noise floor reference",
            (actual - noise.expected_dbm).abs() < 1e-9,
            format!("{actual:.3} dBm (expected {:.3})", noise.expected_dbm),
        )),
        Err(err) => checks.push(check("noise floor reference", false, format!("error: {err}"))),
    }

    Ok(FixtureReport { checks })
}
