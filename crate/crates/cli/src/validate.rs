//! Randomized invariant suite behind `irsnet validate`.
//!
//! Four checks run `budget` instances each:
//! - `stability`: deferred acceptance on random utility matrices yields
//!   zero blocking pairs, bounded proposals, and monotone responder-side
//!   utilities.
//! - `es_dominance`: exhaustive search beats every other scheme on random
//!   small scenarios.
//! - `iteration_bounds`: the two-phase association respects its proposal
//!   and round bounds and both phases are stable.
//! - `coherent_dominance`: ideal phase shifts beat random phase
//!   configurations on random single-link scenarios.
//!
//! Instances regenerate deterministically from the configured seed, the
//! check name, and the instance index, so an emitted counterexample file
//! replays to the same failure.

use std::fs;
use std::path::Path;

use irsnet::baselines::{run_scheme, SchemeId};
use irsnet::channel::PhaseShiftConfig;
use irsnet::matching::{
    build_priorities, deferred_acceptance_with_policy, is_stable, iteration_audit,
    two_phase_association, AcceptancePolicy, PriorityMatrix, ProposalDirection,
};
use irsnet::sim::{generate_scenario, SimConfig, TxPowerDbm};
use irsnet::sinr::{Allocation, PhaseAssignment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::CliError;

/// Stream bases keep every check's draws disjoint from each other and
/// from simulation trials (which use streams `trial·8 .. trial·8+7`).
const STABILITY_STREAM: u64 = 1 << 32;
const ES_TRIAL_BASE: u64 = 1 << 33;
const ITER_TRIAL_BASE: u64 = 1 << 34;
const COHERENT_TRIAL_BASE: u64 = 1 << 35;
const COHERENT_PHASE_STREAM: u64 = 1 << 39;

/// Random phase configurations tried per coherent-dominance instance.
const PHASE_DRAWS_PER_INSTANCE: u64 = 100;

const CHECKS: [&str; 4] =
    ["stability", "es_dominance", "iteration_bounds", "coherent_dominance"];

/// A self-contained record of one failing instance. Replaying it runs the
/// identical instance again.
#[derive(Debug, Serialize, Deserialize)]
pub struct Counterexample {
    pub check: String,
    pub instance: u64,
    pub inject_fault: bool,
    pub description: String,
    pub data: serde_json::Value,
    pub config: SimConfig,
}

struct Failure {
    description: String,
    data: serde_json::Value,
}

fn runtime<E: std::fmt::Display>(err: E) -> CliError {
    CliError::Runtime(err.to_string())
}

/// Scheme RNG stream convention mirrored from the trial runner: the
/// scenario of `trial` owns stream `trial·8`, schemes own the next seven.
fn scheme_rng(seed: u64, trial: u64, scheme: SchemeId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial * 8 + 1 + scheme.stream_offset());
    rng
}

/// Copy of `config` shrunk to a check-sized topology.
fn shrink_topology(config: &SimConfig, pairs: usize, panels: usize, side: usize) -> SimConfig {
    let mut cfg = config.clone();
    cfg.topology.num_transmitters = pairs;
    cfg.topology.num_receivers = pairs;
    cfg.topology.num_irs = panels;
    cfg.topology.elements_x = side;
    cfg.topology.elements_y = side;
    if let TxPowerDbm::PerTransmitter(list) = &cfg.radio.tx_power_dbm {
        cfg.radio.tx_power_dbm = TxPowerDbm::Uniform(list[0]);
    }
    cfg.sweep = None;
    cfg
}

fn audit_problems(
    outcome: &irsnet::matching::MatchOutcome,
    proposer_prio: &PriorityMatrix,
    responder_prio: &PriorityMatrix,
    label: &str,
) -> Result<Vec<String>, CliError> {
    let mut problems = Vec::new();
    let report =
        is_stable(&outcome.proposer_partner, proposer_prio, responder_prio).map_err(runtime)?;
    if !report.stable {
        let pairs: Vec<(usize, usize)> =
            report.blocking.iter().map(|b| (b.proposer, b.responder)).collect();
        problems.push(format!("{label}: blocking pairs {pairs:?}"));
    }
    let audit = iteration_audit(outcome, responder_prio);
    if !audit.within_bound {
        problems.push(format!(
            "{label}: {} proposals exceed the {} bound",
            audit.total_proposals, audit.proposal_bound
        ));
    }
    if !audit.responder_monotone {
        problems.push(format!(
            "{label}: responder utility dropped at (responder, round) {:?}",
            audit.monotonicity_violations
        ));
    }
    Ok(problems)
}

fn check_stability(
    config: &SimConfig,
    instance: u64,
    inject_fault: bool,
) -> Result<Option<Failure>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STABILITY_STREAM + instance);
    let p_count = rng.random_range(1..=5);
    let r_count = rng.random_range(p_count..=8);
    let proposer: Vec<Vec<f64>> =
        (0..p_count).map(|_| (0..r_count).map(|_| rng.random()).collect()).collect();
    let responder: Vec<Vec<f64>> =
        (0..r_count).map(|_| (0..p_count).map(|_| rng.random()).collect()).collect();
    let pp = build_priorities(proposer.clone()).map_err(runtime)?;
    let rp = build_priorities(responder.clone()).map_err(runtime)?;
    let policy = if inject_fault {
        AcceptancePolicy::KeepFirstOffer
    } else {
        AcceptancePolicy::PreferHigherUtility
    };
    let outcome = deferred_acceptance_with_policy(&pp, &rp, policy).map_err(runtime)?;
    let problems = audit_problems(&outcome, &pp, &rp, "matching")?;
    if problems.is_empty() {
        return Ok(None);
    }
    Ok(Some(Failure {
        description: problems.join("; "),
        data: json!({
            "proposer_utilities": proposer,
            "responder_utilities": responder,
            "matching": outcome.proposer_partner,
        }),
    }))
}

fn check_es_dominance(config: &SimConfig, instance: u64) -> Result<Option<Failure>, CliError> {
    let k = 2 + (instance % 2) as usize;
    let n = k + ((instance >> 1) % 2) as usize;
    let cfg = shrink_topology(config, k, n, 2);
    let trial = ES_TRIAL_BASE + instance;
    let scenario = generate_scenario(&cfg, trial)?;
    let mut rng = scheme_rng(cfg.seed, trial, SchemeId::ExhaustiveSearch);
    let es = run_scheme(&scenario, SchemeId::ExhaustiveSearch, cfg.enumeration_budget, &mut rng)
        .map_err(runtime)?;
    let es_rate = scenario.sum_rate(&es.allocation).map_err(runtime)?;
    for scheme in SchemeId::all() {
        if scheme == SchemeId::ExhaustiveSearch {
            continue;
        }
        let mut rng = scheme_rng(cfg.seed, trial, scheme);
        let run = run_scheme(&scenario, scheme, cfg.enumeration_budget, &mut rng)
            .map_err(runtime)?;
        let rate = scenario.sum_rate(&run.allocation).map_err(runtime)?;
        if rate > es_rate {
            return Ok(Some(Failure {
                description: format!(
                    "{scheme} sum rate {rate:.6e} exceeds exhaustive search {es_rate:.6e} \
                     on K={k}, N={n}"
                ),
                data: json!({
                    "scheme": scheme.as_str(),
                    "k": k,
                    "n": n,
                    "scheme_sum_rate": rate,
                    "es_sum_rate": es_rate,
                }),
            }));
        }
    }
    Ok(None)
}

fn check_iteration_bounds(config: &SimConfig, instance: u64) -> Result<Option<Failure>, CliError> {
    let k = 1 + (instance % 3) as usize;
    let n = k + ((instance >> 2) % 3) as usize;
    let cfg = shrink_topology(config, k, n, 2);
    let scenario = generate_scenario(&cfg, ITER_TRIAL_BASE + instance)?;
    let result =
        two_phase_association(&scenario, ProposalDirection::NodesPropose).map_err(runtime)?;

    let mut problems = Vec::new();
    let bound = k * n + k * k;
    if result.total_proposals() > bound {
        problems.push(format!(
            "total proposals {} exceed K·N + L² = {bound}",
            result.total_proposals()
        ));
    }
    if result.phase1.outcome.rounds.len() > k * n {
        problems.push(format!(
            "phase 1 ran {} rounds, bound is {}",
            result.phase1.outcome.rounds.len(),
            k * n
        ));
    }
    if result.phase2.outcome.rounds.len() > k * k {
        problems.push(format!(
            "phase 2 ran {} rounds, bound is {}",
            result.phase2.outcome.rounds.len(),
            k * k
        ));
    }
    let pp1 = build_priorities(result.phase1.utilities.clone()).map_err(runtime)?;
    let rp1 = pp1.transposed();
    problems.extend(audit_problems(&result.phase1.outcome, &pp1, &rp1, "phase 1")?);
    let pp2 = build_priorities(result.phase2.utilities.clone()).map_err(runtime)?;
    let rp2 = pp2.transposed();
    problems.extend(audit_problems(&result.phase2.outcome, &pp2, &rp2, "phase 2")?);

    if problems.is_empty() {
        return Ok(None);
    }
    Ok(Some(Failure {
        description: problems.join("; "),
        data: json!({
            "k": k,
            "n": n,
            "allocation": result.allocation().triples(),
            "total_proposals": result.total_proposals(),
        }),
    }))
}

fn check_coherent_dominance(config: &SimConfig, instance: u64) -> Result<Option<Failure>, CliError> {
    let cfg = shrink_topology(config, 1, 1, 8);
    let scenario = generate_scenario(&cfg, COHERENT_TRIAL_BASE + instance)?;
    let allocation = Allocation::new(vec![(0, 0, 0)]).map_err(runtime)?;
    let ideal = scenario.sinr_ideal(&allocation, 0).map_err(runtime)?;
    let m = scenario.topology.panels[0].num_elements();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(COHERENT_PHASE_STREAM + instance);
    for draw in 0..PHASE_DRAWS_PER_INSTANCE {
        let phases: Vec<f64> =
            (0..m).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let shifts = PhaseShiftConfig::new(vec![scenario.reflect_amplitude; m], phases.clone())
            .map_err(runtime)?;
        let mut assignment = PhaseAssignment::new();
        assignment.insert(0, shifts);
        let random = scenario.sinr(&allocation, &assignment, 0).map_err(runtime)?;
        if random > ideal {
            return Ok(Some(Failure {
                description: format!(
                    "random phase draw {draw} yields SINR {random:.6e}, above the ideal \
                     configuration's {ideal:.6e}"
                ),
                data: json!({ "draw": draw, "random_sinr": random, "ideal_sinr": ideal }),
            }));
        }
    }
    Ok(None)
}

fn run_instance(
    check: &str,
    config: &SimConfig,
    instance: u64,
    inject_fault: bool,
) -> Result<Option<Failure>, CliError> {
    match check {
        "stability" => check_stability(config, instance, inject_fault),
        "es_dominance" => check_es_dominance(config, instance),
        "iteration_bounds" => check_iteration_bounds(config, instance),
        "coherent_dominance" => check_coherent_dominance(config, instance),
        other => Err(CliError::Runtime(format!("unknown check {other:?}"))),
    }
}

/// Runs every check `budget` times; on any violation writes the first
/// counterexample to `counterexample_path` and exits with the check code.
pub fn run_suite(
    config: &SimConfig,
    budget: u64,
    inject_fault: bool,
    counterexample_path: &Path,
) -> Result<(), CliError> {
    let mut first_failure: Option<Counterexample> = None;
    let mut total_violations = 0u64;
    for check in CHECKS {
        let mut violations = 0u64;
        for instance in 0..budget {
            if let Some(failure) = run_instance(check, config, instance, inject_fault)? {
                violations += 1;
                if first_failure.is_none() {
                    first_failure = Some(Counterexample {
                        check: check.to_string(),
                        instance,
                        inject_fault,
                        description: failure.description,
                        data: failure.data,
                        config: config.clone(),
                    });
                }
            }
        }
        total_violations += violations;
        println!("{check}: {budget} instances, {violations} violations");
    }

    if let Some(counterexample) = first_failure {
        let body = serde_json::to_string_pretty(&counterexample)
            .map_err(|e| CliError::Runtime(format!("cannot serialize counterexample: {e}")))?;
        fs::write(counterexample_path, body).map_err(|e| {
            CliError::Runtime(format!("cannot write {}: {e}", counterexample_path.display()))
        })?;
        eprintln!(
            "counterexample ({} instance {}): {}",
            counterexample.check, counterexample.instance, counterexample.description
        );
        return Err(CliError::Check(format!(
            "{total_violations} violations; first counterexample written to {}",
            counterexample_path.display()
        )));
    }
    println!("validate: all checks passed ({budget} instances per check)");
    Ok(())
}

/// Reruns the exact instance recorded in a counterexample file.
pub fn replay(path: &Path, _config: &SimConfig) -> Result<(), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let counterexample: Counterexample = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let outcome = run_instance(
        &counterexample.check,
        &counterexample.config,
        counterexample.instance,
        counterexample.inject_fault,
    )?;
    match outcome {
        Some(failure) => {
            eprintln!(
                "replay {} instance {}: still failing: {}",
                counterexample.check, counterexample.instance, failure.description
            );
            Err(CliError::Check(format!(
                "counterexample {} reproduces the failure",
                path.display()
            )))
        }
        None => {
            println!(
                "replay {} instance {}: passes",
                counterexample.check, counterexample.instance
            );
            Ok(())
        }
    }
}
