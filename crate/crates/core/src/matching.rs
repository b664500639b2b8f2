//! Two-phase association via deferred acceptance.
//!
//! Both association phases are instances of the same primitive: proposers
//! rank responders by a pseudo utility, responders rank proposers by their
//! own utility, and rounds of propose/accept/displace run until no
//! unmatched proposer has anyone left to ask. Phase one matches
//! transmitters to panels on first-hop pseudo rates; phase two matches
//! receivers to the active pairs on cascaded pseudo rates. The resulting
//! matching is stable (no blocking pairs) and needs at most
//! `proposers × responders` proposals.
//!
//! Every round is logged with its proposals, acceptances, displacements,
//! and the utility sum of the standing matches, so convergence traces and
//! audits come for free.

use serde::Serialize;
use thiserror::Error;

use crate::sinr::{Allocation, Scenario, SinrError};

/// Errors from priority construction or association.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchingError {
    #[error(transparent)]
    Sinr(#[from] SinrError),
    #[error("utility matrix must be rectangular and non-empty")]
    MalformedUtilities,
    #[error("utility of pair ({0}, {1}) is not finite")]
    NonFiniteUtility(usize, usize),
    #[error("priority matrices disagree: proposers see {0} responders, responders count {1}")]
    DimensionMismatch(usize, usize),
    #[error("need at least as many panels as transmitters, got {panels} < {transmitters}")]
    NotEnoughPanels { transmitters: usize, panels: usize },
    #[error("two-phase association requires equal transmitter and receiver counts, got {transmitters} vs {receivers}")]
    UnequalPairCounts { transmitters: usize, receivers: usize },
    #[error("matching references responder {index} outside 0..{len}")]
    BadMatching { index: usize, len: usize },
}

/// Utility values with per-row descending preference orders. Ties rank the
/// lower index first.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityMatrix {
    values: Vec<Vec<f64>>,
    order: Vec<Vec<usize>>,
}

/// Builds a priority matrix from raw utilities, validating shape and
/// finiteness.
pub fn build_priorities(values: Vec<Vec<f64>>) -> Result<PriorityMatrix, MatchingError> {
    if values.is_empty() || values[0].is_empty() {
        return Err(MatchingError::MalformedUtilities);
    }
    let cols = values[0].len();
    for (p, row) in values.iter().enumerate() {
        if row.len() != cols {
            return Err(MatchingError::MalformedUtilities);
        }
        for (r, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(MatchingError::NonFiniteUtility(p, r));
            }
        }
    }
    let order = values
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..cols).collect();
            idx.sort_by(|&a, &b| {
                row[b].partial_cmp(&row[a]).expect("finite utilities").then(a.cmp(&b))
            });
            idx
        })
        .collect();
    Ok(PriorityMatrix { values, order })
}

impl PriorityMatrix {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values[0].len()
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row][col]
    }

    /// Column indices of `row`, best first.
    pub fn ranked(&self, row: usize) -> &[usize] {
        &self.order[row]
    }

    /// The matrix with rows and columns swapped, for the responder side of
    /// a reciprocal market.
    pub fn transposed(&self) -> PriorityMatrix {
        let values = (0..self.cols())
            .map(|c| (0..self.rows()).map(|r| self.values[r][c]).collect())
            .collect();
        build_priorities(values).expect("transpose of a valid matrix is valid")
    }
}

/// How a responder treats competing offers. `KeepFirstOffer` is a
/// deliberately faulty policy that never upgrades; it exists so stability
/// audits can be shown to catch broken acceptance logic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AcceptancePolicy {
    #[default]
    PreferHigherUtility,
    KeepFirstOffer,
}

/// One propose/accept round of deferred acceptance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    /// 1-based round number.
    pub round: usize,
    /// Proposals issued this round, `(proposer, responder)`.
    pub proposals: Vec<(usize, usize)>,
    /// Proposals accepted this round.
    pub accepted: Vec<(usize, usize)>,
    /// Matches broken by a displacing acceptance.
    pub displaced: Vec<(usize, usize)>,
    /// Proposals rejected outright.
    pub rejected: Vec<(usize, usize)>,
    /// All standing matches after the round, sorted by proposer.
    pub matched: Vec<(usize, usize)>,
    /// Sum of proposer-side utilities over the standing matches.
    pub matched_utility_sum: f64,
    /// Proposers without a partner after the round.
    pub unmatched: Vec<usize>,
}

/// Result of one deferred-acceptance run.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    /// Partner of each proposer, if any.
    pub proposer_partner: Vec<Option<usize>>,
    /// Partner of each responder, if any.
    pub responder_partner: Vec<Option<usize>>,
    pub rounds: Vec<RoundRecord>,
    /// Total proposal events across all rounds.
    pub total_proposals: usize,
    /// Total acceptance events (including displacing acceptances).
    pub total_acceptances: usize,
}

impl MatchOutcome {
    /// Matched pairs sorted by proposer index.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.proposer_partner
            .iter()
            .enumerate()
            .filter_map(|(p, r)| r.map(|r| (p, r)))
            .collect()
    }

    /// Cumulative proposer-side utility after each round.
    pub fn utility_trace(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.matched_utility_sum).collect()
    }
}

/// Deferred acceptance with proposers ranked by `proposer_prio`
/// (`P × R`) and responders deciding by `responder_prio` (`R × P`).
///
/// Each round, every unmatched proposer offers to its best responder not
/// yet asked; each responder keeps the best offer it has seen, displacing
/// a strictly worse current partner. No proposer asks the same responder
/// twice, so the run terminates within `P · R` proposals.
pub fn deferred_acceptance(
    proposer_prio: &PriorityMatrix,
    responder_prio: &PriorityMatrix,
) -> Result<MatchOutcome, MatchingError> {
    deferred_acceptance_with_policy(
        proposer_prio,
        responder_prio,
        AcceptancePolicy::PreferHigherUtility,
    )
}

/// [`deferred_acceptance`] with an explicit acceptance policy.
pub fn deferred_acceptance_with_policy(
    proposer_prio: &PriorityMatrix,
    responder_prio: &PriorityMatrix,
    policy: AcceptancePolicy,
) -> Result<MatchOutcome, MatchingError> {
    let p_count = proposer_prio.rows();
    let r_count = proposer_prio.cols();
    if responder_prio.rows() != r_count || responder_prio.cols() != p_count {
        return Err(MatchingError::DimensionMismatch(r_count, responder_prio.rows()));
    }

    let mut next_choice = vec![0usize; p_count];
    let mut proposer_partner: Vec<Option<usize>> = vec![None; p_count];
    let mut responder_partner: Vec<Option<usize>> = vec![None; r_count];
    let mut rounds = Vec::new();
    let mut total_proposals = 0;
    let mut total_acceptances = 0;

    loop {
        let proposals: Vec<(usize, usize)> = (0..p_count)
            .filter(|&p| proposer_partner[p].is_none() && next_choice[p] < r_count)
            .map(|p| (p, proposer_prio.ranked(p)[next_choice[p]]))
            .collect();
        if proposals.is_empty() {
            break;
        }
        for &(p, _) in &proposals {
            next_choice[p] += 1;
        }
        total_proposals += proposals.len();

        let mut accepted = Vec::new();
        let mut displaced = Vec::new();
        let mut rejected = Vec::new();
        let mut claimants: Vec<Vec<usize>> = vec![Vec::new(); r_count];
        for &(p, r) in &proposals {
            claimants[r].push(p);
        }
        for (r, claimers) in claimants.iter().enumerate() {
            if claimers.is_empty() {
                continue;
            }
            // Best new offer: highest responder-side utility, ties to the
            // lower proposer index.
            let mut best = claimers[0];
            for &p in &claimers[1..] {
                if responder_prio.value(r, p) > responder_prio.value(r, best) {
                    best = p;
                }
            }
            let keep_current = match (responder_partner[r], policy) {
                (None, _) => false,
                (Some(_), AcceptancePolicy::KeepFirstOffer) => true,
                (Some(cur), AcceptancePolicy::PreferHigherUtility) => {
                    responder_prio.value(r, best) <= responder_prio.value(r, cur)
                }
            };
            if keep_current {
                rejected.extend(claimers.iter().map(|&p| (p, r)));
            } else {
                if let Some(cur) = responder_partner[r] {
                    proposer_partner[cur] = None;
                    displaced.push((cur, r));
                }
                responder_partner[r] = Some(best);
                proposer_partner[best] = Some(r);
                accepted.push((best, r));
                rejected.extend(claimers.iter().filter(|&&p| p != best).map(|&p| (p, r)));
            }
        }
        total_acceptances += accepted.len();

        let matched: Vec<(usize, usize)> = proposer_partner
            .iter()
            .enumerate()
            .filter_map(|(p, r)| r.map(|r| (p, r)))
            .collect();
        let matched_utility_sum = matched.iter().map(|&(p, r)| proposer_prio.value(p, r)).sum();
        let unmatched =
            (0..p_count).filter(|&p| proposer_partner[p].is_none()).collect();
        rounds.push(RoundRecord {
            round: rounds.len() + 1,
            proposals,
            accepted,
            displaced,
            rejected,
            matched,
            matched_utility_sum,
            unmatched,
        });
    }

    Ok(MatchOutcome {
        proposer_partner,
        responder_partner,
        rounds,
        total_proposals,
        total_acceptances,
    })
}

/// A pair that would rather be matched to each other than to their current
/// partners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockingPair {
    pub proposer: usize,
    pub responder: usize,
}

/// Stability verdict of a matching given both sides' priorities.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub stable: bool,
    pub blocking: Vec<BlockingPair>,
}

/// Checks `matching` (partner of each proposer) for blocking pairs: a
/// proposer and responder who both strictly prefer each other over their
/// current partners, a vacancy counting as least preferred.
pub fn is_stable(
    matching: &[Option<usize>],
    proposer_prio: &PriorityMatrix,
    responder_prio: &PriorityMatrix,
) -> Result<StabilityReport, MatchingError> {
    let p_count = proposer_prio.rows();
    let r_count = proposer_prio.cols();
    if matching.len() != p_count {
        return Err(MatchingError::DimensionMismatch(p_count, matching.len()));
    }
    let mut responder_partner: Vec<Option<usize>> = vec![None; r_count];
    for (p, &r) in matching.iter().enumerate() {
        if let Some(r) = r {
            if r >= r_count {
                return Err(MatchingError::BadMatching { index: r, len: r_count });
            }
            if responder_partner[r].is_some() {
                return Err(MatchingError::BadMatching { index: r, len: r_count });
            }
            responder_partner[r] = Some(p);
        }
    }

    let mut blocking = Vec::new();
    for p in 0..p_count {
        for r in 0..r_count {
            if matching[p] == Some(r) {
                continue;
            }
            let p_prefers = match matching[p] {
                Some(cur) => proposer_prio.value(p, r) > proposer_prio.value(p, cur),
                None => true,
            };
            if !p_prefers {
                continue;
            }
            let r_prefers = match responder_partner[r] {
                Some(cur) => responder_prio.value(r, p) > responder_prio.value(r, cur),
                None => true,
            };
            if r_prefers {
                blocking.push(BlockingPair { proposer: p, responder: r });
            }
        }
    }
    Ok(StabilityReport { stable: blocking.is_empty(), blocking })
}

/// Iteration-count and monotonicity audit of a deferred-acceptance run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationAudit {
    pub total_proposals: usize,
    pub total_acceptances: usize,
    pub rounds: usize,
    /// Hard bound `proposers × responders` on proposals.
    pub proposal_bound: usize,
    pub within_bound: bool,
    /// Responder-side partner utilities never decreased across rounds.
    pub responder_monotone: bool,
    /// `(responder, round)` pairs where a responder's partner utility
    /// dropped.
    pub monotonicity_violations: Vec<(usize, usize)>,
}

/// Audits proposal counts against the `P × R` bound and checks that every
/// responder's partner utility is nondecreasing over rounds.
pub fn iteration_audit(outcome: &MatchOutcome, responder_prio: &PriorityMatrix) -> IterationAudit {
    let proposal_bound = outcome.proposer_partner.len() * outcome.responder_partner.len();
    let mut held: Vec<Option<f64>> = vec![None; outcome.responder_partner.len()];
    let mut violations = Vec::new();
    for record in &outcome.rounds {
        let mut now: Vec<Option<f64>> = vec![None; held.len()];
        for &(p, r) in &record.matched {
            now[r] = Some(responder_prio.value(r, p));
        }
        for r in 0..held.len() {
            if let (Some(prev), now_val) = (held[r], now[r]) {
                if now_val.map_or(true, |v| v < prev) {
                    violations.push((r, record.round));
                }
            }
        }
        held = now;
    }
    IterationAudit {
        total_proposals: outcome.total_proposals,
        total_acceptances: outcome.total_acceptances,
        rounds: outcome.rounds.len(),
        proposal_bound,
        within_bound: outcome.total_proposals <= proposal_bound,
        responder_monotone: violations.is_empty(),
        monotonicity_violations: violations,
    }
}

/// Which side proposes in an association phase. The default has the
/// network nodes (transmitters, then receivers) propose to the panels;
/// the switched direction lets the panels propose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProposalDirection {
    #[default]
    NodesPropose,
    PanelsPropose,
}

/// Outcome of the first phase: transmitter–panel pairs.
#[derive(Debug, Clone)]
pub struct Phase1Result {
    /// Matched `(transmitter, panel)` pairs, sorted by transmitter.
    pub pairs: Vec<(usize, usize)>,
    /// Panels left unmatched (inactive), ascending.
    pub inactive_panels: Vec<usize>,
    /// First-hop pseudo utilities, `transmitters × panels`.
    pub utilities: Vec<Vec<f64>>,
    pub outcome: MatchOutcome,
    pub direction: ProposalDirection,
}

/// Matches every transmitter to a distinct panel on first-hop pseudo
/// rates. Requires at least as many panels as transmitters; every
/// transmitter ends up matched.
pub fn phase1_tx_irs(
    scenario: &Scenario,
    direction: ProposalDirection,
) -> Result<Phase1Result, MatchingError> {
    let transmitters = scenario.num_transmitters();
    let panels = scenario.num_panels();
    if panels < transmitters {
        return Err(MatchingError::NotEnoughPanels { transmitters, panels });
    }
    let utilities = scenario.pseudo_utilities_tx_irs()?;
    let tx_prio = build_priorities(utilities.clone())?;
    let panel_prio = tx_prio.transposed();
    let (outcome, pairs) = match direction {
        ProposalDirection::NodesPropose => {
            let outcome = deferred_acceptance(&tx_prio, &panel_prio)?;
            let pairs = outcome.pairs();
            (outcome, pairs)
        }
        ProposalDirection::PanelsPropose => {
            let outcome = deferred_acceptance(&panel_prio, &tx_prio)?;
            let mut pairs: Vec<(usize, usize)> =
                outcome.pairs().into_iter().map(|(n, k)| (k, n)).collect();
            pairs.sort_unstable();
            (outcome, pairs)
        }
    };
    debug_assert_eq!(pairs.len(), transmitters);
    let inactive_panels =
        (0..panels).filter(|n| !pairs.iter().any(|&(_, pn)| pn == *n)).collect();
    Ok(Phase1Result { pairs, inactive_panels, utilities, outcome, direction })
}

/// Outcome of the second phase: the full triple allocation.
#[derive(Debug, Clone)]
pub struct Phase2Result {
    pub allocation: Allocation,
    /// The phase-one pairs the receivers were matched against, in the
    /// column order of `utilities`.
    pub pair_slots: Vec<(usize, usize)>,
    /// Cascaded pseudo utilities, `receivers × pairs`.
    pub utilities: Vec<Vec<f64>>,
    pub outcome: MatchOutcome,
    pub direction: ProposalDirection,
}

/// Matches every receiver to a distinct active pair on cascaded pseudo
/// rates and composes the final transmitter–panel–receiver triples.
pub fn phase2_rx_irs(
    scenario: &Scenario,
    phase1: &Phase1Result,
    direction: ProposalDirection,
) -> Result<Phase2Result, MatchingError> {
    let receivers = scenario.num_receivers();
    if receivers != phase1.pairs.len() {
        return Err(MatchingError::UnequalPairCounts {
            transmitters: phase1.pairs.len(),
            receivers,
        });
    }
    let pair_slots = phase1.pairs.clone();
    let utilities = scenario.pseudo_utilities_cascaded(&pair_slots)?;
    let rx_prio = build_priorities(utilities.clone())?;
    let pair_prio = rx_prio.transposed();
    let (outcome, rx_to_slot): (MatchOutcome, Vec<(usize, usize)>) = match direction {
        ProposalDirection::NodesPropose => {
            let outcome = deferred_acceptance(&rx_prio, &pair_prio)?;
            let pairs = outcome.pairs();
            (outcome, pairs)
        }
        ProposalDirection::PanelsPropose => {
            let outcome = deferred_acceptance(&pair_prio, &rx_prio)?;
            let mut pairs: Vec<(usize, usize)> =
                outcome.pairs().into_iter().map(|(a, l)| (l, a)).collect();
            pairs.sort_unstable();
            (outcome, pairs)
        }
    };
    let triples = rx_to_slot
        .iter()
        .map(|&(l, a)| {
            let (k, n) = pair_slots[a];
            (k, n, l)
        })
        .collect();
    let allocation = Allocation::new(triples)?;
    Ok(Phase2Result { allocation, pair_slots, utilities, outcome, direction })
}

/// Both association phases run back to back with the default directions.
#[derive(Debug, Clone)]
pub struct TwoPhaseResult {
    pub phase1: Phase1Result,
    pub phase2: Phase2Result,
}

impl TwoPhaseResult {
    pub fn allocation(&self) -> &Allocation {
        &self.phase2.allocation
    }

    pub fn total_proposals(&self) -> usize {
        self.phase1.outcome.total_proposals + self.phase2.outcome.total_proposals
    }
}

/// Runs the two-phase association with given proposal directions.
pub fn two_phase_association(
    scenario: &Scenario,
    direction: ProposalDirection,
) -> Result<TwoPhaseResult, MatchingError> {
    let phase1 = phase1_tx_irs(scenario, direction)?;
    let phase2 = phase2_rx_irs(scenario, &phase1, direction)?;
    Ok(TwoPhaseResult { phase1, phase2 })
}
