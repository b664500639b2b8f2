//! Allocation schemes: the proposed two-phase matching and the baselines
//! it is compared against.
//!
//! Every scheme produces a full allocation of transmitter-panel-receiver
//! triples plus instrumentation (candidate evaluations for the
//! enumerating schemes, proposal counts for the matching-based ones) so
//! sweeps can report complexity next to throughput.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::distance;
use crate::matching::{two_phase_association, MatchingError, ProposalDirection, RoundRecord};
use crate::sinr::{Allocation, Scenario, SinrError, SumRateEvaluator};

/// Errors from running an allocation scheme.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error(transparent)]
    Sinr(#[from] SinrError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error("exhaustive enumeration needs {required} evaluations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("allocation schemes require equal transmitter and receiver counts, got {transmitters} vs {receivers}")]
    UnequalPairCounts { transmitters: usize, receivers: usize },
    #[error("need at least as many panels as transmitters, got {panels} < {transmitters}")]
    NotEnoughPanels { transmitters: usize, panels: usize },
}

/// Unknown scheme name in user input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown scheme {0:?}, expected one of proposed, es, pes, gs, na, ra, pra")]
pub struct ParseSchemeError(String);

/// The allocation schemes the simulator can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeId {
    /// Two-phase deferred-acceptance matching.
    #[serde(rename = "proposed")]
    Proposed,
    /// Exhaustive search over all joint allocations.
    #[serde(rename = "es")]
    ExhaustiveSearch,
    /// Two-stage exhaustive search on pseudo rates.
    #[serde(rename = "pes")]
    PartialExhaustiveSearch,
    /// Greedy claim of the best available partner, random conflict winner.
    #[serde(rename = "gs")]
    GreedySearch,
    /// Distance-only nearest association.
    #[serde(rename = "na")]
    NearestAssociation,
    /// Uniformly random joint allocation.
    #[serde(rename = "ra")]
    RandomAllocation,
    /// Uniformly random allocation drawn stage by stage.
    #[serde(rename = "pra")]
    PartialRandomAllocation,
}

impl SchemeId {
    /// All schemes in reporting order.
    pub fn all() -> [SchemeId; 7] {
        [
            SchemeId::Proposed,
            SchemeId::ExhaustiveSearch,
            SchemeId::PartialExhaustiveSearch,
            SchemeId::GreedySearch,
            SchemeId::NearestAssociation,
            SchemeId::RandomAllocation,
            SchemeId::PartialRandomAllocation,
        ]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::Proposed => "proposed",
            SchemeId::ExhaustiveSearch => "es",
            SchemeId::PartialExhaustiveSearch => "pes",
            SchemeId::GreedySearch => "gs",
            SchemeId::NearestAssociation => "na",
            SchemeId::RandomAllocation => "ra",
            SchemeId::PartialRandomAllocation => "pra",
        }
    }

    /// Fixed per-scheme offset into the per-trial random stream space,
    /// stable regardless of which schemes a run enables.
    pub fn stream_offset(self) -> u64 {
        match self {
            SchemeId::Proposed => 0,
            SchemeId::ExhaustiveSearch => 1,
            SchemeId::PartialExhaustiveSearch => 2,
            SchemeId::GreedySearch => 3,
            SchemeId::NearestAssociation => 4,
            SchemeId::RandomAllocation => 5,
            SchemeId::PartialRandomAllocation => 6,
        }
    }
}

impl std::fmt::Display for SchemeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SchemeId {
    type Err = ParseSchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeId::all()
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| ParseSchemeError(s.to_string()))
    }
}

/// Result of one scheme run on one scenario.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub scheme: SchemeId,
    pub allocation: Allocation,
    /// Full-allocation (or stage-candidate) objective evaluations.
    pub candidate_evaluations: u64,
    /// Proposal events for the matching and greedy schemes.
    pub proposals: u64,
    pub phase1_rounds: u64,
    pub phase2_rounds: u64,
    /// Round-by-round matching traces, present for the proposed scheme.
    pub phase1_trace: Option<Vec<RoundRecord>>,
    pub phase2_trace: Option<Vec<RoundRecord>>,
}

impl SchemeRun {
    fn bare(scheme: SchemeId, allocation: Allocation) -> SchemeRun {
        SchemeRun {
            scheme,
            allocation,
            candidate_evaluations: 0,
            proposals: 0,
            phase1_rounds: 0,
            phase2_rounds: 0,
            phase1_trace: None,
            phase2_trace: None,
        }
    }
}

/// Number of ordered `k`-arrangements of `n` items.
pub fn arrangement_count(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    ((n - k + 1)..=n).map(|v| v as u128).product()
}

/// `n!` as a wide integer.
pub fn factorial(n: usize) -> u128 {
    arrangement_count(n, n)
}

fn check_square(scenario: &Scenario) -> Result<(usize, usize), BaselineError> {
    let k = scenario.num_transmitters();
    let l = scenario.num_receivers();
    if k != l {
        return Err(BaselineError::UnequalPairCounts { transmitters: k, receivers: l });
    }
    let n = scenario.num_panels();
    if n < k {
        return Err(BaselineError::NotEnoughPanels { transmitters: k, panels: n });
    }
    Ok((k, n))
}

/// Searches every joint allocation and returns the one with the highest
/// sum rate under ideally configured panels. Ties keep the first
/// candidate in enumeration order (panel arrangements lexicographic,
/// receiver permutations lexicographic within each arrangement).
///
/// Fails upfront if the candidate count exceeds `budget`.
pub fn exhaustive_search(scenario: &Scenario, budget: u64) -> Result<SchemeRun, BaselineError> {
    let (k, n) = check_square(scenario)?;
    let required = arrangement_count(n, k) * factorial(k);
    if required > budget as u128 {
        return Err(BaselineError::BudgetExceeded { required, budget });
    }

    let mut evaluator = SumRateEvaluator::new(scenario);
    let mut best: Option<(f64, Allocation)> = None;
    for panels in (0..n).permutations(k) {
        for receivers in (0..k).permutations(k) {
            let triples = (0..k).map(|t| (t, panels[t], receivers[t])).collect();
            let allocation = Allocation::new(triples)?;
            let rate = evaluator.sum_rate(&allocation)?;
            if best.as_ref().map_or(true, |(b, _)| rate > *b) {
                best = Some((rate, allocation));
            }
        }
    }
    let (_, allocation) = best.expect("at least one candidate");
    let mut run = SchemeRun::bare(SchemeId::ExhaustiveSearch, allocation);
    run.candidate_evaluations = required as u64;
    Ok(run)
}

/// Two-stage exhaustive search: first the transmitter-panel arrangement
/// maximizing the summed first-hop pseudo rates, then the receiver
/// permutation maximizing the summed cascaded pseudo rates given that
/// arrangement.
pub fn partial_exhaustive_search(
    scenario: &Scenario,
    budget: u64,
) -> Result<SchemeRun, BaselineError> {
    let (k, n) = check_square(scenario)?;
    let required = arrangement_count(n, k) + factorial(k);
    if required > budget as u128 {
        return Err(BaselineError::BudgetExceeded { required, budget });
    }

    let first_hop = scenario.pseudo_utilities_tx_irs()?;
    let mut best_panels: Option<(f64, Vec<usize>)> = None;
    for panels in (0..n).permutations(k) {
        let score: f64 = (0..k).map(|t| first_hop[t][panels[t]]).sum();
        if best_panels.as_ref().map_or(true, |(b, _)| score > *b) {
            best_panels = Some((score, panels));
        }
    }
    let (_, panels) = best_panels.expect("at least one arrangement");
    let pairs: Vec<(usize, usize)> = (0..k).map(|t| (t, panels[t])).collect();

    let cascaded = scenario.pseudo_utilities_cascaded(&pairs)?;
    let mut best_receivers: Option<(f64, Vec<usize>)> = None;
    for receivers in (0..k).permutations(k) {
        let score: f64 = (0..k).map(|slot| cascaded[receivers[slot]][slot]).sum();
        if best_receivers.as_ref().map_or(true, |(b, _)| score > *b) {
            best_receivers = Some((score, receivers));
        }
    }
    let (_, receivers) = best_receivers.expect("at least one permutation");

    let triples = (0..k).map(|slot| (pairs[slot].0, pairs[slot].1, receivers[slot])).collect();
    let mut run =
        SchemeRun::bare(SchemeId::PartialExhaustiveSearch, Allocation::new(triples)?);
    run.candidate_evaluations = required as u64;
    Ok(run)
}

/// Greedy one-shot matching: each round, every unmatched row claims its
/// best remaining column; contested columns go to a uniformly random
/// claimant and are then settled for good. Returns the row-to-column
/// assignment with claim and round counts.
fn greedy_match<R: Rng>(utilities: &[Vec<f64>], rng: &mut R) -> (Vec<usize>, u64, u64) {
    let rows = utilities.len();
    let cols = utilities[0].len();
    let mut taken = vec![false; cols];
    let mut assignment = vec![usize::MAX; rows];
    let mut proposals = 0u64;
    let mut rounds = 0u64;
    while assignment.iter().any(|&a| a == usize::MAX) {
        rounds += 1;
        let mut claims: Vec<Vec<usize>> = vec![Vec::new(); cols];
        for row in 0..rows {
            if assignment[row] != usize::MAX {
                continue;
            }
            let choice = (0..cols)
                .filter(|&c| !taken[c])
                .max_by(|&a, &b| {
                    utilities[row][a]
                        .partial_cmp(&utilities[row][b])
                        .expect("finite utilities")
                        .then(b.cmp(&a))
                })
                .expect("a free column remains for every unmatched row");
            claims[choice].push(row);
            proposals += 1;
        }
        for (col, claimants) in claims.iter().enumerate() {
            if claimants.is_empty() {
                continue;
            }
            let winner = claimants[rng.random_range(0..claimants.len())];
            assignment[winner] = col;
            taken[col] = true;
        }
    }
    (assignment, proposals, rounds)
}

/// Greedy association on the same pseudo rates as the proposed scheme,
/// with random tie-breaking among simultaneous claimants.
pub fn greedy_search<R: Rng>(
    scenario: &Scenario,
    rng: &mut R,
) -> Result<SchemeRun, BaselineError> {
    let (k, _) = check_square(scenario)?;

    let first_hop = scenario.pseudo_utilities_tx_irs()?;
    let (tx_to_panel, proposals1, rounds1) = greedy_match(&first_hop, rng);
    let pairs: Vec<(usize, usize)> = (0..k).map(|t| (t, tx_to_panel[t])).collect();

    let cascaded = scenario.pseudo_utilities_cascaded(&pairs)?;
    let (rx_to_slot, proposals2, rounds2) = greedy_match(&cascaded, rng);

    let triples = rx_to_slot
        .iter()
        .enumerate()
        .map(|(l, &slot)| (pairs[slot].0, pairs[slot].1, l))
        .collect();
    let mut run = SchemeRun::bare(SchemeId::GreedySearch, Allocation::new(triples)?);
    run.proposals = proposals1 + proposals2;
    run.phase1_rounds = rounds1;
    run.phase2_rounds = rounds2;
    Ok(run)
}

/// Assignment by ascending distance: repeatedly match the globally
/// closest unmatched row-column pair. Ties break toward the lower row,
/// then column, index.
fn nearest_match(distances: &[Vec<f64>]) -> Vec<usize> {
    let rows = distances.len();
    let cols = distances[0].len();
    let mut row_done = vec![false; rows];
    let mut col_done = vec![false; cols];
    let mut assignment = vec![usize::MAX; rows];
    for _ in 0..rows {
        let mut best: Option<(f64, usize, usize)> = None;
        for (r, row) in distances.iter().enumerate() {
            if row_done[r] {
                continue;
            }
            for (c, &d) in row.iter().enumerate() {
                if col_done[c] {
                    continue;
                }
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, r, c));
                }
            }
        }
        let (_, r, c) = best.expect("enough columns for every row");
        assignment[r] = c;
        row_done[r] = true;
        col_done[c] = true;
    }
    assignment
}

/// Distance-only association: transmitters pair with the nearest panels,
/// then receivers pair with the nearest active panels, closest first.
pub fn nearest_association(scenario: &Scenario) -> Result<SchemeRun, BaselineError> {
    let (k, n) = check_square(scenario)?;
    let topology = &scenario.topology;

    let tx_dist: Vec<Vec<f64>> = (0..k)
        .map(|t| {
            (0..n)
                .map(|p| distance(topology.transmitters[t], topology.panels[p].center))
                .collect()
        })
        .collect();
    let tx_to_panel = nearest_match(&tx_dist);
    let pairs: Vec<(usize, usize)> = (0..k).map(|t| (t, tx_to_panel[t])).collect();

    let rx_dist: Vec<Vec<f64>> = (0..k)
        .map(|l| {
            pairs
                .iter()
                .map(|&(_, p)| distance(topology.receivers[l], topology.panels[p].center))
                .collect()
        })
        .collect();
    let rx_to_slot = nearest_match(&rx_dist);

    let triples = rx_to_slot
        .iter()
        .enumerate()
        .map(|(l, &slot)| (pairs[slot].0, pairs[slot].1, l))
        .collect();
    Ok(SchemeRun::bare(SchemeId::NearestAssociation, Allocation::new(triples)?))
}

/// Uniformly random ordered `k`-arrangement of `0..n` via a partial
/// shuffle.
fn random_arrangement<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let (arranged, _) = pool.partial_shuffle(rng, k);
    arranged.to_vec()
}

/// Uniformly random joint allocation: a random panel arrangement and a
/// random receiver permutation drawn together.
pub fn random_allocation<R: Rng>(
    scenario: &Scenario,
    rng: &mut R,
) -> Result<SchemeRun, BaselineError> {
    let (k, n) = check_square(scenario)?;
    let panels = random_arrangement(n, k, rng);
    let receivers = random_arrangement(k, k, rng);
    let triples = (0..k).map(|t| (t, panels[t], receivers[t])).collect();
    Ok(SchemeRun::bare(SchemeId::RandomAllocation, Allocation::new(triples)?))
}

/// Random allocation drawn stage by stage: first the transmitter-panel
/// pairs, then the receiver assignment. The outcome distribution is the
/// same as [`random_allocation`]; it exists as the randomized counterpart
/// of the two-stage schemes.
pub fn partial_random_allocation<R: Rng>(
    scenario: &Scenario,
    rng: &mut R,
) -> Result<SchemeRun, BaselineError> {
    let (k, n) = check_square(scenario)?;
    let panels = random_arrangement(n, k, rng);
    let pairs: Vec<(usize, usize)> = (0..k).map(|t| (t, panels[t])).collect();
    let receivers = random_arrangement(k, k, rng);
    let triples = (0..k).map(|slot| (pairs[slot].0, pairs[slot].1, receivers[slot])).collect();
    Ok(SchemeRun::bare(SchemeId::PartialRandomAllocation, Allocation::new(triples)?))
}

/// Runs `scheme` on `scenario`. The random generator is only consumed by
/// the randomized schemes; `budget` only gates the enumerating ones.
pub fn run_scheme<R: Rng>(
    scenario: &Scenario,
    scheme: SchemeId,
    budget: u64,
    rng: &mut R,
) -> Result<SchemeRun, BaselineError> {
    match scheme {
        SchemeId::Proposed => {
            let result = two_phase_association(scenario, ProposalDirection::NodesPropose)?;
            Ok(SchemeRun {
                scheme,
                allocation: result.phase2.allocation.clone(),
                candidate_evaluations: 0,
                proposals: result.total_proposals() as u64,
                phase1_rounds: result.phase1.outcome.rounds.len() as u64,
                phase2_rounds: result.phase2.outcome.rounds.len() as u64,
                phase1_trace: Some(result.phase1.outcome.rounds),
                phase2_trace: Some(result.phase2.outcome.rounds),
            })
        }
        SchemeId::ExhaustiveSearch => exhaustive_search(scenario, budget),
        SchemeId::PartialExhaustiveSearch => partial_exhaustive_search(scenario, budget),
        SchemeId::GreedySearch => greedy_search(scenario, rng),
        SchemeId::NearestAssociation => nearest_association(scenario),
        SchemeId::RandomAllocation => random_allocation(scenario, rng),
        SchemeId::PartialRandomAllocation => partial_random_allocation(scenario, rng),
    }
}
