//! Confining cascades by intentional isolation and resource re-adjustment.
//!
//! At every round the controller sorts the deficient demands by shortfall,
//! isolates the worst ones (at most `gamma` per round) while the total
//! shortfall exceeds the spare capacity of the operational supplies, and
//! when what is left can be covered within the re-adjustment budget
//! `upsilon` it re-routes spare resources to the deficient demands
//! ([`readjust`]). Otherwise the cascade runs for one more round.
//!
//! A candidate action is only committed when a plain cascade from the
//! resulting state keeps at least as many nodes alive as a plain cascade
//! from the current one, so mitigation can never end worse than doing
//! nothing.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use crate::cascade::{self, CascadeState, CascadeTrace, FailureCause, FailureEvent, FluctuationSpec, NodeKind};
use crate::cost::tolerance;
use crate::error::{Error, Result};
use crate::network::{AllocationMatrix, Network, Regime, TOL};

/// Per-round operator capability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MitigationBudget {
    /// Max intentional demand failures.
    pub gamma: usize,
    /// Max resource mass moved.
    pub upsilon: f64,
}

impl MitigationBudget {
    pub fn new(gamma: usize, upsilon: f64) -> Result<Self> {
        if !(upsilon.is_finite() && upsilon >= 0.0) {
            return Err(Error::InvalidValue(format!("upsilon must be >= 0, got {upsilon}")));
        }
        Ok(Self { gamma, upsilon })
    }

    /// `gamma = share * D` (rounded down) and `upsilon = share * sum(L)`.
    pub fn from_share(share: f64, n_demands: usize, total_load: f64) -> Result<Self> {
        if !(share.is_finite() && share >= 0.0) {
            return Err(Error::InvalidValue(format!("budget share must be >= 0, got {share}")));
        }
        Self::new((share * n_demands as f64 + 1e-9).floor() as usize, share * total_load)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MitigationParams {
    /// Phase-1 step. `None` picks `min(0.01, min shortfall / 10)`, floored so
    /// that one call takes at most about `1e4` steps.
    pub nu: Option<f64>,
    /// Fraction of a row moved per phase-2 transfer.
    pub epsilon: f64,
    /// Tolerance rule used to rank supplies.
    pub regime: Regime,
    pub seed: u64,
}

impl Default for MitigationParams {
    fn default() -> Self {
        Self {
            nu: None,
            epsilon: 0.05,
            regime: Regime::Uniform,
            seed: 0,
        }
    }
}

/// Smallest `f` such that the shortfalls after the `f` largest sum to at most
/// `upsilon`. `deficiencies` must be sorted in descending order.
pub fn min_intentional_failures(deficiencies: &[f64], upsilon: f64) -> usize {
    let mut tail: f64 = deficiencies.iter().sum();
    for (f, d) in deficiencies.iter().enumerate() {
        if tail <= upsilon + TOL {
            return f;
        }
        tail -= d;
    }
    deficiencies.len()
}

/// `total_capacity >= sum of shortfalls after the gamma largest`.
/// `deficiencies` must be sorted in descending order.
pub fn absorb_feasible_values(total_capacity: f64, deficiencies: &[f64], gamma: usize) -> bool {
    let rest: f64 = deficiencies.iter().skip(gamma).sum();
    total_capacity + TOL >= rest
}

/// Spare capacity of the operational supplies.
pub fn total_free_capacity(state: &CascadeState) -> f64 {
    state.operational_supplies().map(|k| state.free_capacity(k)).sum()
}

/// Deficient demands sorted by shortfall, largest first (ties by id).
pub fn sorted_deficiencies(state: &CascadeState) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = state.deficiencies().into_iter().collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

pub fn absorb_feasible(state: &CascadeState, gamma: usize) -> bool {
    let deltas: Vec<f64> = sorted_deficiencies(state).into_iter().map(|x| x.1).collect();
    absorb_feasible_values(total_free_capacity(state), &deltas, gamma)
}

#[derive(Debug, Clone, PartialEq, ThisError)]
pub enum ReadjustError {
    #[error("re-adjustment budget exhausted with shortfall {:.6} left", .residual.values().sum::<f64>())]
    BudgetExhausted { residual: BTreeMap<usize, f64> },
    #[error("no operational supply has spare capacity; shortfall {:.6} left", .residual.values().sum::<f64>())]
    NoCapacity { residual: BTreeMap<usize, f64> },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ReadjustReport {
    /// Mass moved to cover shortfalls.
    pub absorbed: f64,
    /// Budget charged by the balancing transfers.
    pub balancing_charge: f64,
    pub phase1_steps: usize,
    pub phase2_transfers: usize,
}

impl ReadjustReport {
    pub fn spent(&self) -> f64 {
        self.absorbed + self.balancing_charge
    }
}

fn pick<R: Rng>(rng: &mut R, ties: &[usize]) -> usize {
    *ties.choose(rng).expect("non-empty tie set")
}

fn argext<R: Rng>(rng: &mut R, cands: &[usize], key: impl Fn(usize) -> f64, want_max: bool, buf: &mut Vec<usize>) -> Option<usize> {
    let best = cands.iter().map(|&k| key(k)).fold(
        if want_max { f64::NEG_INFINITY } else { f64::INFINITY },
        |a, b| if want_max { a.max(b) } else { a.min(b) },
    );
    buf.clear();
    buf.extend(cands.iter().copied().filter(|&k| key(k) == best));
    (!buf.is_empty()).then(|| pick(rng, buf))
}

/// Covers every shortfall from the most tolerant supplies in `nu` steps,
/// then spends the rest of `upsilon` moving `epsilon`-fractions of the least
/// tolerant supply's row to the most tolerant one.
pub fn readjust<R: Rng>(
    state: &mut CascadeState,
    upsilon: f64,
    params: &MitigationParams,
    rng: &mut R,
) -> std::result::Result<ReadjustReport, ReadjustError> {
    let mut report = ReadjustReport::default();
    let mut offered = state.allocation.row_sums();
    let ops: Vec<usize> = state.operational_supplies().collect();
    let resources = state.resources.clone();
    let tol = |k: usize, offered: &[f64]| tolerance(params.regime, resources[k], offered[k]);
    let mut buf = Vec::new();

    let mut pending: Vec<(usize, f64)> = state.deficiencies().into_iter().collect();
    if !pending.is_empty() {
        let total: f64 = pending.iter().map(|p| p.1).sum();
        let smallest = pending.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let nu = params.nu.unwrap_or_else(|| (0.01f64).min(smallest / 10.0).max(total * 1e-4));
        let mut with_room: Vec<usize> = Vec::with_capacity(ops.len());
        while !pending.is_empty() {
            let i = rng.gen_range(0..pending.len());
            let (g, delta) = pending[i];
            with_room.clear();
            with_room.extend(ops.iter().copied().filter(|&k| resources[k] - offered[k] > TOL));
            let Some(k) = argext(rng, &with_room, |k| tol(k, &offered), true, &mut buf) else {
                return Err(ReadjustError::NoCapacity {
                    residual: pending.into_iter().collect(),
                });
            };
            let step = nu.min(delta).min(resources[k] - offered[k]);
            if report.absorbed + step > upsilon + TOL {
                return Err(ReadjustError::BudgetExhausted {
                    residual: pending.into_iter().collect(),
                });
            }
            state.allocation.add(k, g, step);
            offered[k] += step;
            report.absorbed += step;
            report.phase1_steps += 1;
            let left = delta - step;
            if left <= TOL {
                pending.swap_remove(i);
            } else {
                pending[i].1 = left;
            }
        }
    }

    let demands: Vec<usize> = state.operational_demands().collect();
    let mut spent = report.absorbed;
    let mut donors: Vec<usize> = Vec::with_capacity(ops.len());
    while spent <= upsilon && report.phase2_transfers < 100_000 {
        let Some(hi) = argext(rng, &ops, |k| tol(k, &offered), true, &mut buf) else {
            break;
        };
        donors.clear();
        donors.extend(ops.iter().copied().filter(|&k| k != hi && offered[k] > TOL));
        let Some(lo) = argext(rng, &donors, |k| tol(k, &offered), false, &mut buf) else {
            break;
        };
        let (c_hi, c_lo) = (resources[hi] - offered[hi], resources[lo] - offered[lo]);
        let equalize = match params.regime {
            Regime::Uniform => (c_hi - c_lo) / 2.0,
            Regime::Proportional => {
                (offered[lo] * resources[hi] - offered[hi] * resources[lo]) / (resources[hi] + resources[lo])
            }
        };
        let mass = (params.epsilon * offered[lo])
            .min(c_hi)
            .min(equalize)
            .min((upsilon - spent) / 2.0);
        if mass <= TOL {
            break;
        }
        let frac = mass / offered[lo];
        for &g in &demands {
            let moved = frac * state.allocation.get(lo, g);
            if moved > 0.0 {
                state.allocation.add(lo, g, -moved);
                state.allocation.add(hi, g, moved);
            }
        }
        offered[lo] -= mass;
        offered[hi] += mass;
        spent += 2.0 * mass;
        report.balancing_charge += 2.0 * mass;
        report.phase2_transfers += 1;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    IntentionalFail,
    Transfer,
    Wait,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionRecord {
    pub round: usize,
    pub action: ActionKind,
    pub node_ids: Vec<usize>,
    pub magnitude: f64,
    pub remaining_budget: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MitigationOutcome {
    pub trace: CascadeTrace,
    pub actions: Vec<ActionRecord>,
    /// Surviving (supplies, demands) under the same stress without
    /// mitigation.
    pub unmitigated: (usize, usize),
}

impl MitigationOutcome {
    pub fn survivors(&self) -> usize {
        self.trace.survivors()
    }

    pub fn unmitigated_survivors(&self) -> usize {
        self.unmitigated.0 + self.unmitigated.1
    }

    pub fn allocation(&self) -> &AllocationMatrix {
        &self.trace.final_state.allocation
    }

    pub fn intentional_failures(&self) -> usize {
        self.actions
            .iter()
            .filter(|a| a.action == ActionKind::IntentionalFail)
            .map(|a| a.node_ids.len())
            .sum()
    }
}

struct Plan {
    state: CascadeState,
    isolated: Vec<(usize, f64)>,
    readjusted: Option<ReadjustReport>,
    value: usize,
}

fn isolate(state: &mut CascadeState, victims: &[(usize, f64)]) {
    for &(g, _) in victims {
        state.fail_demand(g);
    }
}

/// Runs the stressed cascade with the controller in the loop.
pub fn mitigate(
    network: &Network,
    spec: &FluctuationSpec,
    regime: Regime,
    budget: &MitigationBudget,
    params: &MitigationParams,
) -> Result<MitigationOutcome> {
    let (state, initial) = cascade::inject(network, spec)?;
    Ok(mitigate_from(state, initial, regime, budget, params))
}

pub fn mitigate_from(
    mut state: CascadeState,
    initial: Vec<FailureEvent>,
    regime: Regime,
    budget: &MitigationBudget,
    params: &MitigationParams,
) -> MitigationOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut rounds = vec![state.record(initial)];
    let mut actions = Vec::new();
    let plain = cascade::settle(state.clone(), regime);
    let unmitigated = (plain.surviving_supplies(), plain.surviving_demands());
    let mut baseline = plain.survivors();
    let mut pending_events: Vec<FailureEvent> = Vec::new();

    while !state.is_fixpoint() {
        let ranked = sorted_deficiencies(&state);
        let mut chosen: Option<Plan> = None;
        for count in isolation_counts(&state, &ranked, budget) {
            let mut cand = state.clone();
            let isolated = ranked[..count].to_vec();
            isolate(&mut cand, &isolated);
            let rest: f64 = ranked[count..].iter().map(|x| x.1).sum();
            let mut readjusted = None;
            if rest <= total_free_capacity(&cand) + TOL && rest <= budget.upsilon + TOL {
                let mut trial = cand.clone();
                let mut trial_rng = rng.clone();
                if let Ok(rep) = readjust(&mut trial, budget.upsilon, params, &mut trial_rng) {
                    cand = trial;
                    rng = trial_rng;
                    readjusted = Some(rep);
                }
            }
            if count == 0 && readjusted.is_none() {
                continue;
            }
            let value = cascade::survivors_after(cand.clone(), regime);
            if value >= baseline && chosen.as_ref().is_none_or(|c| value > c.value) {
                chosen = Some(Plan {
                    state: cand,
                    isolated,
                    readjusted,
                    value,
                });
            }
        }

        let round = state.time;
        if let Some(plan) = chosen {
            if !plan.isolated.is_empty() {
                actions.push(ActionRecord {
                    round,
                    action: ActionKind::IntentionalFail,
                    node_ids: plan.isolated.iter().map(|x| x.0).collect(),
                    magnitude: plan.isolated.iter().map(|x| x.1).sum(),
                    remaining_budget: budget.upsilon,
                });
                pending_events.extend(plan.isolated.iter().map(|&(g, delta)| FailureEvent {
                    node_kind: NodeKind::Demand,
                    node_id: g,
                    cause: FailureCause::Intentional,
                    magnitude: delta,
                }));
            }
            if let Some(rep) = &plan.readjusted {
                actions.push(ActionRecord {
                    round,
                    action: ActionKind::Transfer,
                    node_ids: Vec::new(),
                    magnitude: rep.spent(),
                    remaining_budget: (budget.upsilon - rep.spent()).max(0.0),
                });
            }
            baseline = plan.value;
            state = plan.state;
            if plan.readjusted.is_some() && state.is_fixpoint() {
                break;
            }
        }
        if state.is_fixpoint() {
            break;
        }
        actions.push(ActionRecord {
            round,
            action: ActionKind::Wait,
            node_ids: Vec::new(),
            magnitude: state.deficiencies().values().sum(),
            remaining_budget: budget.upsilon,
        });
        match state.step(regime) {
            Some(mut rec) => {
                if !pending_events.is_empty() {
                    let mut events = std::mem::take(&mut pending_events);
                    events.append(&mut rec.events);
                    rec.events = events;
                }
                rounds.push(rec);
            }
            None => break,
        }
    }
    if !pending_events.is_empty() {
        state.time += 1;
        rounds.push(state.record(pending_events));
    }
    MitigationOutcome {
        trace: CascadeTrace {
            rounds,
            final_state: state,
        },
        actions,
        unmitigated,
    }
}

/// Candidate numbers of isolated demands: the loop rule (isolate while the
/// shortfall exceeds the spare capacity) and, when larger, the count that
/// brings the shortfall within the re-adjustment budget.
fn isolation_counts(state: &CascadeState, ranked: &[(usize, f64)], budget: &MitigationBudget) -> Vec<usize> {
    let mut probe = state.clone();
    let mut total: f64 = ranked.iter().map(|x| x.1).sum();
    let mut by_capacity = 0;
    while by_capacity < budget.gamma.min(ranked.len()) && total > total_free_capacity(&probe) + TOL {
        probe.fail_demand(ranked[by_capacity].0);
        total -= ranked[by_capacity].1;
        by_capacity += 1;
    }
    let deltas: Vec<f64> = ranked.iter().map(|x| x.1).collect();
    let by_budget = min_intentional_failures(&deltas, budget.upsilon).min(budget.gamma);
    let mut counts = vec![by_capacity];
    if by_budget > by_capacity {
        counts.push(by_budget);
    }
    counts
}

/// Fixed-topology re-adjustment: extra allocations restricted to existing
/// links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedTopologyProblem {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `S x D` link mask.
    pub mask: Vec<bool>,
    pub deficiencies: Vec<f64>,
    pub capacities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, ThisError)]
pub enum FixedTopologyError {
    #[error("neighbors can spare {available:.6} but the shortfall is {required:.6} (deficit {deficit:.6})")]
    NecessaryCondition { available: f64, required: f64, deficit: f64 },
    #[error("shortfalls cannot be routed over existing links; {unrouted:.6} left unserved")]
    Unroutable { unrouted: f64 },
    #[error(transparent)]
    Invalid(#[from] Error),
}

impl FixedTopologyProblem {
    pub fn new(mask: Vec<Vec<bool>>, deficiencies: Vec<f64>, capacities: Vec<f64>) -> Result<Self> {
        let rows = mask.len();
        let cols = deficiencies.len();
        if capacities.len() != rows || mask.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape {
                expected: (capacities.len(), cols),
                got: (rows, mask.first().map_or(0, Vec::len)),
            });
        }
        for (name, v) in [("deficiencies", &deficiencies), ("capacities", &capacities)] {
            if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::InvalidValue(format!("{name} must be nonnegative, found {x}")));
            }
        }
        Ok(Self {
            rows,
            cols,
            mask: mask.into_iter().flatten().collect(),
            deficiencies,
            capacities,
        })
    }

    /// Links of the operational part of a cascade state, its shortfalls and
    /// its spare capacities.
    pub fn from_state(state: &CascadeState) -> Self {
        let (s, d) = (state.n_supplies(), state.n_demands());
        let mut mask = vec![false; s * d];
        for k in state.operational_supplies() {
            for g in state.operational_demands() {
                mask[k * d + g] = state.allocation.get(k, g) > TOL;
            }
        }
        let mut deficiencies = vec![0.0; d];
        for (g, delta) in state.deficiencies() {
            deficiencies[g] = delta;
        }
        let capacities = (0..s)
            .map(|k| {
                if state.is_supply_operational(k) {
                    state.free_capacity(k).max(0.0)
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            rows: s,
            cols: d,
            mask,
            deficiencies,
            capacities,
        }
    }

    #[inline]
    pub fn linked(&self, k: usize, g: usize) -> bool {
        self.mask[k * self.cols + g]
    }

    /// Spare capacity of the supplies linked to some deficient demand.
    pub fn neighborhood_capacity(&self) -> f64 {
        (0..self.rows)
            .filter(|&k| (0..self.cols).any(|g| self.deficiencies[g] > 0.0 && self.linked(k, g)))
            .map(|k| self.capacities[k])
            .sum()
    }
}

/// Finds extra allocations on existing links whose column sums equal the
/// shortfalls and whose row sums stay within the spare capacities.
///
/// The problem is a bipartite flow from shortfalls to capacities, solved
/// exactly by shortest augmenting paths.
pub fn fixed_topology_readjust(problem: &FixedTopologyProblem) -> std::result::Result<AllocationMatrix, FixedTopologyError> {
    let (s, d) = (problem.rows, problem.cols);
    let required: f64 = problem.deficiencies.iter().sum();
    let available = problem.neighborhood_capacity();
    if available + 1e-12 < required {
        return Err(FixedTopologyError::NecessaryCondition {
            available,
            required,
            deficit: required - available,
        });
    }
    let mut flow = AllocationMatrix::zeros(s, d);
    let mut col_left = problem.deficiencies.clone();
    let mut row_left = problem.capacities.clone();
    let eps = 1e-12 * required.max(1.0);

    // Residual graph: demand g -> supply k along links (unbounded forward,
    // flow-bounded backward). BFS from demands with unmet shortfall to a
    // supply with spare capacity.
    loop {
        let mut prev_supply: Vec<Option<usize>> = vec![None; d];
        let mut prev_demand: Vec<Option<usize>> = vec![None; s];
        let mut seen_d = vec![false; d];
        let mut seen_s = vec![false; s];
        let mut queue = std::collections::VecDeque::new();
        for g in 0..d {
            if col_left[g] > eps {
                seen_d[g] = true;
                queue.push_back(g);
            }
        }
        if queue.is_empty() {
            break;
        }
        let mut sink = None;
        'bfs: while let Some(g) = queue.pop_front() {
            for k in 0..s {
                if seen_s[k] || !problem.linked(k, g) {
                    continue;
                }
                seen_s[k] = true;
                prev_demand[k] = Some(g);
                if row_left[k] > eps {
                    sink = Some(k);
                    break 'bfs;
                }
                for g2 in 0..d {
                    if !seen_d[g2] && flow.get(k, g2) > eps {
                        seen_d[g2] = true;
                        prev_supply[g2] = Some(k);
                        queue.push_back(g2);
                    }
                }
            }
        }
        let Some(end) = sink else {
            break;
        };
        // Walk back to find the bottleneck, then apply.
        let mut amount = row_left[end];
        let mut k = end;
        let start;
        loop {
            let g = prev_demand[k].expect("reached supply has a predecessor");
            match prev_supply[g] {
                Some(k_prev) => {
                    amount = amount.min(flow.get(k_prev, g));
                    k = k_prev;
                }
                None => {
                    start = g;
                    break;
                }
            }
        }
        amount = amount.min(col_left[start]);
        let mut k = end;
        loop {
            let g = prev_demand[k].expect("reached supply has a predecessor");
            flow.add(k, g, amount);
            match prev_supply[g] {
                Some(k_prev) => {
                    flow.add(k_prev, g, -amount);
                    k = k_prev;
                }
                None => break,
            }
        }
        col_left[start] -= amount;
        row_left[end] -= amount;
    }
    let unrouted: f64 = col_left.iter().map(|x| x.max(0.0)).sum();
    if unrouted > 1e-9 * required.max(1.0) {
        return Err(FixedTopologyError::Unroutable { unrouted });
    }
    Ok(flow)
}
