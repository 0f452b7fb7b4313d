//! Round-based cascading-failure engine.
//!
//! A cascade starts from a stable network hit by a [`FluctuationSpec`]. Each
//! round runs three phases in order:
//!
//! 1. demands that were left without any operational supplier fail;
//! 2. every remaining deficient demand drains its shortfall from its
//!    operational neighbors (evenly under [`Regime::Uniform`], in proportion
//!    to the current allocation under [`Regime::Proportional`]);
//! 3. every supply whose offered total exceeds its resource fails entirely
//!    and its row is cleared.
//!
//! Isolation is detected one round after the last supplier fails, so a demand
//! and the suppliers that failed because of it never share a round.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{AllocationMatrix, Network, Regime, TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FluctuationSpec {
    SupplyInternalFailure { ids: Vec<usize> },
    UniformResourceDrop { delta: f64, ids: Vec<usize> },
    UniformLoadRise { delta: f64, ids: Vec<usize> },
    ProportionalResourceDrop { xi: f64, ids: Vec<usize> },
    ProportionalLoadRise { xi: f64, ids: Vec<usize> },
}

impl FluctuationSpec {
    pub fn validate(&self, n_supplies: usize, n_demands: usize) -> Result<()> {
        let check_ids = |ids: &[usize], kind: &'static str, len: usize| {
            ids.iter()
                .find(|&&i| i >= len)
                .map_or(Ok(()), |&i| Err(Error::index(kind, i, len)))
        };
        match self {
            Self::SupplyInternalFailure { ids } => check_ids(ids, "supply", n_supplies),
            Self::UniformResourceDrop { delta, ids } => {
                nonnegative("delta", *delta)?;
                check_ids(ids, "supply", n_supplies)
            }
            Self::UniformLoadRise { delta, ids } => {
                nonnegative("delta", *delta)?;
                check_ids(ids, "demand", n_demands)
            }
            Self::ProportionalResourceDrop { xi, ids } => {
                if !(0.0..1.0).contains(xi) {
                    return Err(Error::InvalidValue(format!("resource drop factor must be in [0, 1), got {xi}")));
                }
                check_ids(ids, "supply", n_supplies)
            }
            Self::ProportionalLoadRise { xi, ids } => {
                if !(xi.is_finite() && *xi >= 1.0) {
                    return Err(Error::InvalidValue(format!("load rise factor must be >= 1, got {xi}")));
                }
                check_ids(ids, "demand", n_demands)
            }
        }
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidValue(format!("{name} must be finite and nonnegative, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Supply,
    Demand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    Internal,
    Overload,
    DeficiencyIsolation,
    /// Deliberate isolation by a mitigation controller.
    Intentional,
}

impl fmt::Display for FailureCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Internal => "internal",
            Self::Overload => "overload",
            Self::DeficiencyIsolation => "deficiency_isolation",
            Self::Intentional => "intentional",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureEvent {
    pub node_kind: NodeKind,
    pub node_id: usize,
    pub cause: FailureCause,
    /// Overload excess, unmet load, or the lost resource for internal
    /// failures.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeState {
    pub time: usize,
    /// Resources after fluctuation.
    pub resources: Vec<f64>,
    /// Loads after fluctuation.
    pub loads: Vec<f64>,
    pub allocation: AllocationMatrix,
    pub failed_supplies: BTreeSet<usize>,
    pub failed_demands: BTreeSet<usize>,
}

impl CascadeState {
    /// State at `t = 0` for an unperturbed network.
    pub fn from_network(network: &Network) -> Self {
        Self {
            time: 0,
            resources: network.resources().to_vec(),
            loads: network.loads().to_vec(),
            allocation: network.allocation().clone(),
            failed_supplies: BTreeSet::new(),
            failed_demands: BTreeSet::new(),
        }
    }

    pub fn n_supplies(&self) -> usize {
        self.resources.len()
    }

    pub fn n_demands(&self) -> usize {
        self.loads.len()
    }

    /// Applies a stress and returns the resulting failure events (internal
    /// failures only; overloads are resolved by [`CascadeState::step`]).
    pub fn apply(&mut self, spec: &FluctuationSpec) -> Result<Vec<FailureEvent>> {
        spec.validate(self.n_supplies(), self.n_demands())?;
        let mut events = Vec::new();
        match spec {
            FluctuationSpec::SupplyInternalFailure { ids } => {
                for &k in ids {
                    if self.failed_supplies.contains(&k) {
                        continue;
                    }
                    events.push(FailureEvent {
                        node_kind: NodeKind::Supply,
                        node_id: k,
                        cause: FailureCause::Internal,
                        magnitude: self.allocation.row_sum(k),
                    });
                    self.fail_supply(k);
                }
            }
            FluctuationSpec::UniformResourceDrop { delta, ids } => {
                for &k in ids {
                    self.resources[k] = (self.resources[k] - delta).max(0.0);
                }
            }
            FluctuationSpec::UniformLoadRise { delta, ids } => {
                for &g in ids {
                    self.loads[g] += delta;
                }
            }
            FluctuationSpec::ProportionalResourceDrop { xi, ids } => {
                for &k in ids {
                    self.resources[k] *= 1.0 - xi;
                }
            }
            FluctuationSpec::ProportionalLoadRise { xi, ids } => {
                for &g in ids {
                    self.loads[g] *= xi;
                }
            }
        }
        Ok(events)
    }

    pub fn fail_supply(&mut self, k: usize) {
        self.allocation.zero_row(k);
        self.failed_supplies.insert(k);
    }

    pub fn fail_demand(&mut self, g: usize) {
        self.allocation.zero_col(g);
        self.failed_demands.insert(g);
    }

    pub fn is_supply_operational(&self, k: usize) -> bool {
        !self.failed_supplies.contains(&k)
    }

    pub fn is_demand_operational(&self, g: usize) -> bool {
        !self.failed_demands.contains(&g)
    }

    pub fn operational_supplies(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_supplies()).filter(|k| self.is_supply_operational(*k))
    }

    pub fn operational_demands(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_demands()).filter(|g| self.is_demand_operational(*g))
    }

    pub fn offered(&self, k: usize) -> f64 {
        self.allocation.row_sum(k)
    }

    pub fn received(&self, g: usize) -> f64 {
        self.allocation.col_sum(g)
    }

    /// `R - r` under the current (fluctuated) resources.
    pub fn free_capacity(&self, k: usize) -> f64 {
        self.resources[k] - self.offered(k)
    }

    /// Operational suppliers currently sharing with demand `g`.
    pub fn alive_neighbors(&self, g: usize) -> Vec<usize> {
        self.operational_supplies()
            .filter(|&k| self.allocation.get(k, g) > TOL)
            .collect()
    }

    /// Shortfall `L - l` of every operational demand that is short by more
    /// than [`TOL`].
    pub fn deficiencies(&self) -> BTreeMap<usize, f64> {
        let received = self.allocation.col_sums();
        self.operational_demands()
            .filter_map(|g| {
                let delta = self.loads[g] - received[g];
                (delta > TOL).then_some((g, delta))
            })
            .collect()
    }

    pub fn overloaded(&self) -> Vec<usize> {
        let offered = self.allocation.row_sums();
        self.operational_supplies()
            .filter(|&k| offered[k] > self.resources[k] + TOL)
            .collect()
    }

    pub fn is_fixpoint(&self) -> bool {
        self.deficiencies().is_empty() && self.overloaded().is_empty()
    }

    pub fn surviving_supplies(&self) -> usize {
        self.n_supplies() - self.failed_supplies.len()
    }

    pub fn surviving_demands(&self) -> usize {
        self.n_demands() - self.failed_demands.len()
    }

    pub fn survivors(&self) -> usize {
        self.surviving_supplies() + self.surviving_demands()
    }

    /// Phase 1: deficient demands with no operational supplier fail.
    pub fn fail_isolated_demands(&mut self) -> Vec<FailureEvent> {
        let mut events = Vec::new();
        for (g, delta) in self.deficiencies() {
            if self.alive_neighbors(g).is_empty() {
                self.fail_demand(g);
                events.push(FailureEvent {
                    node_kind: NodeKind::Demand,
                    node_id: g,
                    cause: FailureCause::DeficiencyIsolation,
                    magnitude: delta,
                });
            }
        }
        events
    }

    /// Phase 2: every deficient demand pulls its shortfall from its
    /// operational neighbors. All drains read the pre-drain allocation.
    pub fn drain(&mut self, regime: Regime) {
        let plan: Vec<(usize, f64, Vec<usize>)> = self
            .deficiencies()
            .into_iter()
            .map(|(g, delta)| (g, delta, self.alive_neighbors(g)))
            .filter(|(_, _, n)| !n.is_empty())
            .collect();
        for (g, delta, neighbors) in plan {
            match regime {
                Regime::Uniform => {
                    let share = delta / neighbors.len() as f64;
                    for k in neighbors {
                        self.allocation.add(k, g, share);
                    }
                }
                Regime::Proportional => {
                    let base: f64 = neighbors.iter().map(|&k| self.allocation.get(k, g)).sum();
                    for k in neighbors {
                        let w = self.allocation.get(k, g) / base;
                        self.allocation.add(k, g, delta * w);
                    }
                }
            }
        }
    }

    /// Phase 3: overloaded supplies fail and release their allocations.
    pub fn fail_overloaded(&mut self) -> Vec<FailureEvent> {
        self.overloaded()
            .into_iter()
            .map(|k| {
                let excess = self.offered(k) - self.resources[k];
                self.fail_supply(k);
                FailureEvent {
                    node_kind: NodeKind::Supply,
                    node_id: k,
                    cause: FailureCause::Overload,
                    magnitude: excess,
                }
            })
            .collect()
    }

    /// One synchronous round. Returns `None` (and leaves the state untouched)
    /// at a fixpoint.
    pub fn step(&mut self, regime: Regime) -> Option<RoundRecord> {
        if self.is_fixpoint() {
            return None;
        }
        self.time += 1;
        let mut events = self.fail_isolated_demands();
        self.drain(regime);
        events.extend(self.fail_overloaded());
        Some(self.record(events))
    }

    pub fn record(&self, events: Vec<FailureEvent>) -> RoundRecord {
        RoundRecord {
            round: self.time,
            events,
            deficiencies: self.deficiencies(),
            free_capacities: self
                .operational_supplies()
                .map(|k| (k, self.free_capacity(k)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub events: Vec<FailureEvent>,
    /// Deficiencies left at the end of the round.
    pub deficiencies: BTreeMap<usize, f64>,
    /// Free capacity of each operational supply at the end of the round.
    pub free_capacities: BTreeMap<usize, f64>,
}

impl RoundRecord {
    pub fn failed(&self, kind: NodeKind) -> BTreeSet<usize> {
        self.events
            .iter()
            .filter(|e| e.node_kind == kind)
            .map(|e| e.node_id)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeTrace {
    /// Round 0 holds the injected stress, later rounds the cascade.
    pub rounds: Vec<RoundRecord>,
    pub final_state: CascadeState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CascadeSummary {
    pub rounds: usize,
    pub surviving_supplies: usize,
    pub surviving_demands: usize,
    pub failed_supplies: usize,
    pub failed_demands: usize,
}

#[derive(Serialize)]
struct EventLine<'a> {
    round: usize,
    event: &'a str,
    node_kind: NodeKind,
    node_id: usize,
    magnitude: f64,
}

impl CascadeTrace {
    pub fn summary(&self) -> CascadeSummary {
        let s = &self.final_state;
        CascadeSummary {
            rounds: self.rounds.len(),
            surviving_supplies: s.surviving_supplies(),
            surviving_demands: s.surviving_demands(),
            failed_supplies: s.failed_supplies.len(),
            failed_demands: s.failed_demands.len(),
        }
    }

    pub fn survivors(&self) -> usize {
        self.final_state.survivors()
    }

    /// Newline-delimited JSON: one line per failure and per end-of-round
    /// deficiency, then a summary line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.rounds {
            for e in &r.events {
                let cause = e.cause.to_string();
                let line = EventLine {
                    round: r.round,
                    event: &cause,
                    node_kind: e.node_kind,
                    node_id: e.node_id,
                    magnitude: e.magnitude,
                };
                serde_json::to_writer(&mut out, &line)?;
                out.write_all(b"\n")?;
            }
            for (&g, &delta) in &r.deficiencies {
                let line = EventLine {
                    round: r.round,
                    event: "deficiency",
                    node_kind: NodeKind::Demand,
                    node_id: g,
                    magnitude: delta,
                };
                serde_json::to_writer(&mut out, &line)?;
                out.write_all(b"\n")?;
            }
        }
        serde_json::to_writer(&mut out, &serde_json::json!({ "summary": self.summary() }))?;
        out.write_all(b"\n")
    }
}

/// Applies `spec` to `network` and returns the `t = 0` state with its events.
pub fn inject(network: &Network, spec: &FluctuationSpec) -> Result<(CascadeState, Vec<FailureEvent>)> {
    let mut state = CascadeState::from_network(network);
    let events = state.apply(spec)?;
    Ok((state, events))
}

/// Runs rounds from an arbitrary state until nothing changes.
pub fn run_from(mut state: CascadeState, initial: Vec<FailureEvent>, regime: Regime) -> CascadeTrace {
    let mut rounds = vec![state.record(initial)];
    let bound = state.n_supplies() + state.n_demands() + 1;
    while let Some(r) = state.step(regime) {
        rounds.push(r);
        debug_assert!(rounds.len() <= bound + 1, "cascade exceeded its round bound");
    }
    CascadeTrace {
        rounds,
        final_state: state,
    }
}

pub fn run_to_fixpoint(network: &Network, spec: &FluctuationSpec, regime: Regime) -> Result<CascadeTrace> {
    let (state, events) = inject(network, spec)?;
    Ok(run_from(state, events, regime))
}

/// Plain cascade from `state` to its fixpoint, without recording.
pub fn settle(mut state: CascadeState, regime: Regime) -> CascadeState {
    while state.step(regime).is_some() {}
    state
}

/// Survivor count of a plain cascade from `state`.
pub fn survivors_after(state: CascadeState, regime: Regime) -> usize {
    settle(state, regime).survivors()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robust;

    /// s1..s4 with R = {9, 10, 12, 16}, d1, d2 with L = {10, 30}.
    /// Free capacities 2, 2, 1, 2; s4 feeds d2 with 14.
    pub(crate) fn fig2a() -> Network {
        Network::new(
            vec![9.0, 10.0, 12.0, 16.0],
            vec![10.0, 30.0],
            AllocationMatrix::from_rows(vec![vec![7.0, 0.0], vec![2.0, 6.0], vec![1.0, 10.0], vec![0.0, 14.0]]).unwrap(),
        )
        .unwrap()
    }

    fn set(ids: &[usize]) -> BTreeSet<usize> {
        ids.iter().copied().collect()
    }

    #[test]
    fn fig2a_inject_creates_deficiency() {
        let net = fig2a();
        assert!(net.check_stability().is_stable());
        let (state, events) = inject(&net, &FluctuationSpec::SupplyInternalFailure { ids: vec![3] }).unwrap();
        assert_eq!(events.len(), 1);
        let def = state.deficiencies();
        assert_eq!(def.len(), 1);
        assert!((def[&1] - 14.0).abs() < 1e-12);
    }

    #[test]
    fn fig2a_replay() {
        let net = fig2a();
        let trace = run_to_fixpoint(&net, &FluctuationSpec::SupplyInternalFailure { ids: vec![3] }, Regime::Uniform).unwrap();
        assert_eq!(trace.rounds.len(), 4);
        assert_eq!(trace.rounds[0].failed(NodeKind::Supply), set(&[3]));
        assert_eq!(trace.rounds[1].failed(NodeKind::Supply), set(&[1, 2]));
        assert!(trace.rounds[1].failed(NodeKind::Demand).is_empty());
        assert_eq!(trace.rounds[2].failed(NodeKind::Supply), set(&[0]));
        assert_eq!(trace.rounds[2].failed(NodeKind::Demand), set(&[1]));
        assert_eq!(trace.rounds[3].failed(NodeKind::Demand), set(&[0]));
        assert!(trace.rounds[3].failed(NodeKind::Supply).is_empty());
        assert_eq!(trace.survivors(), 0);
        // d1 drains exactly 3 from s1, which only had 2 to spare.
        let s1 = trace.rounds[2].events.iter().find(|e| e.node_id == 0 && e.node_kind == NodeKind::Supply).unwrap();
        assert!((s1.magnitude - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_stress_is_fixpoint() {
        let net = fig2a();
        let spec = FluctuationSpec::UniformResourceDrop { delta: 0.0, ids: vec![0, 1, 2, 3] };
        let (state, _) = inject(&net, &spec).unwrap();
        assert!(state.is_fixpoint());
        assert_eq!(state.allocation, *net.allocation());
        let spec = FluctuationSpec::ProportionalLoadRise { xi: 1.0, ids: vec![0, 1] };
        let (state, _) = inject(&net, &spec).unwrap();
        assert!(state.deficiencies().is_empty());
        let trace = run_to_fixpoint(&net, &spec, Regime::Proportional).unwrap();
        assert_eq!(trace.rounds.len(), 1);
    }

    #[test]
    fn absorbed_deficiency() {
        // d1 loses 2 of its 6; s2 has 4 spare.
        let net = Network::new(
            vec![10.0, 8.0],
            vec![6.0],
            AllocationMatrix::from_rows(vec![vec![2.0], vec![4.0]]).unwrap(),
        )
        .unwrap();
        let trace = run_to_fixpoint(&net, &FluctuationSpec::SupplyInternalFailure { ids: vec![0] }, Regime::Uniform).unwrap();
        assert_eq!(trace.rounds.len(), 2);
        assert!(trace.rounds[1].events.is_empty());
        assert!(trace.rounds[1].deficiencies.is_empty());
        assert!((trace.final_state.offered(1) - 6.0).abs() < 1e-12);
        assert_eq!(trace.survivors(), 2);
    }

    #[test]
    fn proportional_drain_follows_allocation() {
        let net = Network::new(
            vec![10.0, 10.0, 10.0],
            vec![8.0],
            AllocationMatrix::from_rows(vec![vec![2.0], vec![2.0], vec![4.0]]).unwrap(),
        )
        .unwrap();
        let (mut state, _) = inject(&net, &FluctuationSpec::SupplyInternalFailure { ids: vec![0] }).unwrap();
        state.drain(Regime::Proportional);
        assert!((state.allocation.get(1, 0) - 2.0 - 2.0 / 3.0).abs() < 1e-12);
        assert!((state.allocation.get(2, 0) - 4.0 - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_ids_and_factors() {
        let net = fig2a();
        assert!(matches!(
            inject(&net, &FluctuationSpec::SupplyInternalFailure { ids: vec![4] }),
            Err(Error::Index { .. })
        ));
        assert!(inject(&net, &FluctuationSpec::ProportionalResourceDrop { xi: 1.0, ids: vec![0] }).is_err());
        assert!(inject(&net, &FluctuationSpec::ProportionalLoadRise { xi: 0.9, ids: vec![0] }).is_err());
        assert!(inject(&net, &FluctuationSpec::UniformLoadRise { delta: -1.0, ids: vec![0] }).is_err());
    }

    #[test]
    fn jsonl_has_summary() {
        let trace = run_to_fixpoint(&fig2a(), &FluctuationSpec::SupplyInternalFailure { ids: vec![3] }, Regime::Uniform).unwrap();
        let mut buf = Vec::new();
        trace.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.iter().filter(|l| l["event"] == "overload").count(), 3);
        assert_eq!(lines.last().unwrap()["summary"]["surviving_supplies"], 0);
    }

    #[test]
    fn mtrf_boundary_on_designed_network() {
        let (design, net) = robust::uniform_network(&[10.0, 8.0, 3.0], &[6.0, 4.0], 0.01).unwrap();
        let engaged: Vec<usize> = net.engaged_suppliers().into_iter().collect();
        let below = FluctuationSpec::UniformResourceDrop { delta: 0.99 * design.mtrf, ids: engaged.clone() };
        assert_eq!(run_to_fixpoint(&net, &below, Regime::Uniform).unwrap().survivors(), 5);
        let above = FluctuationSpec::UniformResourceDrop { delta: 1.01 * design.mtrf, ids: engaged };
        let trace = run_to_fixpoint(&net, &above, Regime::Uniform).unwrap();
        assert!(!trace.rounds[1].failed(NodeKind::Supply).is_empty());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            (2usize..7, 1usize..6).prop_flat_map(|(s, d)| {
                (proptest::collection::vec(10.0f64..280.0, s), proptest::collection::vec(10.0f64..200.0, d))
                    .prop_filter("needs spare resource", |(r, l)| r.iter().sum::<f64>() > 1.05 * l.iter().sum::<f64>())
            })
        }

        fn failures(trace: &CascadeTrace) -> usize {
            trace.final_state.failed_supplies.len() + trace.final_state.failed_demands.len()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn uniform_metrics_match_cascade((r, l) in instance()) {
                let (_, net) = robust::uniform_network(&r, &l, 0.01).unwrap();
                let engaged: Vec<usize> = net.engaged_suppliers().into_iter().collect();
                let mtrf = robust::mtrf_uniform(&net).unwrap();
                let drop = |f: f64| FluctuationSpec::UniformResourceDrop { delta: f * mtrf, ids: engaged.clone() };
                prop_assert_eq!(failures(&run_to_fixpoint(&net, &drop(0.99), Regime::Uniform).unwrap()), 0);
                prop_assert!(failures(&run_to_fixpoint(&net, &drop(1.01), Regime::Uniform).unwrap()) >= 1);

                let mtlf = robust::mtlf_uniform(&net).unwrap();
                let g = (0..l.len())
                    .min_by(|&a, &b| {
                        let m = |g: usize| {
                            let n = net.neighbors(g).unwrap();
                            n.iter().map(|&k| net.free_capacity(k).unwrap()).fold(f64::INFINITY, f64::min) * n.len() as f64
                        };
                        m(a).total_cmp(&m(b))
                    })
                    .unwrap();
                let rise = |f: f64| FluctuationSpec::UniformLoadRise { delta: f * mtlf, ids: vec![g] };
                prop_assert_eq!(failures(&run_to_fixpoint(&net, &rise(0.99), Regime::Uniform).unwrap()), 0);
                prop_assert!(failures(&run_to_fixpoint(&net, &rise(1.01), Regime::Uniform).unwrap()) >= 1);
            }

            #[test]
            fn proportional_metrics_match_cascade((r, l) in instance()) {
                let (_, net) = robust::proportional_network(&r, &l).unwrap();
                let all_s: Vec<usize> = (0..r.len()).collect();
                let all_d: Vec<usize> = (0..l.len()).collect();
                let mtrf = robust::mtrf_proportional(&net).unwrap();
                let drop = |f: f64| FluctuationSpec::ProportionalResourceDrop { xi: f * mtrf, ids: all_s.clone() };
                prop_assert_eq!(failures(&run_to_fixpoint(&net, &drop(0.99), Regime::Proportional).unwrap()), 0);
                prop_assert!(failures(&run_to_fixpoint(&net, &drop(1.01), Regime::Proportional).unwrap()) >= 1);
                let mtlf = robust::mtlf_proportional(&net).unwrap();
                let rise = |f: f64| FluctuationSpec::ProportionalLoadRise { xi: f * mtlf, ids: all_d.clone() };
                prop_assert_eq!(failures(&run_to_fixpoint(&net, &rise(0.99), Regime::Proportional).unwrap()), 0);
                prop_assert!(failures(&run_to_fixpoint(&net, &rise(1.01), Regime::Proportional).unwrap()) >= 1);
            }

            #[test]
            fn trace_is_monotone_and_bounded((r, l) in instance(), k in 0usize..6, uniform in any::<bool>()) {
                let (_, net) = robust::uniform_network(&r, &l, 0.01).unwrap();
                let k = k % r.len();
                let regime = if uniform { Regime::Uniform } else { Regime::Proportional };
                let trace = run_to_fixpoint(&net, &FluctuationSpec::SupplyInternalFailure { ids: vec![k] }, regime).unwrap();
                prop_assert!(trace.rounds.len() <= r.len() + l.len() + 1);
                prop_assert!(trace.rounds.windows(2).all(|w| w[0].round < w[1].round));
                let mut seen = BTreeSet::new();
                for round in &trace.rounds {
                    for e in &round.events {
                        prop_assert!(seen.insert((e.node_kind, e.node_id)));
                    }
                }
                let again = run_to_fixpoint(&net, &FluctuationSpec::SupplyInternalFailure { ids: vec![k] }, regime).unwrap();
                prop_assert_eq!(again, trace);
            }

            #[test]
            fn successful_drain_conserves((r, l) in instance()) {
                let (_, net) = robust::uniform_network(&r, &l, 0.01).unwrap();
                let (mut state, _) = inject(&net, &FluctuationSpec::UniformLoadRise { delta: 1e-3, ids: vec![0] }).unwrap();
                let before: f64 = state.allocation.row_sums().iter().sum();
                state.drain(Regime::Uniform);
                let after: f64 = state.allocation.row_sums().iter().sum();
                prop_assert!((after - before - 1e-3).abs() <= 1e-9);
            }
        }
    }
}
