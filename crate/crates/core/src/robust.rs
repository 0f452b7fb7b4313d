//! Robustness metrics and robustness-maximizing resource configurations.
//!
//! Two fluctuation regimes are covered:
//!
//! * **uniform**: every engaged supply loses the same `delta` units, or a
//!   demand's extra load is split evenly among its neighbors;
//! * **proportional**: resources shrink to `(1 - xi) R` and loads grow to
//!   `xi' L`, with extra load split in proportion to current allocations.
//!
//! The optimal uniform design engages the largest supplies and equalizes
//! their free capacities; the optimal proportional design makes every
//! supply offer the same fraction of its resource.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{validate_instance, AllocationMatrix, Network, TOL};

/// Spreading amount used by [`materialize_allocation`] when the caller has no
/// preference.
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformDesignResult {
    /// Offered total per supply, indexed by supply id.
    pub offered_totals: Vec<f64>,
    /// Engaged supply ids in decreasing resource order.
    pub engaged: Vec<usize>,
    pub v_star: usize,
    pub mtrf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProportionalDesignResult {
    /// `w[i][g]`, the fraction of demand `g`'s load served by supply `i`.
    pub weights: Vec<Vec<f64>>,
    pub offered_totals: Vec<f64>,
    pub mtlf: f64,
    pub mtrf: f64,
}

impl ProportionalDesignResult {
    /// `rho[i][g] = w[i][g] * L_g`.
    pub fn allocation(&self, loads: &[f64]) -> AllocationMatrix {
        let rows = self
            .weights
            .iter()
            .map(|w| w.iter().zip(loads).map(|(w, l)| w * l).collect())
            .collect();
        AllocationMatrix::from_rows(rows).expect("weights and loads are nonnegative")
    }
}

fn engaged_capacities(network: &Network) -> Vec<(usize, f64, f64)> {
    network
        .allocation()
        .row_sums()
        .into_iter()
        .enumerate()
        .filter(|(_, offered)| *offered > TOL)
        .map(|(k, offered)| (k, network.resources()[k], offered))
        .collect()
}

/// Minimum free capacity over engaged supplies.
pub fn mtrf_uniform(network: &Network) -> Result<f64> {
    engaged_capacities(network)
        .into_iter()
        .map(|(_, resource, offered)| resource - offered)
        .reduce(f64::min)
        .ok_or_else(|| Error::Domain("MTRF undefined on idle network".into()))
}

/// Smallest even load rise on a single demand that drives one of its
/// neighbors to zero free capacity: `min_g min_{k in N(g)} C_k |N(g)|`.
pub fn mtlf_uniform(network: &Network) -> Result<f64> {
    let caps = network.free_capacities();
    let mut best = f64::INFINITY;
    for g in 0..network.n_demands() {
        let neighbors = network.neighbors(g)?;
        if neighbors.is_empty() {
            return Err(Error::Domain(format!("demand {g} has no neighbors")));
        }
        let degree = neighbors.len() as f64;
        for k in neighbors {
            best = best.min(caps[k] * degree);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Domain("MTLF undefined on network without demands".into()))
    }
}

/// Largest proportional resource reduction every engaged supply survives:
/// `min (1 - r_i / R_i)`.
pub fn mtrf_proportional(network: &Network) -> Result<f64> {
    let engaged = engaged_capacities(network);
    if engaged.is_empty() {
        return Err(Error::Domain("MTRF undefined on idle network".into()));
    }
    engaged
        .into_iter()
        .map(|(k, resource, offered)| {
            if resource <= 0.0 {
                Err(Error::Domain(format!("engaged supply {k} has zero resource")))
            } else {
                Ok(1.0 - offered / resource)
            }
        })
        .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)))
}

/// Largest proportional load multiplier every engaged supply survives:
/// `min R_i / r_i`. Reports 1 (not an error) when some supply sits exactly at
/// its resource.
pub fn mtlf_proportional(network: &Network) -> Result<f64> {
    engaged_capacities(network)
        .into_iter()
        .map(|(_, resource, offered)| resource / offered)
        .reduce(f64::min)
        .ok_or_else(|| Error::Domain("MTLF undefined: no supply offers resources".into()))
}

/// Supply ids sorted by decreasing resource, ties by increasing id.
fn sorted_by_resource(resources: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..resources.len()).collect();
    order.sort_by(|&a, &b| resources[b].total_cmp(&resources[a]).then(a.cmp(&b)));
    order
}

/// Number of engaged supplies in the optimal uniform design: the smallest `v`
/// with `sum_{j<=v} R_(j) - v R_(v+1) >= sum L` over resources sorted in
/// decreasing order (`R_(S+1) = 0`). A tied group is never split.
pub fn engaged_count(sorted_resources: &[f64], total_load: f64) -> usize {
    let n = sorted_resources.len();
    let mut prefix = 0.0;
    let mut v_star = n;
    for v in 1..=n {
        prefix += sorted_resources[v - 1];
        let next = sorted_resources.get(v).copied().unwrap_or(0.0);
        if prefix - v as f64 * next + TOL >= total_load {
            v_star = v;
            break;
        }
    }
    while v_star < n && sorted_resources[v_star] == sorted_resources[v_star - 1] {
        v_star += 1;
    }
    v_star
}

/// Optimal offered totals against uniform resource fluctuations.
pub fn design_uniform(resources: &[f64], loads: &[f64]) -> Result<UniformDesignResult> {
    validate_instance(resources, loads)?;
    let total_load: f64 = loads.iter().sum();
    let order = sorted_by_resource(resources);
    let sorted: Vec<f64> = order.iter().map(|&k| resources[k]).collect();
    let v_star = engaged_count(&sorted, total_load);
    let engaged_total: f64 = sorted[..v_star].iter().sum();
    let mtrf = (engaged_total - total_load) / v_star as f64;

    let mut offered_totals = vec![0.0; resources.len()];
    for &k in &order[..v_star] {
        offered_totals[k] = (resources[k] - mtrf).max(0.0);
    }
    Ok(UniformDesignResult {
        offered_totals,
        engaged: order[..v_star].to_vec(),
        v_star,
        mtrf,
    })
}

/// Builds an allocation with the given row totals and column sums equal to
/// `loads`.
///
/// Every engaged row first gets `epsilon` in every column so each demand
/// neighbors every engaged supply; the remainder is placed by a north-west
/// corner fill.
pub fn materialize_allocation(
    offered_totals: &[f64],
    loads: &[f64],
    epsilon: f64,
) -> Result<AllocationMatrix> {
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidValue(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if offered_totals.iter().chain(loads).any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidValue("marginals must be nonnegative".into()));
    }
    let total_offered: f64 = offered_totals.iter().sum();
    let total_load: f64 = loads.iter().sum();
    if (total_offered - total_load).abs() > 1e-9 * total_load.max(1.0) {
        return Err(Error::Infeasible(format!(
            "offered total {total_offered} does not match total load {total_load}"
        )));
    }
    let (s, d) = (offered_totals.len(), loads.len());
    let engaged: Vec<usize> = (0..s).filter(|&k| offered_totals[k] > TOL).collect();

    let mut alloc = AllocationMatrix::zeros(s, d);
    let mut row_left = offered_totals.to_vec();
    let mut col_left = loads.to_vec();
    if epsilon > 0.0 {
        let seeded_per_col = epsilon * engaged.len() as f64;
        if let Some(g) = (0..d).find(|&g| loads[g] < seeded_per_col) {
            return Err(Error::Infeasible(format!(
                "epsilon {epsilon} too large: demand {g} cannot absorb {seeded_per_col}"
            )));
        }
        if let Some(&k) = engaged.iter().find(|&&k| offered_totals[k] < epsilon * d as f64) {
            return Err(Error::Infeasible(format!(
                "epsilon {epsilon} too large for supply {k} offering {}",
                offered_totals[k]
            )));
        }
        for &k in &engaged {
            for g in 0..d {
                alloc.set(k, g, epsilon);
            }
            row_left[k] -= epsilon * d as f64;
        }
        for c in col_left.iter_mut() {
            *c -= seeded_per_col;
        }
    }

    let (mut k, mut g) = (0, 0);
    while k < s && g < d {
        if row_left[k] <= 0.0 {
            k += 1;
            continue;
        }
        if col_left[g] <= 0.0 {
            g += 1;
            continue;
        }
        let amount = row_left[k].min(col_left[g]);
        alloc.add(k, g, amount);
        row_left[k] -= amount;
        col_left[g] -= amount;
        if row_left[k] <= col_left[g] {
            k += 1;
        } else {
            g += 1;
        }
    }
    let residual: f64 = col_left.iter().map(|c| c.abs()).sum();
    if residual > 1e-7 * total_load.max(1.0) {
        return Err(Error::Infeasible(format!(
            "north-west fill left {residual} unplaced"
        )));
    }
    Ok(alloc)
}

/// Uniform design materialized into a network.
///
/// `epsilon` is shrunk to half the largest spreading amount the design can
/// accommodate when it is too large for small rows or columns.
pub fn uniform_network(resources: &[f64], loads: &[f64], epsilon: f64) -> Result<(UniformDesignResult, Network)> {
    let design = design_uniform(resources, loads)?;
    let epsilon = epsilon.min(0.5 * max_spreading(&design.offered_totals, loads));
    let alloc = materialize_allocation(&design.offered_totals, loads, epsilon)?;
    let net = Network::new(resources.to_vec(), loads.to_vec(), alloc)?;
    Ok((design, net))
}

/// Largest `epsilon` for which [`materialize_allocation`] can seed every
/// engaged row in every column.
pub fn max_spreading(offered_totals: &[f64], loads: &[f64]) -> f64 {
    let engaged: Vec<f64> = offered_totals.iter().copied().filter(|x| *x > TOL).collect();
    if engaged.is_empty() || loads.is_empty() {
        return 0.0;
    }
    let by_row = engaged.iter().copied().fold(f64::INFINITY, f64::min) / loads.len() as f64;
    let by_col = loads.iter().copied().fold(f64::INFINITY, f64::min) / engaged.len() as f64;
    by_row.min(by_col)
}

/// Optimal design against proportional fluctuations: `w[i][g] = R_i / sum R`.
pub fn design_proportional(resources: &[f64], loads: &[f64]) -> Result<ProportionalDesignResult> {
    validate_instance(resources, loads)?;
    let total_r: f64 = resources.iter().sum();
    let total_l: f64 = loads.iter().sum();
    if total_l <= 0.0 {
        return Err(Error::Domain("proportional design needs a positive total load".into()));
    }
    let weights = resources
        .iter()
        .map(|r| vec![r / total_r; loads.len()])
        .collect();
    let offered_totals = resources.iter().map(|r| r * total_l / total_r).collect();
    Ok(ProportionalDesignResult {
        weights,
        offered_totals,
        mtlf: total_r / total_l,
        mtrf: 1.0 - total_l / total_r,
    })
}

pub fn proportional_network(resources: &[f64], loads: &[f64]) -> Result<(ProportionalDesignResult, Network)> {
    let design = design_proportional(resources, loads)?;
    let alloc = design.allocation(loads);
    let net = Network::new(resources.to_vec(), loads.to_vec(), alloc)?;
    Ok((design, net))
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Brute-force reference for the uniform design, used only by tests.
    //!
    //! Any row-total vector with `sum r = sum L` and `0 <= r <= R` is
    //! realizable by some allocation, so maximizing the minimum engaged free
    //! capacity over a grid of row totals is a brute-force search over
    //! allocations.

    /// Best `min { R_k - r_k : r_k > 0 }` over row totals on a `step` grid.
    pub fn grid_mtrf(resources: &[f64], total_load: f64, step: f64) -> f64 {
        let units = (total_load / step).round() as i64;
        let caps: Vec<i64> = resources.iter().map(|r| (r / step + 1e-9).floor() as i64).collect();
        let mut best = f64::NEG_INFINITY;
        let mut current = vec![0i64; resources.len()];
        fn recurse(
            idx: usize,
            left: i64,
            caps: &[i64],
            resources: &[f64],
            step: f64,
            current: &mut Vec<i64>,
            best: &mut f64,
        ) {
            if idx == caps.len() - 1 {
                if left > caps[idx] {
                    return;
                }
                current[idx] = left;
                let value = current
                    .iter()
                    .zip(resources)
                    .filter(|(u, _)| **u > 0)
                    .map(|(u, r)| r - *u as f64 * step)
                    .fold(f64::INFINITY, f64::min);
                if value > *best {
                    *best = value;
                }
                return;
            }
            for u in 0..=left.min(caps[idx]) {
                current[idx] = u;
                recurse(idx + 1, left - u, caps, resources, step, current, best);
            }
        }
        recurse(0, units, &caps, resources, step, &mut current, &mut best);
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const N1_R: [f64; 2] = [10.0, 8.0];
    const N1_L: [f64; 2] = [6.0, 4.0];

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn n1_uniform_design_matches_grid_oracle() {
        let oracle = oracle::grid_mtrf(&N1_R, 10.0, 0.01);
        assert!((oracle - 4.0).abs() < 1e-9, "oracle {oracle}");
        let d = design_uniform(&N1_R, &N1_L).unwrap();
        assert_eq!(d.v_star, 2);
        assert_eq!(d.engaged, vec![0, 1]);
        assert!(close(d.offered_totals[0], 6.0) && close(d.offered_totals[1], 4.0));
        assert!(close(d.mtrf, 4.0));
    }

    #[test]
    fn dominant_supply_engaged_alone() {
        let d = design_uniform(&[100.0, 1.0], &[10.0]).unwrap();
        assert_eq!(d.v_star, 1);
        assert_eq!(d.offered_totals, vec![10.0, 0.0]);
        assert!(close(d.mtrf, 90.0));
        assert!(close(oracle::grid_mtrf(&[100.0, 1.0], 10.0, 0.5), 90.0));
    }

    #[test]
    fn tied_resources_engaged_together() {
        let d = design_uniform(&[5.0, 5.0], &[4.0]).unwrap();
        assert_eq!(d.v_star, 2);
        assert!(close(d.offered_totals[0], 2.0) && close(d.offered_totals[1], 2.0));
        assert!(close(d.mtrf, 3.0));
        assert!(close(oracle::grid_mtrf(&[5.0, 5.0], 4.0, 0.01), 3.0));
    }

    #[test]
    fn tie_group_never_split_even_without_load() {
        assert_eq!(engaged_count(&[5.0, 5.0, 1.0], 0.0), 2);
        assert_eq!(engaged_count(&[9.0, 5.0, 5.0, 1.0], 4.0), 1);
    }

    #[test]
    fn design_rejects_trivial_instances() {
        assert!(matches!(design_uniform(&[5.0], &[5.0]), Err(Error::Infeasible(_))));
        assert!(matches!(design_proportional(&[3.0], &[4.0]), Err(Error::Infeasible(_))));
    }

    #[test]
    fn n1_network_derived_quantities() {
        let (_, net) = uniform_network(&N1_R, &N1_L, 0.0).unwrap();
        assert!(close(net.aggregate_offered(0).unwrap(), 6.0));
        assert!(close(net.aggregate_received(0).unwrap(), 6.0));
        assert_eq!(net.engaged_suppliers().into_iter().collect::<Vec<_>>(), vec![0, 1]);
        assert!(close(mtrf_uniform(&net).unwrap(), 4.0));
        assert!(net.check_stability().is_stable());
    }

    #[test]
    fn mtrf_uniform_examples() {
        let net = Network::new(
            vec![5.0, 4.0, 100.0],
            vec![6.0],
            AllocationMatrix::from_rows(vec![vec![3.0], vec![3.0], vec![0.0]]).unwrap(),
        )
        .unwrap();
        assert!(close(mtrf_uniform(&net).unwrap(), 1.0));
        let single = Network::new(vec![10.0], vec![6.0], AllocationMatrix::from_rows(vec![vec![6.0]]).unwrap()).unwrap();
        assert!(close(mtrf_uniform(&single).unwrap(), 4.0));
        let idle = Network::unallocated(vec![3.0], vec![1.0]).unwrap();
        assert!(matches!(mtrf_uniform(&idle), Err(Error::Domain(_))));
    }

    #[test]
    fn mtlf_uniform_examples() {
        let two = Network::new(
            vec![5.0, 9.0],
            vec![6.0],
            AllocationMatrix::from_rows(vec![vec![2.0], vec![4.0]]).unwrap(),
        )
        .unwrap();
        assert!(close(mtlf_uniform(&two).unwrap(), 6.0));
        let one = Network::new(vec![10.0], vec![6.0], AllocationMatrix::from_rows(vec![vec![6.0]]).unwrap()).unwrap();
        assert!(close(mtlf_uniform(&one).unwrap(), 4.0));
        let orphan = Network::new(
            vec![10.0],
            vec![6.0, 1.0],
            AllocationMatrix::from_rows(vec![vec![6.0, 0.0]]).unwrap(),
        )
        .unwrap();
        assert!(matches!(mtlf_uniform(&orphan), Err(Error::Domain(_))));
    }

    #[test]
    fn mtlf_uniform_on_spread_n1_design() {
        let (_, net) = uniform_network(&N1_R, &N1_L, DEFAULT_EPSILON).unwrap();
        let caps = net.free_capacities();
        assert!(close(caps[0], 4.0) && close(caps[1], 4.0));
        let value = mtlf_uniform(&net).unwrap();
        assert!(close(value, 8.0));
        // Oracle: scan an even load rise on each demand until a neighbor hits zero capacity.
        let mut first_failure = f64::INFINITY;
        for g in 0..2 {
            let n = net.neighbors(g).unwrap();
            let mut rise = 0.0;
            while n.iter().all(|&k| caps[k] - rise / n.len() as f64 > 0.0) {
                rise += 1e-3;
            }
            first_failure = first_failure.min(rise);
        }
        assert!((first_failure - value).abs() < 2e-3);
    }

    #[test]
    fn materialize_examples() {
        let a = materialize_allocation(&[6.0, 4.0], &[6.0, 4.0], 0.0).unwrap();
        assert_eq!(a.to_rows(), vec![vec![6.0, 0.0], vec![0.0, 4.0]]);
        let b = materialize_allocation(&[6.0, 4.0], &[6.0, 4.0], 0.5).unwrap();
        assert_eq!(b.to_rows(), vec![vec![5.5, 0.5], vec![0.5, 3.5]]);
        assert!(b.as_slice().iter().all(|v| *v >= 0.5));
        assert!(matches!(
            materialize_allocation(&[6.0, 3.0], &[6.0, 4.0], 0.0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            materialize_allocation(&[6.0, 4.0], &[6.0, 0.5], 0.5),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn proportional_examples() {
        let d = design_proportional(&N1_R, &N1_L).unwrap();
        assert!(close(d.offered_totals[0], 50.0 / 9.0));
        assert!(close(d.offered_totals[1], 40.0 / 9.0));
        assert!(close(d.mtlf, 1.8));
        assert!(close(d.mtrf, 4.0 / 9.0));
        let (_, net) = proportional_network(&N1_R, &N1_L).unwrap();
        assert!(close(mtlf_proportional(&net).unwrap(), 1.8));
        assert!(close(mtrf_proportional(&net).unwrap(), 4.0 / 9.0));

        let single = design_proportional(&[10.0], &[4.0]).unwrap();
        assert!(close(single.weights[0][0], 1.0));
        assert!(close(single.mtlf, 2.5) && close(single.mtrf, 0.6));

        let sym = design_proportional(&[6.0, 6.0], &[6.0]).unwrap();
        assert!(close(sym.offered_totals[0], 3.0) && close(sym.offered_totals[1], 3.0));
    }

    #[test]
    fn proportional_metric_examples() {
        let net = Network::new(vec![12.0], vec![11.0], AllocationMatrix::from_rows(vec![vec![11.0]]).unwrap()).unwrap();
        assert!(close(mtrf_proportional(&net).unwrap(), 1.0 / 12.0));
        assert!(close(mtlf_proportional(&net).unwrap(), 12.0 / 11.0));
        let full = Network::new(vec![5.0, 1.0], vec![5.0], AllocationMatrix::from_rows(vec![vec![5.0], vec![0.0]]).unwrap()).unwrap();
        assert!(close(mtrf_proportional(&full).unwrap(), 0.0));
        assert!(close(mtlf_proportional(&full).unwrap(), 1.0));
        let idle = Network::unallocated(vec![3.0], vec![1.0]).unwrap();
        assert!(mtlf_proportional(&idle).is_err());
        assert!(mtrf_proportional(&idle).is_err());
    }

    #[test]
    fn proportional_grid_scan_agrees() {
        // Oracle: scan xi and xi' against the supply-side condition.
        let (d, net) = proportional_network(&N1_R, &N1_L).unwrap();
        let offered = net.allocation().row_sums();
        let stable_drop = |xi: f64| offered.iter().zip(&N1_R).all(|(r, big)| (1.0 - xi) * big >= *r);
        let stable_rise = |xi: f64| offered.iter().zip(&N1_R).all(|(r, big)| xi * r <= *big);
        let mut xi = 0.0;
        while stable_drop(xi + 1e-4) {
            xi += 1e-4;
        }
        let mut xi_up = 1.0;
        while stable_rise(xi_up + 1e-4) {
            xi_up += 1e-4;
        }
        assert!((xi - d.mtrf).abs() < 2e-4);
        assert!((xi_up - d.mtlf).abs() < 2e-4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            (
                proptest::collection::vec(1.0f64..100.0, 1..8),
                proptest::collection::vec(0.5f64..60.0, 1..6),
            )
                .prop_filter("sum R > sum L", |(r, l)| {
                    r.iter().sum::<f64>() > l.iter().sum::<f64>() + 1e-6
                })
        }

        proptest! {
            #[test]
            fn uniform_design_equalizes_engaged_capacity((r, l) in instance()) {
                let (d, net) = uniform_network(&r, &l, 0.0).unwrap();
                prop_assert!(net.check_stability().is_stable());
                let caps = net.free_capacities();
                for &k in &d.engaged {
                    prop_assert!((caps[k] - d.mtrf).abs() < 1e-9 * r[k].max(1.0));
                }
                let total: f64 = d.offered_totals.iter().sum();
                prop_assert!((total - l.iter().sum::<f64>()).abs() < 1e-9 * total.max(1.0));
            }

            #[test]
            fn materialized_columns_meet_loads((r, l) in instance()) {
                let d = design_uniform(&r, &l).unwrap();
                let a = materialize_allocation(&d.offered_totals, &l, 0.0).unwrap();
                for (g, sum) in a.col_sums().iter().enumerate() {
                    prop_assert!((sum - l[g]).abs() < 1e-9 * l[g].max(1.0));
                }
                for (k, sum) in a.row_sums().iter().enumerate() {
                    prop_assert!((sum - d.offered_totals[k]).abs() < 1e-9 * r[k].max(1.0));
                }
            }

            #[test]
            fn adding_to_idle_supply_never_hurts((r, l) in instance(), extra in 0.0f64..50.0) {
                let d = design_uniform(&r, &l).unwrap();
                if let Some(idle) = (0..r.len()).find(|k| !d.engaged.contains(k)) {
                    let mut bigger = r.clone();
                    bigger[idle] += extra;
                    let e = design_uniform(&bigger, &l).unwrap();
                    prop_assert!(e.mtrf + 1e-9 >= d.mtrf);
                }
            }

            #[test]
            fn proportional_design_attains_bounds((r, l) in instance()) {
                let (d, net) = proportional_network(&r, &l).unwrap();
                let total_r: f64 = r.iter().sum();
                let total_l: f64 = l.iter().sum();
                let mtlf = mtlf_proportional(&net).unwrap();
                let mtrf = mtrf_proportional(&net).unwrap();
                prop_assert!((mtlf * total_l - total_r).abs() < 1e-9 * total_r);
                prop_assert!(((1.0 - mtrf) * total_r - total_l).abs() < 1e-9 * total_r);
                for g in 0..l.len() {
                    let s: f64 = d.weights.iter().map(|w| w[g]).sum();
                    prop_assert!((s - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
