//! Bipartite demand-supply network model.
//!
//! A network is a set of supply nodes (each holding `R_k` resource units), a
//! set of demand nodes (each requesting `L_i` units) and a dense allocation
//! matrix `rho[k][i]` of resources shared from supply `k` to demand `i`. An
//! edge exists wherever the allocation is positive.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on every stability comparison.
pub const TOL: f64 = 1e-9;

/// How a fluctuation is distributed across the affected nodes: the same
/// absolute amount everywhere, or the same fraction of each node's current
/// level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Uniform,
    Proportional,
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Regime::Uniform),
            "proportional" => Ok(Regime::Proportional),
            other => Err(Error::Parse(format!("unknown regime {other:?}"))),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Uniform => "uniform",
            Regime::Proportional => "proportional",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupplyNode {
    pub id: usize,
    pub resource: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandNode {
    pub id: usize,
    pub load: f64,
}

/// Dense, row-major `S x D` matrix of nonnegative allocations.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl AllocationMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in &rows {
            if row.len() != n_cols {
                return Err(Error::Shape {
                    expected: (n_rows, n_cols),
                    got: (n_rows, row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(n_rows, n_cols, data)
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidValue(format!(
                "allocation has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidValue(format!(
                "allocation entries must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    /// Sets an entry. Negative values within rounding noise are clamped to
    /// zero; anything more negative is a logic error.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(value > -1e-7, "negative allocation {value}");
        self.data[row * self.cols + col] = value.max(0.0);
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, delta: f64) {
        let v = self.get(row, col) + delta;
        self.set(row, col, v);
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_sum(&self, row: usize) -> f64 {
        self.row(row).iter().sum()
    }

    pub fn col_sum(&self, col: usize) -> f64 {
        (0..self.rows).map(|r| self.get(r, col)).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row_sum(r)).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(r)) {
                *s += v;
            }
        }
        sums
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn zero_row(&mut self, row: usize) {
        self.row_mut(row).fill(0.0);
    }

    pub fn zero_col(&mut self, col: usize) {
        for r in 0..self.rows {
            self.data[r * self.cols + col] = 0.0;
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Violation of the supply-side condition `r_k <= R_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Overload {
    pub supply: usize,
    pub magnitude: f64,
}

/// Violation of the demand-side condition `l_i >= L_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deficiency {
    pub demand: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StabilityReport {
    pub overloaded: Vec<Overload>,
    pub deficient: Vec<Deficiency>,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.overloaded.is_empty() && self.deficient.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    resources: Vec<f64>,
    loads: Vec<f64>,
    allocation: AllocationMatrix,
}

fn validate_amounts(kind: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        Some(bad) => Err(Error::InvalidValue(format!(
            "{kind} must be finite and nonnegative, found {bad}"
        ))),
        None => Ok(()),
    }
}

/// Checks the node amounts on their own: nonnegative, finite and
/// `sum(R) > sum(L)`.
pub fn validate_instance(resources: &[f64], loads: &[f64]) -> Result<()> {
    validate_amounts("resources", resources)?;
    validate_amounts("loads", loads)?;
    let total_r: f64 = resources.iter().sum();
    let total_l: f64 = loads.iter().sum();
    if total_r <= total_l {
        return Err(Error::Infeasible(format!(
            "total resource {total_r} must exceed total load {total_l}"
        )));
    }
    Ok(())
}

impl Network {
    pub fn new(resources: Vec<f64>, loads: Vec<f64>, allocation: AllocationMatrix) -> Result<Self> {
        validate_instance(&resources, &loads)?;
        let expected = (resources.len(), loads.len());
        if allocation.shape() != expected {
            return Err(Error::Shape {
                expected,
                got: allocation.shape(),
            });
        }
        Ok(Self {
            resources,
            loads,
            allocation,
        })
    }

    /// Network with an all-zero allocation.
    pub fn unallocated(resources: Vec<f64>, loads: Vec<f64>) -> Result<Self> {
        let alloc = AllocationMatrix::zeros(resources.len(), loads.len());
        Self::new(resources, loads, alloc)
    }

    /// Same nodes, different allocation.
    pub fn with_allocation(&self, allocation: AllocationMatrix) -> Result<Self> {
        Self::new(self.resources.clone(), self.loads.clone(), allocation)
    }

    pub fn n_supplies(&self) -> usize {
        self.resources.len()
    }

    pub fn n_demands(&self) -> usize {
        self.loads.len()
    }

    pub fn resources(&self) -> &[f64] {
        &self.resources
    }

    pub fn loads(&self) -> &[f64] {
        &self.loads
    }

    pub fn allocation(&self) -> &AllocationMatrix {
        &self.allocation
    }

    pub fn into_allocation(self) -> AllocationMatrix {
        self.allocation
    }

    pub fn supply(&self, id: usize) -> Result<SupplyNode> {
        self.check_supply(id)?;
        Ok(SupplyNode {
            id,
            resource: self.resources[id],
        })
    }

    pub fn demand(&self, id: usize) -> Result<DemandNode> {
        self.check_demand(id)?;
        Ok(DemandNode {
            id,
            load: self.loads[id],
        })
    }

    pub fn supplies(&self) -> impl Iterator<Item = SupplyNode> + '_ {
        self.resources
            .iter()
            .enumerate()
            .map(|(id, &resource)| SupplyNode { id, resource })
    }

    pub fn demands(&self) -> impl Iterator<Item = DemandNode> + '_ {
        self.loads
            .iter()
            .enumerate()
            .map(|(id, &load)| DemandNode { id, load })
    }

    pub fn total_resource(&self) -> f64 {
        self.resources.iter().sum()
    }

    pub fn total_load(&self) -> f64 {
        self.loads.iter().sum()
    }

    fn check_supply(&self, id: usize) -> Result<()> {
        if id >= self.n_supplies() {
            return Err(Error::index("supply", id, self.n_supplies()));
        }
        Ok(())
    }

    fn check_demand(&self, id: usize) -> Result<()> {
        if id >= self.n_demands() {
            return Err(Error::index("demand", id, self.n_demands()));
        }
        Ok(())
    }

    /// `r_k`, the aggregate resources offered by supply `k`.
    pub fn aggregate_offered(&self, supply: usize) -> Result<f64> {
        self.check_supply(supply)?;
        Ok(self.allocation.row_sum(supply))
    }

    /// `l_i`, the aggregate resources received by demand `i`.
    pub fn aggregate_received(&self, demand: usize) -> Result<f64> {
        self.check_demand(demand)?;
        Ok(self.allocation.col_sum(demand))
    }

    /// `C_k = R_k - r_k`; negative when the supply is overloaded.
    pub fn free_capacity(&self, supply: usize) -> Result<f64> {
        Ok(self.resources[supply] - self.aggregate_offered(supply)?)
    }

    pub fn free_capacities(&self) -> Vec<f64> {
        self.resources
            .iter()
            .zip(self.allocation.row_sums())
            .map(|(r, offered)| r - offered)
            .collect()
    }

    pub fn check_stability(&self) -> StabilityReport {
        let overloaded = self
            .allocation
            .row_sums()
            .into_iter()
            .enumerate()
            .filter_map(|(k, offered)| {
                let excess = offered - self.resources[k];
                (excess > TOL).then_some(Overload {
                    supply: k,
                    magnitude: excess,
                })
            })
            .collect();
        let deficient = self
            .allocation
            .col_sums()
            .into_iter()
            .enumerate()
            .filter_map(|(i, received)| {
                let missing = self.loads[i] - received;
                (missing > TOL).then_some(Deficiency {
                    demand: i,
                    magnitude: missing,
                })
            })
            .collect();
        StabilityReport {
            overloaded,
            deficient,
        }
    }

    /// Supplies with `r_k > TOL`.
    pub fn engaged_suppliers(&self) -> BTreeSet<usize> {
        (0..self.n_supplies())
            .filter(|&k| self.allocation.row_sum(k) > TOL)
            .collect()
    }

    /// Supplies allocating more than `TOL` to `demand`.
    pub fn neighbors(&self, demand: usize) -> Result<Vec<usize>> {
        self.check_demand(demand)?;
        Ok((0..self.n_supplies())
            .filter(|&k| self.allocation.get(k, demand) > TOL)
            .collect())
    }
}
