//! Heterogeneous link costs `alpha * rho^beta` and cost-aware allocation.
//!
//! [`solve_p2`] finds the cheapest allocation with prescribed row totals and
//! column sums by ascending the Lagrangian dual. The primal point is always
//! recovered from the multipliers through the stationarity condition
//!
//! ```text
//! rho = ((-lambda_i - zeta_g + phi_ig) / (beta * alpha)) ^ (1 / (beta - 1))
//! ```
//!
//! with `phi` realized by clamping negative numerators to zero. Ascent is done
//! one multiplier at a time with an exact line search on that coordinate,
//! which keeps the iteration count small on the stiff duals produced by
//! exponents close to one.
//!
//! [`reduce_cost`] is the local re-adjustment heuristic: repeatedly move a
//! small amount of resource off the link with the steepest marginal cost
//! onto the most tolerant cheap supply.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use crate::error::{Error, Result};
use crate::network::{AllocationMatrix, Network, Regime, TOL};

#[inline]
pub fn link_cost(rho: f64, alpha: f64, beta: f64) -> f64 {
    if rho <= 0.0 {
        0.0
    } else {
        alpha * rho.powf(beta)
    }
}

/// `d/d rho` of [`link_cost`].
#[inline]
pub fn marginal_cost(rho: f64, alpha: f64, beta: f64) -> f64 {
    if rho <= 0.0 {
        0.0
    } else {
        alpha * beta * rho.powf(beta - 1.0)
    }
}

/// Per-link `alpha` (> 0) and `beta` (> 1), both `S x D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostModelRepr", into = "CostModelRepr")]
pub struct CostModel {
    rows: usize,
    cols: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CostModelRepr {
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
}

impl TryFrom<CostModelRepr> for CostModel {
    type Error = Error;
    fn try_from(r: CostModelRepr) -> Result<Self> {
        CostModel::new(r.alpha, r.beta)
    }
}

impl From<CostModel> for CostModelRepr {
    fn from(m: CostModel) -> Self {
        CostModelRepr {
            alpha: m.alpha.chunks(m.cols.max(1)).map(<[f64]>::to_vec).collect(),
            beta: m.beta.chunks(m.cols.max(1)).map(<[f64]>::to_vec).collect(),
        }
    }
}

impl CostModel {
    pub fn new(alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>) -> Result<Self> {
        let rows = alpha.len();
        let cols = alpha.first().map_or(0, Vec::len);
        let shape_ok = |m: &Vec<Vec<f64>>| m.len() == rows && m.iter().all(|r| r.len() == cols);
        if !shape_ok(&alpha) || !shape_ok(&beta) {
            return Err(Error::InvalidValue("alpha and beta must be equally sized matrices".into()));
        }
        let alpha: Vec<f64> = alpha.into_iter().flatten().collect();
        let beta: Vec<f64> = beta.into_iter().flatten().collect();
        Self::from_flat(rows, cols, alpha, beta)
    }

    pub fn from_flat(rows: usize, cols: usize, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != rows * cols || beta.len() != rows * cols {
            return Err(Error::InvalidValue("cost model size mismatch".into()));
        }
        if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidValue(format!("alpha must be > 0, found {a}")));
        }
        if let Some(b) = beta.iter().find(|b| !(b.is_finite() && **b > 1.0)) {
            return Err(Error::InvalidValue(format!("beta must be > 1, found {b}")));
        }
        Ok(Self { rows, cols, alpha, beta })
    }

    pub fn uniform(rows: usize, cols: usize, alpha: f64, beta: f64) -> Result<Self> {
        Self::from_flat(rows, cols, vec![alpha; rows * cols], vec![beta; rows * cols])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn alpha(&self, k: usize, g: usize) -> f64 {
        self.alpha[k * self.cols + g]
    }

    #[inline]
    pub fn beta(&self, k: usize, g: usize) -> f64 {
        self.beta[k * self.cols + g]
    }

    #[inline]
    pub fn cost(&self, k: usize, g: usize, rho: f64) -> f64 {
        link_cost(rho, self.alpha(k, g), self.beta(k, g))
    }

    #[inline]
    pub fn marginal(&self, k: usize, g: usize, rho: f64) -> f64 {
        marginal_cost(rho, self.alpha(k, g), self.beta(k, g))
    }

    fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::Shape {
                expected: shape,
                got: self.shape(),
            });
        }
        Ok(())
    }
}

pub fn total_cost(allocation: &AllocationMatrix, model: &CostModel) -> Result<f64> {
    model.check_shape(allocation.shape())?;
    let (s, d) = allocation.shape();
    let mut sum = 0.0;
    for k in 0..s {
        for g in 0..d {
            sum += model.cost(k, g, allocation.get(k, g));
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Full passes over every multiplier.
    pub max_sweeps: usize,
    /// Max absolute constraint residual at return.
    pub feasibility_tol: f64,
    /// Max duality gap relative to `max(1, cost)`.
    pub gap_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            max_sweeps: 200_000,
            feasibility_tol: 1e-6,
            gap_tol: 1e-5,
        }
    }
}

/// Lagrange multipliers: `lambda` per row, `zeta` per column and `phi` for
/// the nonnegativity constraints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub zeta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl DualState {
    #[inline]
    pub fn phi(&self, k: usize, g: usize) -> f64 {
        self.phi[k * self.zeta.len() + g]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSolution {
    #[serde(skip)]
    pub allocation: AllocationMatrix,
    pub dual: DualState,
    pub cost: f64,
    pub dual_value: f64,
    pub residual: f64,
    pub gap: f64,
    pub sweeps: usize,
}

#[derive(Debug, Clone, Copy)]
enum RowBound {
    /// `sum_g rho = b`
    Equal,
    /// `sum_g rho <= b`, `lambda >= 0`
    AtMost,
}

/// Coordinate-ascent state. Stores `u_i = -lambda_i` and `w_g = -zeta_g` so
/// that `rho_ig = ((u_i + w_g)_+ / (alpha beta))^(1 / (beta - 1))`.
struct DualAscent<'a> {
    rows: usize,
    cols: usize,
    scale: Vec<f64>,
    power: Vec<f64>,
    model: &'a CostModel,
    row_target: &'a [f64],
    col_target: &'a [f64],
    bound: RowBound,
    u: Vec<f64>,
    w: Vec<f64>,
}

impl<'a> DualAscent<'a> {
    fn new(model: &'a CostModel, row_target: &'a [f64], col_target: &'a [f64], bound: RowBound) -> Self {
        let (rows, cols) = model.shape();
        let scale = model.alpha.iter().zip(&model.beta).map(|(a, b)| a * b).collect();
        let power = model.beta.iter().map(|b| 1.0 / (b - 1.0)).collect();
        Self {
            rows,
            cols,
            scale,
            power,
            model,
            row_target,
            col_target,
            bound,
            u: vec![0.0; rows],
            w: vec![0.0; cols],
        }
    }

    #[inline]
    fn rho_at(&self, idx: usize, mu: f64) -> f64 {
        if mu <= 0.0 {
            0.0
        } else {
            (mu / self.scale[idx]).powf(self.power[idx])
        }
    }

    #[inline]
    fn rho(&self, k: usize, g: usize) -> f64 {
        self.rho_at(k * self.cols + g, self.u[k] + self.w[g])
    }

    /// Solves `sum_j rho(idx_j, t + offset_j) = target` for `t`. `entries`
    /// yields `(flat index, offset)`.
    fn line_search(&self, entries: &[(usize, f64)], target: f64, start: f64) -> f64 {
        let eval = |t: f64| -> (f64, f64) {
            let mut f = 0.0;
            let mut df = 0.0;
            for &(idx, off) in entries {
                let mu = t + off;
                if mu > 0.0 {
                    let r = self.rho_at(idx, mu);
                    f += r;
                    df += self.power[idx] * r / mu;
                }
            }
            (f, df)
        };
        let max_off = entries.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
        let mut lo = -max_off;
        if target <= 0.0 {
            return lo;
        }
        let mut step = 1.0f64.max(start.abs());
        let mut hi = lo + step;
        while eval(hi).0 < target {
            lo = hi;
            step *= 2.0;
            hi += step;
        }
        let tol = 1e-14 * target.max(1.0);
        let mut t = start.clamp(lo, hi);
        for _ in 0..200 {
            let (f, df) = eval(t);
            let err = f - target;
            if err.abs() <= tol {
                return t;
            }
            if err > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let newton = if df > 0.0 { t - err / df } else { f64::NAN };
            t = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        t
    }

    fn update_row(&mut self, k: usize, buf: &mut Vec<(usize, f64)>) {
        buf.clear();
        buf.extend((0..self.cols).map(|g| (k * self.cols + g, self.w[g])));
        let target = self.row_target[k];
        if let RowBound::AtMost = self.bound {
            // lambda_k = 0 whenever the row is already within its bound.
            let free: f64 = buf.iter().map(|&(idx, off)| self.rho_at(idx, off)).sum();
            if free <= target {
                self.u[k] = 0.0;
                return;
            }
        }
        self.u[k] = self.line_search(buf, target, self.u[k]);
        if let RowBound::AtMost = self.bound {
            self.u[k] = self.u[k].min(0.0);
        }
    }

    fn update_col(&mut self, g: usize, buf: &mut Vec<(usize, f64)>) {
        buf.clear();
        buf.extend((0..self.rows).map(|k| (k * self.cols + g, self.u[k])));
        self.w[g] = self.line_search(buf, self.col_target[g], self.w[g]);
    }

    fn row_residual(&self) -> f64 {
        (0..self.rows)
            .map(|k| {
                let r: f64 = (0..self.cols).map(|g| self.rho(k, g)).sum();
                match self.bound {
                    RowBound::Equal => (r - self.row_target[k]).abs(),
                    RowBound::AtMost => (r - self.row_target[k]).max(0.0),
                }
            })
            .fold(0.0, f64::max)
    }

    fn solve(mut self, params: &SolverParams) -> Result<DualSolution> {
        // Warm start: each column split evenly, then fit the multipliers.
        let mut buf = Vec::with_capacity(self.rows.max(self.cols));
        for g in 0..self.cols {
            self.update_col(g, &mut buf);
        }
        let mut sweeps = 0;
        let mut residual = self.row_residual();
        while sweeps < params.max_sweeps {
            for k in 0..self.rows {
                self.update_row(k, &mut buf);
            }
            for g in 0..self.cols {
                self.update_col(g, &mut buf);
            }
            sweeps += 1;
            if sweeps % 4 == 0 || sweeps < 8 {
                residual = self.row_residual();
                if residual <= params.feasibility_tol {
                    let sol = self.finish(sweeps);
                    if sol.gap <= params.gap_tol * sol.cost.abs().max(1.0) {
                        return Ok(sol);
                    }
                }
            }
        }
        let sol = self.finish(sweeps);
        Err(Error::Convergence {
            iterations: sweeps,
            residual: residual.max(sol.residual),
            gap: sol.gap,
        })
    }

    fn finish(&self, sweeps: usize) -> DualSolution {
        let (s, d) = (self.rows, self.cols);
        let mut alloc = AllocationMatrix::zeros(s, d);
        let mut phi = vec![0.0; s * d];
        for k in 0..s {
            for g in 0..d {
                let mu = self.u[k] + self.w[g];
                alloc.set(k, g, self.rho(k, g));
                // Stationarity at a zero entry: phi = lambda + zeta = -mu >= 0.
                phi[k * d + g] = (-mu).max(0.0);
            }
        }
        let cost = total_cost(&alloc, self.model).expect("shape checked");
        let rows = alloc.row_sums();
        let cols = alloc.col_sums();
        let lambda: Vec<f64> = self.u.iter().map(|u| -u).collect();
        let zeta: Vec<f64> = self.w.iter().map(|w| -w).collect();
        let row_term: f64 = lambda
            .iter()
            .zip(rows.iter().zip(self.row_target))
            .map(|(l, (r, b))| l * (r - b))
            .sum();
        let col_term: f64 = zeta
            .iter()
            .zip(cols.iter().zip(self.col_target))
            .map(|(z, (c, b))| z * (c - b))
            .sum();
        let dual_value = cost + row_term + col_term;
        let residual = match self.bound {
            RowBound::Equal => rows
                .iter()
                .zip(self.row_target)
                .map(|(r, b)| (r - b).abs())
                .fold(0.0, f64::max),
            RowBound::AtMost => rows
                .iter()
                .zip(self.row_target)
                .map(|(r, b)| (r - b).max(0.0))
                .fold(0.0, f64::max),
        }
        .max(
            cols.iter()
                .zip(self.col_target)
                .map(|(c, b)| (c - b).abs())
                .fold(0.0, f64::max),
        );
        DualSolution {
            allocation: alloc,
            dual: DualState { lambda, zeta, phi },
            cost,
            dual_value,
            residual,
            gap: (cost - dual_value).abs(),
            sweeps,
        }
    }
}

fn check_marginals(name: &str, values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidValue(format!("{name} must be nonnegative, found {v}")));
    }
    Ok(())
}

/// Cheapest allocation with row sums `offered_totals` and column sums `loads`.
pub fn solve_p2(
    offered_totals: &[f64],
    loads: &[f64],
    model: &CostModel,
    params: &SolverParams,
) -> Result<DualSolution> {
    model.check_shape((offered_totals.len(), loads.len()))?;
    check_marginals("offered totals", offered_totals)?;
    check_marginals("loads", loads)?;
    let rows: f64 = offered_totals.iter().sum();
    let cols: f64 = loads.iter().sum();
    if (rows - cols).abs() > params.feasibility_tol.max(1e-9 * cols.max(1.0)) {
        return Err(Error::Infeasible(format!(
            "row totals sum to {rows} but loads sum to {cols}"
        )));
    }
    DualAscent::new(model, offered_totals, loads, RowBound::Equal).solve(params)
}

/// Minimum cost of any allocation that keeps every supply within its
/// resource and meets every load exactly.
pub fn min_feasible_cost(
    resources: &[f64],
    loads: &[f64],
    model: &CostModel,
    params: &SolverParams,
) -> Result<(f64, DualSolution)> {
    model.check_shape((resources.len(), loads.len()))?;
    crate::network::validate_instance(resources, loads)?;
    let sol = DualAscent::new(model, resources, loads, RowBound::AtMost).solve(params)?;
    Ok((sol.cost, sol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReduceParams {
    /// Largest amount moved per iteration.
    pub epsilon: f64,
    pub objective_cost: f64,
    /// Selects the supply tolerance used to pick the receiving supply.
    pub regime: Regime,
    pub seed: u64,
    /// Stop (successfully) after this many iterations even if above the
    /// objective.
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub allocation: AllocationMatrix,
    /// Cost before the first iteration followed by the cost after each one.
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
    pub reached_objective: bool,
}

impl Reduction {
    pub fn final_cost(&self) -> f64 {
        *self.cost_trace.last().expect("trace starts with the initial cost")
    }
}

#[derive(Debug, ThisError)]
pub enum ReduceError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("cost reduction stalled at {:.6} above objective {objective:.6}", .best_effort.final_cost())]
    Stalled {
        objective: f64,
        best_effort: Box<Reduction>,
    },
}

/// Fluctuation tolerance of a supply under `regime`: free capacity for the
/// uniform regime, `R / r` for the proportional one.
#[inline]
pub fn tolerance(regime: Regime, resource: f64, offered: f64) -> f64 {
    match regime {
        Regime::Uniform => resource - offered,
        Regime::Proportional => {
            if offered <= 0.0 {
                f64::INFINITY
            } else {
                resource / offered
            }
        }
    }
}

fn pick<R: Rng>(rng: &mut R, ties: &[usize]) -> usize {
    *ties.choose(rng).expect("non-empty tie set")
}

/// Local cost reduction that preserves every column sum and never overloads
/// a supply.
///
/// Each iteration takes the link with the largest marginal cost, finds the
/// supplies owning a link of minimal marginal cost, and shifts up to
/// `epsilon` from the expensive link to the most tolerant of those supplies
/// on the same demand. When the hot supply is the only owner of a cheapest
/// link, the candidates are instead the other supplies with the cheapest
/// link to the hot demand. If the steepest link admits no cost-decreasing
/// step, the next steepest links are tried in order; the run stalls when
/// none does. Moves that would raise the total cost are shrunk (and
/// skipped if they cannot be made non-increasing).
pub fn reduce_cost(
    network: &Network,
    model: &CostModel,
    params: &ReduceParams,
) -> std::result::Result<Reduction, ReduceError> {
    let (s, d) = (network.n_supplies(), network.n_demands());
    model.check_shape((s, d))?;
    if !(params.epsilon > 0.0 && params.epsilon.is_finite()) {
        return Err(Error::InvalidValue(format!("epsilon must be > 0, got {}", params.epsilon)).into());
    }
    if !network.check_stability().overloaded.is_empty() {
        return Err(Error::Domain("cost reduction needs a network without overloaded supplies".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let resources = network.resources();
    let mut alloc = network.allocation().clone();
    let mut offered = alloc.row_sums();
    let mut marginal: Vec<f64> = (0..s * d)
        .map(|i| model.marginal(i / d, i % d, alloc.get(i / d, i % d)))
        .collect();
    let mut cost = total_cost(&alloc, model)?;
    let mut trace = vec![cost];
    let mut iterations = 0usize;
    let sweep = (s * d).max(100);
    let mut sweep_start_cost = cost;
    let mut hi_ties = Vec::new();
    let mut order = Vec::new();

    let finish = |alloc: AllocationMatrix, trace: Vec<f64>, iterations, reached| Reduction {
        allocation: alloc,
        cost_trace: trace,
        iterations,
        reached_objective: reached,
    };

    loop {
        if cost - params.objective_cost <= 0.0 {
            return Ok(finish(alloc, trace, iterations, true));
        }
        if params.max_iterations.is_some_and(|m| iterations >= m) {
            return Ok(finish(alloc, trace, iterations, false));
        }
        if iterations > 0 && iterations.is_multiple_of(sweep) {
            if sweep_start_cost - cost < 1e-12 {
                let best_effort = Box::new(finish(alloc, trace, iterations, false));
                return Err(ReduceError::Stalled {
                    objective: params.objective_cost,
                    best_effort,
                });
            }
            sweep_start_cost = cost;
        }
        iterations += 1;

        let max = marginal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = marginal.iter().copied().fold(f64::INFINITY, f64::min);
        hi_ties.clear();
        hi_ties.extend((0..s * d).filter(|&i| marginal[i] == max));
        let first = pick(&mut rng, &hi_ties);
        let state = MoveState {
            d,
            marginal: &marginal,
            min,
            alloc: &alloc,
            offered: &offered,
            resources,
            model,
            params,
        };
        let mut planned = state.plan(first, &mut rng);
        if planned.is_none() {
            // The steepest link sits at a local equilibrium; walk down the
            // remaining links until one admits a cost-decreasing move.
            order.clear();
            order.extend((0..s * d).filter(|&i| i != first && alloc.as_slice()[i] > 0.0));
            order.sort_by(|a, b| marginal[*b].total_cmp(&marginal[*a]));
            for &hot in &order {
                planned = state.plan(hot, &mut rng);
                if planned.is_some() {
                    break;
                }
            }
        }
        let Some(mv) = planned else {
            let best_effort = Box::new(finish(alloc, trace, iterations - 1, false));
            return Err(ReduceError::Stalled {
                objective: params.objective_cost,
                best_effort,
            });
        };
        let (k_hot, g) = (mv.hot / d, mv.hot % d);
        alloc.add(k_hot, g, -mv.kappa);
        alloc.add(mv.cool, g, mv.kappa);
        offered[k_hot] -= mv.kappa;
        offered[mv.cool] += mv.kappa;
        marginal[mv.hot] = model.marginal(k_hot, g, alloc.get(k_hot, g));
        marginal[mv.cool * d + g] = model.marginal(mv.cool, g, alloc.get(mv.cool, g));
        cost += mv.change;
        trace.push(cost);
        debug_assert!(offered[mv.cool] <= resources[mv.cool] + TOL);
    }
}

struct Move {
    hot: usize,
    cool: usize,
    kappa: f64,
    change: f64,
}

struct MoveState<'a> {
    d: usize,
    marginal: &'a [f64],
    min: f64,
    alloc: &'a AllocationMatrix,
    offered: &'a [f64],
    resources: &'a [f64],
    model: &'a CostModel,
    params: &'a ReduceParams,
}

impl MoveState<'_> {
    /// Receiving supply and step for moving mass off link `hot`, or `None`
    /// if no step strictly lowers the cost.
    fn plan<R: Rng>(&self, hot: usize, rng: &mut R) -> Option<Move> {
        let d = self.d;
        let s = self.offered.len();
        let (k_hot, g) = (hot / d, hot % d);
        let tol = |k: usize| tolerance(self.params.regime, self.resources[k], self.offered[k]);

        let mut rows: Vec<usize> = (0..s)
            .filter(|&k| k != k_hot && (0..d).any(|j| self.marginal[k * d + j] == self.min))
            .collect();
        if rows.is_empty() {
            // Only the hot supply owns a cheapest link. Fall back to the
            // cheapest other supply on the hot demand.
            let col_min = (0..s)
                .filter(|&k| k != k_hot)
                .map(|k| self.marginal[k * d + g])
                .fold(f64::INFINITY, f64::min);
            rows.extend((0..s).filter(|&k| k != k_hot && self.marginal[k * d + g] == col_min));
        }
        if rows.is_empty() {
            return None;
        }
        let best = rows.iter().map(|&k| tol(k)).fold(f64::NEG_INFINITY, f64::max);
        rows.retain(|&k| tol(k) == best);
        let cool = pick(rng, &rows);

        let capacity = (self.resources[cool] - self.offered[cool]).max(0.0);
        let hot_rho = self.alloc.get(k_hot, g);
        let cool_rho = self.alloc.get(cool, g);
        let m = self.model;
        let delta = |kappa: f64| {
            m.cost(k_hot, g, hot_rho - kappa) - m.cost(k_hot, g, hot_rho) + m.cost(cool, g, cool_rho + kappa)
                - m.cost(cool, g, cool_rho)
        };
        let mut kappa = self.params.epsilon.min(hot_rho).min(capacity);
        let mut change = delta(kappa);
        let mut halvings = 0;
        while change >= 0.0 && halvings < 40 && kappa > 0.0 {
            kappa *= 0.5;
            change = delta(kappa);
            halvings += 1;
        }
        (kappa > 0.0 && change < 0.0).then_some(Move { hot, cool, kappa, change })
    }
}
