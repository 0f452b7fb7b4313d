//! Monte Carlo experiments over random instances.
//!
//! Every random draw comes from a ChaCha8 stream keyed by the base seed, the
//! realization index and a lane (instance generation, the random baseline,
//! or a trial index), so results do not depend on execution order or on
//! whether realizations run in parallel.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{greedy_allocate, random_allocate_with};
use crate::cascade::FluctuationSpec;
use crate::cost::{self, CostModel, ReduceError, ReduceParams, SolverParams};
use crate::error::{Error, Result};
use crate::mitigation::{mitigate, MitigationBudget, MitigationParams};
use crate::network::{Network, Regime};
use crate::par::Execution;
use crate::robust;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Paper,
}

impl FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::Config(format!("unknown scale {other:?}"))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scale: Scale,
    pub n_supplies: usize,
    pub n_demands: usize,
    pub resource_range: [f64; 2],
    pub load_range: [f64; 2],
    pub cost_alpha_range: [f64; 2],
    pub cost_beta_range: [f64; 2],
    pub n_realizations: usize,
    pub n_trials_per_realization: usize,
    pub seed: u64,
    /// Spreading amount of the robust design and step of the cost reduction.
    pub epsilon: f64,
    /// Share of each supply held back by the baselines.
    pub freeze_fraction: f64,
    /// Budget shares: `gamma = share * D`, `upsilon = share * sum(L)`.
    pub budget_fractions: Vec<f64>,
    pub initial_failure_counts: Vec<usize>,
    /// Cost-reduction iterations recorded per method.
    pub reduce_iterations: usize,
    pub mitigation_regime: Regime,
    /// Allocation the mitigation study stresses.
    pub mitigation_network: Method,
    pub solver: SolverParams,
}

impl ExperimentConfig {
    pub fn desk() -> Self {
        Self {
            scale: Scale::Desk,
            n_supplies: 50,
            n_demands: 40,
            resource_range: [10.0, 280.0],
            load_range: [10.0, 200.0],
            cost_alpha_range: [10.0, 100.0],
            cost_beta_range: [1.1, 1.4],
            n_realizations: 50,
            n_trials_per_realization: 20,
            seed: 1,
            epsilon: 0.01,
            freeze_fraction: 0.1,
            budget_fractions: vec![0.0, 0.15, 0.35],
            initial_failure_counts: vec![5, 10, 15, 20, 25, 30],
            reduce_iterations: 200,
            mitigation_regime: Regime::Uniform,
            mitigation_network: Method::Random,
            solver: SolverParams::default(),
        }
    }

    pub fn paper() -> Self {
        Self {
            scale: Scale::Paper,
            n_supplies: 250,
            n_demands: 200,
            n_realizations: 200,
            n_trials_per_realization: 100,
            initial_failure_counts: vec![10, 20, 30, 40, 50, 60],
            reduce_iterations: 500,
            ..Self::desk()
        }
    }

    pub fn preset(scale: Scale) -> Self {
        match scale {
            Scale::Desk => Self::desk(),
            Scale::Paper => Self::paper(),
        }
    }

    /// Preset for `scale` with the fields present in `json` overridden. A
    /// `scale` field in the document selects the preset instead.
    pub fn from_json_overlay(scale: Scale, json: &str) -> Result<Self> {
        let overlay: serde_json::Value =
            serde_json::from_str(json).map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        let serde_json::Value::Object(fields) = overlay else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        let scale = match fields.get("scale") {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("scale: {e}")))?,
            None => scale,
        };
        let mut base = serde_json::to_value(Self::preset(scale)).expect("config serializes");
        let obj = base.as_object_mut().expect("config is an object");
        for (k, v) in fields {
            obj.insert(k, v);
        }
        let cfg: Self = serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_supplies == 0 || self.n_demands == 0 {
            return bad("network needs at least one supply and one demand".into());
        }
        for (name, [lo, hi], min) in [
            ("resource_range", self.resource_range, 0.0),
            ("load_range", self.load_range, 0.0),
            ("cost_alpha_range", self.cost_alpha_range, f64::MIN_POSITIVE),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= min) {
                return bad(format!("{name} [{lo}, {hi}] is not a valid interval"));
            }
        }
        let [blo, bhi] = self.cost_beta_range;
        if !(blo > 1.0 && blo <= bhi && bhi.is_finite()) {
            return bad(format!("cost_beta_range [{blo}, {bhi}] must lie above 1"));
        }
        let max_r = self.n_supplies as f64 * self.resource_range[1];
        let min_l = self.n_demands as f64 * self.load_range[0];
        if max_r <= min_l {
            return bad(format!(
                "total resource can be at most {max_r} but total load is at least {min_l}"
            ));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.freeze_fraction) {
            return bad(format!("freeze_fraction must be in [0, 1), got {}", self.freeze_fraction));
        }
        if let Some(f) = self.budget_fractions.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
            return bad(format!("budget fraction {f} must be >= 0"));
        }
        if let Some(c) = self.initial_failure_counts.iter().find(|&&c| c > self.n_supplies) {
            return bad(format!("cannot fail {c} of {} supplies", self.n_supplies));
        }
        Ok(())
    }
}

const LANE_INSTANCE: u64 = 0xFFFF_FFFF;
const LANE_RANDOM_BASELINE: u64 = 0xFFFF_FFFE;
const LANE_REDUCE: u64 = 0xFFFF_FFFD;

/// RNG for `(seed, realization, lane)`; trials use their index as the lane.
pub fn stream(seed: u64, realization: usize, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((realization as u64) << 32) | (lane & 0xFFFF_FFFF));
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub resources: Vec<f64>,
    pub loads: Vec<f64>,
    pub cost_model: CostModel,
}

fn draw<R: Rng>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Uniform draws in the configured ranges, redrawn until resources exceed
/// loads.
pub fn generate_instance(config: &ExperimentConfig, realization: usize) -> Result<Instance> {
    config.validate()?;
    let mut rng = stream(config.seed, realization, LANE_INSTANCE);
    let (s, d) = (config.n_supplies, config.n_demands);
    for _ in 0..1000 {
        let resources: Vec<f64> = (0..s).map(|_| draw(&mut rng, config.resource_range)).collect();
        let loads: Vec<f64> = (0..d).map(|_| draw(&mut rng, config.load_range)).collect();
        if resources.iter().sum::<f64>() <= loads.iter().sum::<f64>() {
            continue;
        }
        let alpha = (0..s * d).map(|_| draw(&mut rng, config.cost_alpha_range)).collect();
        let beta = (0..s * d).map(|_| draw(&mut rng, config.cost_beta_range)).collect();
        let cost_model = CostModel::from_flat(s, d, alpha, beta).map_err(|e| Error::Config(e.to_string()))?;
        return Ok(Instance {
            resources,
            loads,
            cost_model,
        });
    }
    Err(Error::Config(
        "1000 consecutive draws had total load above total resource".into(),
    ))
}

fn checked(network: Network) -> Result<Network> {
    let report = network.check_stability();
    if report.is_stable() {
        Ok(network)
    } else {
        Err(Error::Infeasible(format!("generated allocation is unstable: {report:?}")))
    }
}

/// The three allocations compared throughout: the robust design and both
/// baselines.
fn baseline_networks(config: &ExperimentConfig, inst: &Instance, realization: usize) -> Result<(Network, Network)> {
    let ga = greedy_allocate(&inst.resources, &inst.loads, config.freeze_fraction)?;
    let mut rng = stream(config.seed, realization, LANE_RANDOM_BASELINE);
    let ra = random_allocate_with(&inst.resources, &inst.loads, config.freeze_fraction, &mut rng)?;
    Ok((
        checked(Network::new(inst.resources.clone(), inst.loads.clone(), ga)?)?,
        checked(Network::new(inst.resources.clone(), inst.loads.clone(), ra)?)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Optimal,
    Greedy,
    Random,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Optimal, Method::Greedy, Method::Random];

    pub fn name(self) -> &'static str {
        match self {
            Method::Optimal => "optimal",
            Method::Greedy => "greedy",
            Method::Random => "random",
        }
    }
}

/// A table cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Text(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_string)).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    /// Array of row objects keyed by column name.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.clone(), serde_json::to_value(v).expect("cells serialize")))
                    .collect::<serde_json::Map<_, _>>();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }

    pub fn write_to(&self, dir: &Path, format: Format) -> Result<PathBuf> {
        let path = dir.join(format!("{}.{}", self.name, format.extension()));
        let file = std::fs::File::create(&path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut out = std::io::BufWriter::new(file);
        match format {
            Format::Csv => self.write_csv(&mut out)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &self.to_json()).map_err(|e| Error::Parse(e.to_string()))?;
                out.write_all(b"\n").map_err(|e| Error::Parse(e.to_string()))?;
            }
        }
        out.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub realization: usize,
    pub method: Method,
    pub mtrf_uniform: f64,
    pub mtlf_uniform: f64,
    pub mtrf_proportional: f64,
    pub mtlf_proportional: f64,
}

impl RobustnessRow {
    fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::MtrfUniform => self.mtrf_uniform,
            Metric::MtlfUniform => self.mtlf_uniform,
            Metric::MtrfProportional => self.mtrf_proportional,
            Metric::MtlfProportional => self.mtlf_proportional,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MtrfUniform,
    MtlfUniform,
    MtrfProportional,
    MtlfProportional,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::MtrfUniform,
        Metric::MtlfUniform,
        Metric::MtrfProportional,
        Metric::MtlfProportional,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::MtrfUniform => "mtrf_uniform",
            Metric::MtlfUniform => "mtlf_uniform",
            Metric::MtrfProportional => "mtrf_proportional",
            Metric::MtlfProportional => "mtlf_proportional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainRow {
    pub metric: Metric,
    /// Mean of `100 (optimal - greedy) / greedy` over realizations.
    pub gain_vs_greedy: f64,
    pub gain_vs_random: f64,
    /// Average of the two gains.
    pub mean_gain: f64,
    /// Share of realizations where the optimal design is at least as good
    /// as both baselines.
    pub optimal_not_worse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessResults {
    pub rows: Vec<RobustnessRow>,
    pub gains: Vec<GainRow>,
}

fn robustness_rows(config: &ExperimentConfig, r: usize) -> Result<[RobustnessRow; 3]> {
    let inst = generate_instance(config, r)?;
    let (_, unet) = robust::uniform_network(&inst.resources, &inst.loads, config.epsilon)?;
    let (_, pnet) = robust::proportional_network(&inst.resources, &inst.loads)?;
    let unet = checked(unet)?;
    let pnet = checked(pnet)?;
    let (ga, ra) = baseline_networks(config, &inst, r)?;
    let row = |method, u: &Network, p: &Network| -> Result<RobustnessRow> {
        Ok(RobustnessRow {
            realization: r,
            method,
            mtrf_uniform: robust::mtrf_uniform(u)?,
            mtlf_uniform: robust::mtlf_uniform(u)?,
            mtrf_proportional: robust::mtrf_proportional(p)?,
            mtlf_proportional: robust::mtlf_proportional(p)?,
        })
    };
    Ok([
        row(Method::Optimal, &unet, &pnet)?,
        row(Method::Greedy, &ga, &ga)?,
        row(Method::Random, &ra, &ra)?,
    ])
}

fn pct_gain(ours: f64, base: f64) -> f64 {
    100.0 * (ours - base) / base
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// MTRF/MTLF of the optimal designs against both baselines under both
/// regimes.
pub fn run_robustness_comparison(config: &ExperimentConfig, exec: Execution) -> Result<RobustnessResults> {
    config.validate()?;
    let per = exec.try_map_indices(config.n_realizations, |r| robustness_rows(config, r))?;
    let gains = Metric::ALL
        .iter()
        .map(|&m| {
            let vs = |i: usize| mean(per.iter().map(|rows| pct_gain(rows[0].metric(m), rows[i].metric(m))));
            let (g, r) = (vs(1), vs(2));
            let wins = per
                .iter()
                .filter(|rows| rows[0].metric(m) + 1e-9 >= rows[1].metric(m).max(rows[2].metric(m)))
                .count();
            GainRow {
                metric: m,
                gain_vs_greedy: g,
                gain_vs_random: r,
                mean_gain: (g + r) / 2.0,
                optimal_not_worse: wins as f64 / per.len().max(1) as f64,
            }
        })
        .collect();
    Ok(RobustnessResults {
        rows: per.into_iter().flatten().collect(),
        gains,
    })
}

impl RobustnessResults {
    pub fn tables(&self) -> Vec<Table> {
        let mut rows = Table::new(
            "robustness",
            &["realization", "method", "mtrf_uniform", "mtlf_uniform", "mtrf_proportional", "mtlf_proportional"],
        );
        for r in &self.rows {
            rows.push(vec![
                r.realization.into(),
                r.method.name().into(),
                r.mtrf_uniform.into(),
                r.mtlf_uniform.into(),
                r.mtrf_proportional.into(),
                r.mtlf_proportional.into(),
            ]);
        }
        let mut gains = Table::new(
            "robustness_gains",
            &["metric", "gain_vs_greedy_pct", "gain_vs_random_pct", "mean_gain_pct", "optimal_not_worse"],
        );
        for g in &self.gains {
            gains.push(vec![
                g.metric.name().into(),
                g.gain_vs_greedy.into(),
                g.gain_vs_random.into(),
                g.mean_gain.into(),
                g.optimal_not_worse.into(),
            ]);
        }
        vec![rows, gains]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRow {
    pub realization: usize,
    pub min_feasible: f64,
    /// Cheapest allocation with the robust design's row totals.
    pub cost_effective: f64,
    pub greedy: f64,
    pub random: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionRow {
    pub realization: usize,
    pub method: Method,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    pub mtrf_uniform_before: f64,
    pub mtrf_uniform_after: f64,
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostResults {
    pub rows: Vec<CostRow>,
    pub reductions: Vec<ReductionRow>,
}

impl CostResults {
    /// Mean of `100 (base - cost_effective) / base`.
    pub fn mean_saving_vs(&self, method: Method) -> f64 {
        mean(self.rows.iter().map(|r| {
            let base = match method {
                Method::Greedy => r.greedy,
                Method::Random => r.random,
                Method::Optimal => r.cost_effective,
            };
            100.0 * (base - r.cost_effective) / base
        }))
    }

    pub fn share_cheaper_than(&self, method: Method) -> f64 {
        let n = self
            .rows
            .iter()
            .filter(|r| match method {
                Method::Greedy => r.cost_effective < r.greedy,
                Method::Random => r.cost_effective < r.random,
                Method::Optimal => false,
            })
            .count();
        n as f64 / self.rows.len().max(1) as f64
    }

    /// Mean cost per iteration for each method; shorter traces are held at
    /// their last value.
    pub fn mean_traces(&self) -> Vec<(Method, Vec<f64>)> {
        Method::ALL
            .iter()
            .map(|&m| {
                let traces: Vec<&Vec<f64>> = self.reductions.iter().filter(|r| r.method == m).map(|r| &r.trace).collect();
                let len = traces.iter().map(|t| t.len()).max().unwrap_or(0);
                let avg = (0..len)
                    .map(|i| mean(traces.iter().map(|t| t[i.min(t.len() - 1)])))
                    .collect();
                (m, avg)
            })
            .collect()
    }

    pub fn tables(&self) -> Vec<Table> {
        let mut rows = Table::new(
            "cost",
            &["realization", "min_feasible_cost", "cost_effective_cost", "greedy_cost", "random_cost"],
        );
        for r in &self.rows {
            rows.push(vec![
                r.realization.into(),
                r.min_feasible.into(),
                r.cost_effective.into(),
                r.greedy.into(),
                r.random.into(),
            ]);
        }
        let mut red = Table::new(
            "cost_reduction",
            &[
                "realization",
                "method",
                "initial_cost",
                "final_cost",
                "iterations",
                "mtrf_uniform_before",
                "mtrf_uniform_after",
            ],
        );
        for r in &self.reductions {
            red.push(vec![
                r.realization.into(),
                r.method.name().into(),
                r.initial_cost.into(),
                r.final_cost.into(),
                r.iterations.into(),
                r.mtrf_uniform_before.into(),
                r.mtrf_uniform_after.into(),
            ]);
        }
        let mut trace = Table::new("cost_trace", &["method", "iteration", "mean_cost"]);
        for (m, t) in self.mean_traces() {
            for (i, c) in t.iter().enumerate() {
                trace.push(vec![m.name().into(), i.into(), (*c).into()]);
            }
        }
        let mut summary = Table::new("cost_summary", &["baseline", "mean_saving_pct", "share_cost_effective_cheaper"]);
        for m in [Method::Greedy, Method::Random] {
            summary.push(vec![
                m.name().into(),
                self.mean_saving_vs(m).into(),
                self.share_cheaper_than(m).into(),
            ]);
        }
        vec![rows, red, trace, summary]
    }
}

fn reduce(config: &ExperimentConfig, inst: &Instance, net: &Network, r: usize, method: Method, floor: f64) -> Result<ReductionRow> {
    let mut rng = stream(config.seed, r, LANE_REDUCE);
    let params = ReduceParams {
        epsilon: config.epsilon,
        objective_cost: floor,
        regime: Regime::Uniform,
        seed: rng.gen(),
        max_iterations: Some(config.reduce_iterations),
    };
    let red = match cost::reduce_cost(net, &inst.cost_model, &params) {
        Ok(red) => red,
        Err(ReduceError::Stalled { best_effort, .. }) => *best_effort,
        Err(ReduceError::Invalid(e)) => return Err(e),
    };
    let after = checked(net.with_allocation(red.allocation.clone())?)?;
    Ok(ReductionRow {
        realization: r,
        method,
        initial_cost: red.cost_trace[0],
        final_cost: red.final_cost(),
        iterations: red.iterations,
        mtrf_uniform_before: robust::mtrf_uniform(net)?,
        mtrf_uniform_after: robust::mtrf_uniform(&after)?,
        trace: red.cost_trace,
    })
}

fn cost_realization(config: &ExperimentConfig, r: usize) -> Result<(CostRow, Vec<ReductionRow>)> {
    let inst = generate_instance(config, r)?;
    let (design, unet) = robust::uniform_network(&inst.resources, &inst.loads, config.epsilon)?;
    let unet = checked(unet)?;
    let (floor, _) = cost::min_feasible_cost(&inst.resources, &inst.loads, &inst.cost_model, &config.solver)?;
    let effective = cost::solve_p2(&design.offered_totals, &inst.loads, &inst.cost_model, &config.solver)?;
    let (ga, ra) = baseline_networks(config, &inst, r)?;
    let row = CostRow {
        realization: r,
        min_feasible: floor,
        cost_effective: effective.cost,
        greedy: cost::total_cost(ga.allocation(), &inst.cost_model)?,
        random: cost::total_cost(ra.allocation(), &inst.cost_model)?,
    };
    let reductions = vec![
        reduce(config, &inst, &unet, r, Method::Optimal, floor)?,
        reduce(config, &inst, &ga, r, Method::Greedy, floor)?,
        reduce(config, &inst, &ra, r, Method::Random, floor)?,
    ];
    Ok((row, reductions))
}

/// Link costs of the cost-effective design against both baselines, plus
/// cost-reduction traces from the robust design and the baselines.
pub fn run_cost_comparison(config: &ExperimentConfig, exec: Execution) -> Result<CostResults> {
    config.validate()?;
    let per = exec.try_map_indices(config.n_realizations, |r| cost_realization(config, r))?;
    let mut rows = Vec::with_capacity(per.len());
    let mut reductions = Vec::with_capacity(per.len() * 3);
    for (row, red) in per {
        rows.push(row);
        reductions.extend(red);
    }
    Ok(CostResults { rows, reductions })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MitigationRow {
    pub realization: usize,
    pub trial: usize,
    pub initial_failures: usize,
    pub budget_share: f64,
    pub unmitigated_supplies: usize,
    pub unmitigated_demands: usize,
    pub mitigated_supplies: usize,
    pub mitigated_demands: usize,
    pub intentional_failures: usize,
}

impl MitigationRow {
    pub fn unmitigated(&self) -> usize {
        self.unmitigated_supplies + self.unmitigated_demands
    }

    pub fn mitigated(&self) -> usize {
        self.mitigated_supplies + self.mitigated_demands
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MitigationSummaryRow {
    pub initial_failures: usize,
    pub budget_share: f64,
    pub unmitigated_supplies: f64,
    pub unmitigated_demands: f64,
    pub mitigated_supplies: f64,
    pub mitigated_demands: f64,
    pub intentional_failures: f64,
    /// Trials where mitigation ended with fewer survivors.
    pub dominance_violations: usize,
}

impl MitigationSummaryRow {
    pub fn mitigated_total(&self) -> f64 {
        self.mitigated_supplies + self.mitigated_demands
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MitigationResults {
    pub rows: Vec<MitigationRow>,
}

impl MitigationResults {
    pub fn summary(&self) -> Vec<MitigationSummaryRow> {
        let mut keys: Vec<(usize, f64)> = self.rows.iter().map(|r| (r.initial_failures, r.budget_share)).collect();
        keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        keys.dedup();
        keys.into_iter()
            .map(|(f, share)| {
                let sel: Vec<&MitigationRow> = self
                    .rows
                    .iter()
                    .filter(|r| r.initial_failures == f && r.budget_share == share)
                    .collect();
                let avg = |g: fn(&MitigationRow) -> usize| mean(sel.iter().map(|r| g(r) as f64));
                MitigationSummaryRow {
                    initial_failures: f,
                    budget_share: share,
                    unmitigated_supplies: avg(|r| r.unmitigated_supplies),
                    unmitigated_demands: avg(|r| r.unmitigated_demands),
                    mitigated_supplies: avg(|r| r.mitigated_supplies),
                    mitigated_demands: avg(|r| r.mitigated_demands),
                    intentional_failures: avg(|r| r.intentional_failures),
                    dominance_violations: sel.iter().filter(|r| r.mitigated() < r.unmitigated()).count(),
                }
            })
            .collect()
    }

    /// Mean surviving nodes over every trial run with `share`.
    pub fn mean_survivors(&self, share: f64) -> f64 {
        mean(self.rows.iter().filter(|r| r.budget_share == share).map(|r| r.mitigated() as f64))
    }

    pub fn tables(&self) -> Vec<Table> {
        let mut rows = Table::new(
            "mitigation",
            &[
                "realization",
                "trial",
                "initial_failures",
                "budget_share",
                "unmitigated_supplies",
                "unmitigated_demands",
                "mitigated_supplies",
                "mitigated_demands",
                "intentional_failures",
            ],
        );
        for r in &self.rows {
            rows.push(vec![
                r.realization.into(),
                r.trial.into(),
                r.initial_failures.into(),
                r.budget_share.into(),
                r.unmitigated_supplies.into(),
                r.unmitigated_demands.into(),
                r.mitigated_supplies.into(),
                r.mitigated_demands.into(),
                r.intentional_failures.into(),
            ]);
        }
        let mut summary = Table::new(
            "mitigation_summary",
            &[
                "initial_failures",
                "budget_share",
                "mean_unmitigated_supplies",
                "mean_unmitigated_demands",
                "mean_mitigated_supplies",
                "mean_mitigated_demands",
                "mean_intentional_failures",
                "dominance_violations",
            ],
        );
        for s in self.summary() {
            summary.push(vec![
                s.initial_failures.into(),
                s.budget_share.into(),
                s.unmitigated_supplies.into(),
                s.unmitigated_demands.into(),
                s.mitigated_supplies.into(),
                s.mitigated_demands.into(),
                s.intentional_failures.into(),
                s.dominance_violations.into(),
            ]);
        }
        vec![rows, summary]
    }
}

fn mitigation_trial(config: &ExperimentConfig, net: &Network, r: usize, t: usize) -> Result<Vec<MitigationRow>> {
    let mut rng = stream(config.seed, r, t as u64);
    let regime = config.mitigation_regime;
    let mut out = Vec::with_capacity(config.initial_failure_counts.len() * config.budget_fractions.len());
    for &count in &config.initial_failure_counts {
        let ids = sample(&mut rng, net.n_supplies(), count).into_vec();
        let spec = FluctuationSpec::SupplyInternalFailure { ids };
        let seed: u64 = rng.gen();
        for &share in &config.budget_fractions {
            let budget = MitigationBudget::from_share(share, net.n_demands(), net.total_load())?;
            let params = MitigationParams {
                regime,
                seed,
                ..MitigationParams::default()
            };
            let outcome = mitigate(net, &spec, regime, &budget, &params)?;
            let fs = &outcome.trace.final_state;
            out.push(MitigationRow {
                realization: r,
                trial: t,
                initial_failures: count,
                budget_share: share,
                unmitigated_supplies: outcome.unmitigated.0,
                unmitigated_demands: outcome.unmitigated.1,
                mitigated_supplies: fs.surviving_supplies(),
                mitigated_demands: fs.surviving_demands(),
                intentional_failures: outcome.intentional_failures(),
            });
        }
    }
    Ok(out)
}

/// Survivors of random initial supply failures, with and without
/// mitigation, for every budget share.
pub fn run_mitigation_study(config: &ExperimentConfig, exec: Execution) -> Result<MitigationResults> {
    config.validate()?;
    let nets = exec.try_map_indices(config.n_realizations, |r| -> Result<Network> {
        let inst = generate_instance(config, r)?;
        match config.mitigation_network {
            Method::Optimal => checked(robust::uniform_network(&inst.resources, &inst.loads, config.epsilon)?.1),
            Method::Greedy => Ok(baseline_networks(config, &inst, r)?.0),
            Method::Random => Ok(baseline_networks(config, &inst, r)?.1),
        }
    })?;
    let trials = config.n_trials_per_realization;
    let per = exec.try_map_indices(config.n_realizations * trials, |i| {
        mitigation_trial(config, &nets[i / trials], i / trials, i % trials)
    })?;
    Ok(MitigationResults {
        rows: per.into_iter().flatten().collect(),
    })
}

/// Describes a run for reproduction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub crate_version: &'static str,
    pub config: ExperimentConfig,
    pub execution: Execution,
    pub parallel_available: bool,
    pub format: Format,
    pub tables: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig, execution: Execution, format: Format, tables: &[Table]) -> Self {
        Self {
            command: command.to_string(),
            crate_version: env!("CARGO_PKG_VERSION"),
            config: config.clone(),
            execution,
            parallel_available: Execution::parallel_available(),
            format,
            tables: tables.iter().map(|t| t.name.clone()).collect(),
        }
    }
}
