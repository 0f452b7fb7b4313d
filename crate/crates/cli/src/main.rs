use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dsnet::cascade::{self, FluctuationSpec};
use dsnet::cost::{self, ReduceError, ReduceParams};
use dsnet::experiments::{self, ExperimentConfig, Format, RunManifest, Scale, Table};
use dsnet::io::{self, NetworkFile};
use dsnet::mitigation::{self, MitigationBudget, MitigationParams};
use dsnet::par::Execution;
use dsnet::{robust, Error, Network, Regime};

#[derive(Parser)]
#[command(name = "dsnet", version, about = "Robust allocation, cascades and mitigation in demand-supply networks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON file overriding fields of the scale preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "desk")]
    scale: Scale,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, default_value = "csv")]
    format: Format,
    /// Run realizations on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one random instance and its cost model.
    Generate {
        #[arg(long, default_value_t = 0)]
        realization: usize,
    },
    /// Build the most robust allocation for an instance.
    Design {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, default_value = "uniform")]
        regime: Regime,
        /// Spreading amount for the uniform design.
        #[arg(long, default_value_t = robust::DEFAULT_EPSILON)]
        epsilon: f64,
    },
    /// Cost of an allocation, its cheapest equivalent and a cost-reduction run.
    Cost {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        cost_model: PathBuf,
        /// Target cost; defaults to the minimum feasible cost.
        #[arg(long)]
        objective: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        #[arg(long, default_value = "uniform")]
        regime: Regime,
    },
    /// Run a cascade from a fluctuation.
    Cascade {
        #[arg(long)]
        network: PathBuf,
        /// Fluctuation as a JSON file or inline JSON object.
        #[arg(long)]
        fluctuation: String,
        #[arg(long, default_value = "uniform")]
        regime: Regime,
    },
    /// Run a cascade with the mitigation controller.
    Mitigate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        fluctuation: String,
        #[arg(long, default_value = "uniform")]
        regime: Regime,
        /// Budget as a share of D and of total load.
        #[arg(long, conflicts_with_all = ["gamma", "upsilon"])]
        budget_share: Option<f64>,
        #[arg(long, default_value_t = 0)]
        gamma: usize,
        #[arg(long, default_value_t = 0.0)]
        upsilon: f64,
    },
    /// MTRF/MTLF of the optimal designs against the greedy and random baselines.
    CompareRobustness,
    /// Cost of the cost-effective design against the baselines, with reduction traces.
    CompareCost,
    /// Survivors with and without mitigation over random supply failures.
    StudyMitigation,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Infeasible(_)) => 3,
        Some(Error::Convergence { .. }) => 4,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

impl Common {
    fn experiment_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                ExperimentConfig::from_json_overlay(self.scale, &text)?
            }
            None => ExperimentConfig::preset(self.scale),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }

    fn write_tables(&self, command: &str, cfg: &ExperimentConfig, tables: &[Table]) -> Result<()> {
        let dir = self.out_dir()?;
        for t in tables {
            let path = t.write_to(dir, self.format)?;
            eprintln!("wrote {}", path.display());
        }
        let manifest = RunManifest::new(command, cfg, self.execution(), self.format, tables);
        write_json(&dir.join("manifest.json"), &manifest)
    }

    fn write_table(&self, table: &Table) -> Result<()> {
        let path = table.write_to(self.out_dir()?, self.format)?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn read_fluctuation(arg: &str) -> Result<FluctuationSpec> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| Error::Parse(format!("{arg}: {e}")))?
    };
    Ok(serde_json::from_str(&text).map_err(|e| Error::Parse(format!("fluctuation: {e}")))?)
}

fn allocated(path: &Path) -> Result<Network> {
    let file = io::read_network_file(path)?;
    if file.allocation.is_none() {
        return Err(Error::Config(format!("{} has no allocation; run `design` first", path.display())).into());
    }
    let net = file.into_network()?;
    let report = net.check_stability();
    if !report.is_stable() {
        return Err(Error::InvalidValue(format!("allocation in {} is unstable: {report:?}", path.display())).into());
    }
    Ok(net)
}

fn metrics_table(net: &Network) -> Result<Table> {
    let mut t = Table::new("metrics", &["metric", "value"]);
    t.push(vec!["mtrf_uniform".into(), robust::mtrf_uniform(net)?.into()]);
    t.push(vec!["mtlf_uniform".into(), robust::mtlf_uniform(net)?.into()]);
    t.push(vec!["mtrf_proportional".into(), robust::mtrf_proportional(net)?.into()]);
    t.push(vec!["mtlf_proportional".into(), robust::mtlf_proportional(net)?.into()]);
    Ok(t)
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    match cli.command {
        Command::Generate { realization } => {
            let cfg = c.experiment_config()?;
            let inst = experiments::generate_instance(&cfg, realization)?;
            let dir = c.out_dir()?;
            io::write_network_file(&dir.join("instance.json"), &NetworkFile::instance(&inst.resources, &inst.loads))?;
            io::write_cost_model(&dir.join("cost_model.json"), &inst.cost_model)?;
            eprintln!("wrote instance.json and cost_model.json to {}", dir.display());
        }
        Command::Design { network, regime, epsilon } => {
            let file = io::read_network_file(&network)?;
            let net = match regime {
                Regime::Uniform => robust::uniform_network(&file.supplies, &file.demands, epsilon)?.1,
                Regime::Proportional => robust::proportional_network(&file.supplies, &file.demands)?.1,
            };
            let report = net.check_stability();
            if !report.is_stable() {
                return Err(Error::Infeasible(format!("designed allocation is unstable: {report:?}")).into());
            }
            io::write_network(&c.out_dir()?.join("design.json"), &net)?;
            c.write_table(&metrics_table(&net)?)?;
        }
        Command::Cost {
            network,
            cost_model,
            objective,
            epsilon,
            iterations,
            regime,
        } => {
            let net = allocated(&network)?;
            let model = io::read_cost_model(&cost_model)?;
            let cfg = c.experiment_config()?;
            let current = cost::total_cost(net.allocation(), &model)?;
            let (floor, _) = cost::min_feasible_cost(net.resources(), net.loads(), &model, &cfg.solver)?;
            let effective = cost::solve_p2(&net.allocation().row_sums(), net.loads(), &model, &cfg.solver)?;
            let params = ReduceParams {
                epsilon,
                objective_cost: objective.unwrap_or(floor),
                regime,
                seed: cfg.seed,
                max_iterations: Some(iterations),
            };
            let red = match cost::reduce_cost(&net, &model, &params) {
                Ok(r) => r,
                Err(ReduceError::Stalled { objective, best_effort }) => {
                    eprintln!("warning: cost reduction stalled above objective {objective}");
                    *best_effort
                }
                Err(ReduceError::Invalid(e)) => return Err(e.into()),
            };
            let reduced = net.with_allocation(red.allocation.clone())?;
            let mut summary = Table::new("cost", &["quantity", "value"]);
            summary.push(vec!["current_cost".into(), current.into()]);
            summary.push(vec!["min_feasible_cost".into(), floor.into()]);
            summary.push(vec!["cost_effective_cost".into(), effective.cost.into()]);
            summary.push(vec!["reduced_cost".into(), red.final_cost().into()]);
            summary.push(vec!["reduce_iterations".into(), red.iterations.into()]);
            summary.push(vec!["mtrf_uniform_before".into(), robust::mtrf_uniform(&net)?.into()]);
            summary.push(vec!["mtrf_uniform_after".into(), robust::mtrf_uniform(&reduced)?.into()]);
            let mut trace = Table::new("cost_trace", &["iteration", "cost"]);
            for (i, v) in red.cost_trace.iter().enumerate() {
                trace.push(vec![i.into(), (*v).into()]);
            }
            c.write_table(&summary)?;
            c.write_table(&trace)?;
            let dir = c.out_dir()?;
            io::write_network(&dir.join("cost_effective.json"), &net.with_allocation(effective.allocation)?)?;
            io::write_network(&dir.join("reduced.json"), &reduced)?;
        }
        Command::Cascade {
            network,
            fluctuation,
            regime,
        } => {
            let net = allocated(&network)?;
            let spec = read_fluctuation(&fluctuation)?;
            let trace = cascade::run_to_fixpoint(&net, &spec, regime)?;
            let path = c.out_dir()?.join("cascade.jsonl");
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            trace.write_jsonl(BufWriter::new(file))?;
            eprintln!("wrote {}", path.display());
            println!("{}", serde_json::to_string(&trace.summary())?);
        }
        Command::Mitigate {
            network,
            fluctuation,
            regime,
            budget_share,
            gamma,
            upsilon,
        } => {
            let net = allocated(&network)?;
            let spec = read_fluctuation(&fluctuation)?;
            let budget = match budget_share {
                Some(s) => MitigationBudget::from_share(s, net.n_demands(), net.total_load())?,
                None => MitigationBudget::new(gamma, upsilon)?,
            };
            let params = MitigationParams {
                regime,
                seed: c.seed.unwrap_or(0),
                ..MitigationParams::default()
            };
            let outcome = mitigation::mitigate(&net, &spec, regime, &budget, &params)?;
            let dir = c.out_dir()?;
            let path = dir.join("mitigation.jsonl");
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            outcome.trace.write_jsonl(BufWriter::new(file))?;
            eprintln!("wrote {}", path.display());
            let mut actions = Table::new("actions", &["round", "action", "node_ids", "magnitude", "remaining_budget"]);
            for a in &outcome.actions {
                let ids = a.node_ids.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
                actions.push(vec![
                    a.round.into(),
                    serde_json::to_value(a.action)?.as_str().unwrap_or_default().into(),
                    ids.as_str().into(),
                    a.magnitude.into(),
                    a.remaining_budget.into(),
                ]);
            }
            c.write_table(&actions)?;
            let s = outcome.trace.summary();
            println!(
                "{}",
                serde_json::json!({
                    "mitigated": s,
                    "unmitigated": {"surviving_supplies": outcome.unmitigated.0, "surviving_demands": outcome.unmitigated.1},
                    "intentional_failures": outcome.intentional_failures(),
                })
            );
        }
        Command::CompareRobustness => {
            let cfg = c.experiment_config()?;
            let res = experiments::run_robustness_comparison(&cfg, c.execution())?;
            c.write_tables("compare-robustness", &cfg, &res.tables())?;
        }
        Command::CompareCost => {
            let cfg = c.experiment_config()?;
            let res = experiments::run_cost_comparison(&cfg, c.execution())?;
            c.write_tables("compare-cost", &cfg, &res.tables())?;
        }
        Command::StudyMitigation => {
            let cfg = c.experiment_config()?;
            let res = experiments::run_mitigation_study(&cfg, c.execution())?;
            c.write_tables("study-mitigation", &cfg, &res.tables())?;
        }
    }
    Ok(())
}
