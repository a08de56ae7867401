//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a solver finds the problem infeasible
//! (or fails numerically), 2 on usage errors and unreadable input.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::ara::{ara_solve, AraConfig};
use crate::chain::{inject_fault, run_workflow, verify_transaction, Fault, WorkflowSolver};
use crate::error::{Error, Result};
use crate::harness::{
    aggregate, generate_mining_scenario, generate_nfv_scenario, run_sweep, write_aggregate_csv, write_detail_csv, Axis,
    MiningScenarioParams, NfvScenarioParams, Solver, SweepConfig,
};
use crate::hura::hura_solve;
use crate::milp::{solve_exact, ExactLimits, ExactStatus};
use crate::mining::{mo_solve, MiningTask, RewardParams};
use crate::model::{check_feasibility, compute_cost, compute_energy, NfvInstance, PlacementSolution, DEFAULT_TOL, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "nfvchain", version, about = "SFC placement and mining offload experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Nfv,
    Mining,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Exact,
    Ara,
    Hura,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    Cost,
    Capacity,
    Delay,
    Payment,
}

#[derive(Debug, clap::Args)]
struct ScenarioArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    n_servers: Option<usize>,
    #[arg(long)]
    n_sfcs: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Delay budget of every SFC in seconds.
    #[arg(long)]
    t_th: Option<f64>,
    #[arg(long)]
    demand_scale: Option<f64>,
    /// Drop the distinct-server constraint.
    #[arg(long)]
    no_c2: bool,
}

impl ScenarioArgs {
    fn params(&self) -> NfvScenarioParams {
        let d = NfvScenarioParams::default();
        NfvScenarioParams {
            seed: self.seed,
            n_servers: self.n_servers.unwrap_or(d.n_servers),
            n_sfcs: self.n_sfcs.unwrap_or(d.n_sfcs),
            alpha: self.alpha.unwrap_or(d.alpha),
            t_th: self.t_th.unwrap_or(d.t_th),
            demand_scale: self.demand_scale.unwrap_or(d.demand_scale),
            enforce_distinct_servers: !self.no_c2,
            ..d
        }
    }
}

#[derive(Debug, clap::Args)]
struct MiningArgs {
    #[arg(long)]
    n_miners: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    /// T_mine in seconds.
    #[arg(long)]
    t_mine: Option<f64>,
}

impl MiningArgs {
    fn params(&self, seed: u64) -> MiningScenarioParams {
        let d = MiningScenarioParams::default();
        MiningScenarioParams {
            seed,
            n_miners: self.n_miners.unwrap_or(d.n_miners),
            gamma: self.gamma.unwrap_or(d.gamma),
            t_mine: self.t_mine.unwrap_or(d.t_mine),
            ..d
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a scenario and write it as JSON.
    Generate {
        #[arg(long, value_enum, default_value = "nfv")]
        kind: Kind,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        mining: MiningArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a placement instance and write the solution as JSON.
    Solve {
        /// Instance JSON; a scenario is generated from the flags when absent.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "hura")]
        solver: SolverArg,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        timeout_s: Option<f64>,
        /// Also write the ARA iteration trace (CSV) here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one scenario parameter and write per-snapshot and mean CSVs.
    Sweep {
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values; a default grid is used when absent.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Repeat to run several solvers.
        #[arg(long, value_enum)]
        solver: Vec<SolverArg>,
        #[arg(long, default_value_t = 100)]
        snapshots: usize,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        mining: MiningArgs,
        #[arg(long)]
        timeout_s: Option<f64>,
        /// Record wall-clock runtimes (makes the output non-reproducible).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        threads: Option<usize>,
        /// Detail CSV; the aggregate goes next to it with an `.aggregate.csv` suffix.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the contract and mining workflow and write the event log.
    Workflow {
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "hura")]
        solver: SolverArg,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        mining: MiningArgs,
        /// Tamper with one transaction and report the miners' verdict.
        #[arg(long, value_enum)]
        fault: Option<FaultArg>,
        /// Also write the payment and reward ledger (CSV) here.
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the mining offload problem and write the weights as CSV.
    Mine {
        /// Mining scenario JSON; generated from the flags when absent.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        mining: MiningArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Mining scenario document.
#[derive(Debug, Serialize, Deserialize)]
pub struct MiningDoc {
    pub schema_version: u32,
    pub gamma: f64,
    pub reward: RewardParams,
    pub tasks: Vec<MiningTask>,
}

#[derive(Debug, Serialize)]
struct SolveDoc<'a> {
    schema_version: u32,
    solver: &'static str,
    status: &'static str,
    objective: f64,
    energy: f64,
    cost: f64,
    accepted: Vec<u32>,
    rejected: Vec<u32>,
    feasible: bool,
    solution: &'a PlacementSolution,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn write_text(path: &Option<PathBuf>, text: &str) -> Result<()> {
    let mut w = output(path)?;
    w.write_all(text.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn load_instance(path: &Option<PathBuf>, scenario: &ScenarioArgs) -> Result<NfvInstance> {
    match path {
        Some(p) => {
            let mut inst = NfvInstance::from_json(&std::fs::read_to_string(p)?)?;
            if scenario.no_c2 {
                inst.enforce_distinct_servers = false;
            }
            if let Some(a) = scenario.alpha {
                inst.alpha = a;
                inst.validate()?;
            }
            Ok(inst)
        }
        None => generate_nfv_scenario(&scenario.params()),
    }
}

fn load_mining(path: &Option<PathBuf>, seed: u64, args: &MiningArgs) -> Result<MiningDoc> {
    match path {
        Some(p) => {
            let doc: MiningDoc = serde_json::from_str(&std::fs::read_to_string(p)?)?;
            if doc.schema_version != SCHEMA_VERSION {
                return Err(Error::InvalidInstance(format!("unsupported schema version {}", doc.schema_version)));
            }
            Ok(MiningDoc { gamma: args.gamma.unwrap_or(doc.gamma), ..doc })
        }
        None => {
            let p = args.params(seed);
            Ok(MiningDoc { schema_version: SCHEMA_VERSION, gamma: p.gamma, reward: p.reward.clone(), tasks: generate_mining_scenario(&p)? })
        }
    }
}

fn timeout(s: Option<f64>) -> Result<Option<Duration>> {
    s.map(|v| Duration::try_from_secs_f64(v).map_err(|e| Error::Domain(format!("bad timeout: {e}")))).transpose()
}

fn solve(inst: &NfvInstance, solver: SolverArg, timeout_s: Option<f64>, trace: &Option<PathBuf>, out: &Option<PathBuf>) -> Result<()> {
    let all: Vec<u32> = inst.sfcs.iter().map(|s| s.user_id).collect();
    let (name, status, sol, accepted, rejected) = match solver {
        SolverArg::Hura => {
            let r = hura_solve(inst)?;
            ("hura", "heuristic", r.solution, r.accepted, r.rejected)
        }
        SolverArg::Ara => {
            let r = ara_solve(inst, &AraConfig::default())?;
            if let Some(p) = trace {
                r.trace.write_csv(BufWriter::new(File::create(p)?))?;
            }
            ("ara", "heuristic", r.solution, all, Vec::new())
        }
        SolverArg::Exact => {
            let r = solve_exact(inst, &ExactLimits { time_cap: timeout(timeout_s)?, ..ExactLimits::default() })?;
            let status = match r.status {
                ExactStatus::Optimal => "optimal",
                ExactStatus::LimitReached => "limit_reached",
                ExactStatus::Infeasible => return Err(Error::Infeasible("no placement satisfies the constraints".into())),
            };
            let sol = r.solution.ok_or_else(|| Error::Infeasible("search stopped before finding a placement".into()))?;
            ("exact", status, sol, all, Vec::new())
        }
    };
    let keep: Vec<usize> = accepted.iter().map(|&u| inst.sfc_index(u)).collect::<Result<_>>()?;
    let feasible = check_feasibility(&inst.subset(&keep), &sol.subset(&keep), DEFAULT_TOL)?.is_empty();
    let energy = compute_energy(inst, &sol)?;
    let cost = compute_cost(inst, &sol)?;
    let objective = inst.alpha * energy + (1.0 - inst.alpha) * cost;
    let doc = SolveDoc {
        schema_version: SCHEMA_VERSION,
        solver: name,
        status,
        objective,
        energy,
        cost,
        accepted,
        rejected,
        feasible,
        solution: &sol,
    };
    write_text(out, &serde_json::to_string_pretty(&doc)?)?;
    eprintln!(
        "{name}: objective {objective} energy {energy} cost {cost} active servers {} rejected {:?} feasible {feasible}",
        sol.active_servers(),
        doc.rejected
    );
    Ok(())
}

fn default_values(axis: Axis) -> Vec<f64> {
    match axis {
        Axis::NServers => vec![10.0, 12.0, 14.0, 16.0, 18.0, 20.0, 22.0, 24.0],
        Axis::NSfcs => vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
        Axis::VnfCount => vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
        Axis::ServerCapacity => vec![4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0],
        Axis::LinkBandwidth => vec![50.0, 100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0],
        Axis::TTh => vec![0.005, 0.0075, 0.01, 0.0125, 0.015, 0.0175, 0.02, 0.025],
        Axis::Alpha | Axis::Gamma => vec![0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0],
        Axis::DemandScale => vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
        Axis::NMiners => vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
        Axis::NParticipants => vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
        Axis::TMine => vec![1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 60.0, 600.0],
        Axis::ParticipantCapacity => vec![200.0, 300.0, 400.0, 500.0, 600.0, 800.0, 1000.0],
        Axis::MinerDemand => vec![30.0, 40.0, 50.0, 60.0, 80.0, 100.0, 120.0],
    }
}

fn solver_of(s: SolverArg) -> Solver {
    match s {
        SolverArg::Exact => Solver::Exact,
        SolverArg::Ara => Solver::Ara,
        SolverArg::Hura => Solver::Hura,
    }
}

fn aggregate_path(detail: &Path) -> PathBuf {
    let stem = detail.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "sweep".into());
    detail.with_file_name(format!("{stem}.aggregate.csv"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { kind, scenario, mining, out } => match kind {
            Kind::Nfv => write_text(&out, &generate_nfv_scenario(&scenario.params())?.to_json()?),
            Kind::Mining => {
                let doc = load_mining(&None, scenario.seed, &mining)?;
                write_text(&out, &serde_json::to_string_pretty(&doc)?)
            }
        },
        Command::Solve { instance, solver, scenario, timeout_s, trace, out } => {
            let inst = load_instance(&instance, &scenario)?;
            solve(&inst, solver, timeout_s, &trace, &out)
        }
        Command::Sweep { axis, values, solver, snapshots, scenario, mining, timeout_s, timing, threads, out } => {
            let axis: Axis = axis.parse()?;
            let values = if values.is_empty() { default_values(axis) } else { values };
            let mut cfg = SweepConfig::new(axis, values);
            if !solver.is_empty() {
                if axis.is_mining() {
                    return Err(Error::Domain("mining sweeps always use the offload solver".into()));
                }
                cfg.solvers = solver.into_iter().map(solver_of).collect();
            }
            cfg.snapshots = snapshots;
            cfg.base_seed = scenario.seed;
            cfg.nfv = scenario.params();
            cfg.mining = mining.params(scenario.seed);
            cfg.timing = timing;
            cfg.timeout = timeout(timeout_s)?;
            cfg.threads = threads;
            let rows = run_sweep(&cfg)?;
            let agg = aggregate(&rows);
            let mut w = output(&out)?;
            write_detail_csv(&rows, &mut w)?;
            w.flush()?;
            match &out {
                Some(p) => write_aggregate_csv(&agg, BufWriter::new(File::create(aggregate_path(p))?))?,
                None => {
                    println!();
                    write_aggregate_csv(&agg, std::io::stdout())?;
                }
            }
            Ok(())
        }
        Command::Workflow { instance, solver, scenario, mining, fault, ledger, out } => {
            let inst = load_instance(&instance, &scenario)?;
            let doc = load_mining(&None, scenario.seed, &mining)?;
            let solver = match solver {
                SolverArg::Ara => WorkflowSolver::Ara,
                SolverArg::Hura => WorkflowSolver::Hura,
                SolverArg::Exact => return Err(Error::Domain("the workflow runs ara or hura".into())),
            };
            let report = run_workflow(&inst, &doc.tasks, solver, &doc.reward, scenario.seed)?;
            let mut w = output(&out)?;
            report.write_event_log(&mut w)?;
            w.flush()?;
            if let Some(p) = &ledger {
                report.ledger.write_csv(BufWriter::new(File::create(p)?))?;
            }
            eprintln!(
                "block by miner {}: accepted {} orphaned {} rejected users {:?}",
                report.block.miner_id, report.block_verdict.accepted, report.block.orphaned, report.rejected_users
            );
            if let Some(f) = fault {
                let f = match f {
                    FaultArg::Cost => Fault::Cost,
                    FaultArg::Capacity => Fault::Capacity,
                    FaultArg::Delay => Fault::Delay,
                    FaultArg::Payment => Fault::Payment,
                };
                let tampered = inject_fault(&report, &inst, f)?;
                let v = verify_transaction(&tampered, &inst, &report.solution);
                eprintln!("tampered transaction {}: accepted {} rules {:?}", tampered.sequence, v.accepted, v.rules());
            }
            Ok(())
        }
        Command::Mine { instance, seed, mining, out } => {
            let doc = load_mining(&instance, seed, &mining)?;
            let sol = mo_solve(&doc.tasks, doc.gamma, &doc.reward)?;
            let mut w = output(&out)?;
            sol.write_csv(&doc.tasks, &mut w)?;
            w.flush()?;
            eprintln!("objective {} energy {} cost {}", sol.objective_value, sol.energy, sol.cost);
            Ok(())
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::InvalidInstance(_) | Error::Dimension(_) | Error::Json(_) | Error::Io(_) => 2,
        _ => 1,
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
