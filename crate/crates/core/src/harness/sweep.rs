use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::ara::{ara_solve, AraConfig};
use crate::error::{Error, Result};
use crate::hura::hura_solve;
use crate::milp::{solve_exact, ExactLimits, ExactStatus};
use crate::mining::{mo_solve, MiningTask, OffloadSolution};
use crate::model::{check_feasibility, compute_cost, compute_energy, sfc_delay, NfvInstance, PlacementSolution, DEFAULT_TOL};

use super::scenario::{generate_mining_scenario, generate_nfv_scenario, MiningScenarioParams, NfvScenarioParams};

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    NServers,
    NSfcs,
    /// Every SFC gets exactly this many VNFs.
    VnfCount,
    /// Upper end of the server capacity range (Mcycles/s), lower end scaled along.
    ServerCapacity,
    /// Upper end of the link bandwidth range (Mbit/s), lower end scaled along.
    LinkBandwidth,
    TTh,
    Alpha,
    DemandScale,
    NMiners,
    NParticipants,
    TMine,
    /// Upper end of the participant capacity range, lower end scaled along.
    ParticipantCapacity,
    /// Upper end of the task size range (bits), lower end scaled along.
    MinerDemand,
    Gamma,
}

impl Axis {
    pub const ALL: [Axis; 14] = [
        Axis::NServers,
        Axis::NSfcs,
        Axis::VnfCount,
        Axis::ServerCapacity,
        Axis::LinkBandwidth,
        Axis::TTh,
        Axis::Alpha,
        Axis::DemandScale,
        Axis::NMiners,
        Axis::NParticipants,
        Axis::TMine,
        Axis::ParticipantCapacity,
        Axis::MinerDemand,
        Axis::Gamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::NServers => "n_servers",
            Axis::NSfcs => "n_sfcs",
            Axis::VnfCount => "vnf_count",
            Axis::ServerCapacity => "server_capacity",
            Axis::LinkBandwidth => "link_bandwidth",
            Axis::TTh => "t_th",
            Axis::Alpha => "alpha",
            Axis::DemandScale => "demand_scale",
            Axis::NMiners => "n_miners",
            Axis::NParticipants => "n_participants",
            Axis::TMine => "t_mine",
            Axis::ParticipantCapacity => "participant_capacity",
            Axis::MinerDemand => "miner_demand",
            Axis::Gamma => "gamma",
        }
    }

    /// Mining axes drive the offloading problem, the rest the placement problem.
    pub fn is_mining(self) -> bool {
        matches!(self, Axis::NMiners | Axis::NParticipants | Axis::TMine | Axis::ParticipantCapacity | Axis::MinerDemand | Axis::Gamma)
    }

    fn count(v: f64) -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::Domain(format!("axis value {v} must be a positive integer")))
        }
    }

    pub fn apply_nfv(self, p: &mut NfvScenarioParams, v: f64) -> Result<()> {
        match self {
            Axis::NServers => p.n_servers = Self::count(v)?,
            Axis::NSfcs => p.n_sfcs = Self::count(v)?,
            Axis::VnfCount => {
                let j = Self::count(v)?;
                p.vnf_count_range = (j, j);
            }
            Axis::ServerCapacity => p.server_capacity_range = p.server_capacity_range.with_upper(v),
            Axis::LinkBandwidth => p.link_bandwidth_range = p.link_bandwidth_range.with_upper(v),
            Axis::TTh => p.t_th = v,
            Axis::Alpha => p.alpha = v,
            Axis::DemandScale => p.demand_scale = v,
            _ => return Err(Error::Domain(format!("axis {} does not apply to placement scenarios", self.name()))),
        }
        Ok(())
    }

    pub fn apply_mining(self, p: &mut MiningScenarioParams, v: f64) -> Result<()> {
        match self {
            Axis::NMiners => p.n_miners = Self::count(v)?,
            Axis::NParticipants => p.n_participants = Self::count(v)?,
            Axis::TMine => p.t_mine = v,
            Axis::ParticipantCapacity => p.capacity_range = p.capacity_range.with_upper(v),
            Axis::MinerDemand => p.size_bits_range = p.size_bits_range.with_upper(v),
            Axis::Gamma => p.gamma = v,
            _ => return Err(Error::Domain(format!("axis {} does not apply to mining scenarios", self.name()))),
        }
        Ok(())
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| Error::Domain(format!("unknown axis {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Solver {
    Ara,
    Hura,
    Exact,
    /// Mining offload LP.
    Mo,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Ara => "ara",
            Solver::Hura => "hura",
            Solver::Exact => "exact",
            Solver::Mo => "mo",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ara" => Ok(Solver::Ara),
            "hura" => Ok(Solver::Hura),
            "exact" => Ok(Solver::Exact),
            "mo" => Ok(Solver::Mo),
            _ => Err(Error::Domain(format!("unknown solver {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasible {
    Yes,
    No,
    Timeout,
}

impl Feasible {
    pub fn as_str(self) -> &'static str {
        match self {
            Feasible::Yes => "true",
            Feasible::No => "false",
            Feasible::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub seed: u64,
    pub solver: Solver,
    pub objective: f64,
    pub energy: f64,
    pub cost: f64,
    /// Link part of `cost`.
    pub routing_cost: f64,
    pub mean_delay: f64,
    /// Active servers, or participants receiving work for mining rows.
    pub active_servers: usize,
    pub runtime_ms: Option<f64>,
    pub feasible: Feasible,
}

impl SweepRow {
    fn failed(axis_value: f64, seed: u64, solver: Solver, feasible: Feasible) -> Self {
        SweepRow {
            axis_value,
            seed,
            solver,
            objective: f64::NAN,
            energy: f64::NAN,
            cost: f64::NAN,
            routing_cost: f64::NAN,
            mean_delay: f64::NAN,
            active_servers: 0,
            runtime_ms: None,
            feasible,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub snapshots: usize,
    pub base_seed: u64,
    pub solvers: Vec<Solver>,
    pub nfv: NfvScenarioParams,
    pub mining: MiningScenarioParams,
    /// Record wall-clock runtimes; off by default so output is reproducible.
    pub timing: bool,
    pub timeout: Option<Duration>,
    pub threads: Option<usize>,
}

impl SweepConfig {
    pub fn new(axis: Axis, values: Vec<f64>) -> Self {
        SweepConfig {
            axis,
            values,
            snapshots: 100,
            base_seed: 0,
            solvers: if axis.is_mining() { vec![Solver::Mo] } else { vec![Solver::Hura] },
            nfv: NfvScenarioParams::default(),
            mining: MiningScenarioParams::default(),
            timing: false,
            timeout: None,
            threads: None,
        }
    }

    pub fn seed(&self, snapshot: usize) -> u64 {
        self.base_seed.wrapping_add(snapshot as u64)
    }
}

fn soft_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::Infeasible(_)
            | Error::RoutingInfeasible { .. }
            | Error::RoundingFailure(_)
            | Error::Structural(_)
            | Error::NoAssignment { .. }
    )
}

fn placement_row(inst: &NfvInstance, sol: &PlacementSolution, users: &[usize], complete: bool) -> Result<SweepRow> {
    let energy = compute_energy(inst, sol)?;
    let cost = compute_cost(inst, sol)?;
    let routing_cost = users
        .iter()
        .map(|&k| sol.y[k].iter().flat_map(|seg| seg.iter().enumerate().map(|(a, v)| inst.sfcs[k].link_unit_price[a / 2] * v)).sum::<f64>())
        .sum();
    let mean_delay =
        if users.is_empty() { f64::NAN } else { users.iter().map(|&k| sfc_delay(inst, sol, k)).sum::<f64>() / users.len() as f64 };
    let sub_inst = inst.subset(users);
    let clean = check_feasibility(&sub_inst, &sol.subset(users), DEFAULT_TOL)?.is_empty();
    Ok(SweepRow {
        axis_value: 0.0,
        seed: 0,
        solver: Solver::Hura,
        objective: inst.alpha * energy + (1.0 - inst.alpha) * cost,
        energy,
        cost,
        routing_cost,
        mean_delay,
        active_servers: sol.active_servers(),
        runtime_ms: None,
        feasible: if complete && clean { Feasible::Yes } else { Feasible::No },
    })
}

/// Solves one placement snapshot.
pub fn run_placement(inst: &NfvInstance, solver: Solver, timeout: Option<Duration>) -> Result<SweepRow> {
    let all: Vec<usize> = (0..inst.sfcs.len()).collect();
    let row = match solver {
        Solver::Hura => {
            let r = hura_solve(inst)?;
            let users: Vec<usize> = r.accepted.iter().map(|&u| inst.sfc_index(u)).collect::<Result<_>>()?;
            placement_row(inst, &r.solution, &users, r.rejected.is_empty())
        }
        Solver::Ara => match ara_solve(inst, &AraConfig::default()) {
            Ok(r) => placement_row(inst, &r.solution, &all, true),
            Err(e) if soft_failure(&e) => Ok(SweepRow::failed(0.0, 0, solver, Feasible::No)),
            Err(e) => Err(e),
        },
        Solver::Exact => {
            let r = solve_exact(inst, &ExactLimits { time_cap: timeout, ..ExactLimits::default() })?;
            match (r.status, r.solution) {
                (ExactStatus::Optimal, Some(sol)) => placement_row(inst, &sol, &all, true),
                (ExactStatus::LimitReached, _) => Ok(SweepRow::failed(0.0, 0, solver, Feasible::Timeout)),
                _ => Ok(SweepRow::failed(0.0, 0, solver, Feasible::No)),
            }
        }
        Solver::Mo => Err(Error::Domain("the offload solver does not place SFCs".into())),
    }?;
    Ok(SweepRow { solver, ..row })
}

/// Per-miner completion time: the slowest participant's share.
pub fn mining_delays(tasks: &[MiningTask], sol: &OffloadSolution) -> Result<Vec<f64>> {
    tasks
        .iter()
        .zip(&sol.f)
        .map(|(t, row)| {
            let mut worst: f64 = 0.0;
            for (k, &w) in row.iter().enumerate() {
                if w > 0.0 {
                    let r = t.rate(k)?;
                    worst = worst.max(w * (t.size_bits / r + t.demand() / t.participants[k].cpu_capacity));
                }
            }
            Ok(worst)
        })
        .collect()
}

pub fn run_mining(tasks: &[MiningTask], gamma: f64, rp: &crate::mining::RewardParams) -> Result<SweepRow> {
    match mo_solve(tasks, gamma, rp) {
        Ok(sol) => {
            let delays = mining_delays(tasks, &sol)?;
            let used: BTreeSet<u32> = tasks
                .iter()
                .zip(&sol.f)
                .flat_map(|(t, row)| row.iter().enumerate().filter(|(_, w)| **w > 1e-9).map(|(k, _)| t.participants[k].id))
                .collect();
            Ok(SweepRow {
                axis_value: 0.0,
                seed: 0,
                solver: Solver::Mo,
                objective: sol.objective_value,
                energy: sol.energy,
                cost: sol.cost,
                routing_cost: 0.0,
                mean_delay: if delays.is_empty() { f64::NAN } else { delays.iter().sum::<f64>() / delays.len() as f64 },
                active_servers: used.len(),
                runtime_ms: None,
                feasible: Feasible::Yes,
            })
        }
        Err(e) if soft_failure(&e) => Ok(SweepRow::failed(0.0, 0, Solver::Mo, Feasible::No)),
        Err(e) => Err(e),
    }
}

fn run_job(cfg: &SweepConfig, value: f64, seed: u64) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(cfg.solvers.len());
    if cfg.axis.is_mining() {
        let mut p = cfg.mining.clone();
        cfg.axis.apply_mining(&mut p, value)?;
        p.seed = seed;
        let tasks = generate_mining_scenario(&p)?;
        for &solver in &cfg.solvers {
            if solver != Solver::Mo {
                return Err(Error::Domain(format!("solver {solver} does not apply to mining sweeps")));
            }
            let t0 = Instant::now();
            let row = run_mining(&tasks, p.gamma, &p.reward)?;
            rows.push(finish(cfg, row, value, seed, t0));
        }
    } else {
        let mut p = cfg.nfv.clone();
        cfg.axis.apply_nfv(&mut p, value)?;
        p.seed = seed;
        let inst = generate_nfv_scenario(&p)?;
        for &solver in &cfg.solvers {
            let t0 = Instant::now();
            let row = run_placement(&inst, solver, cfg.timeout)?;
            rows.push(finish(cfg, row, value, seed, t0));
        }
    }
    Ok(rows)
}

fn finish(cfg: &SweepConfig, row: SweepRow, value: f64, seed: u64, t0: Instant) -> SweepRow {
    let elapsed = t0.elapsed();
    let mut row = SweepRow { axis_value: value, seed, ..row };
    if cfg.timing {
        row.runtime_ms = Some(elapsed.as_secs_f64() * 1e3);
        if cfg.timeout.is_some_and(|cap| elapsed > cap) {
            row.feasible = Feasible::Timeout;
        }
    }
    row
}

/// Runs every (axis value, snapshot) job, in parallel when possible. Rows
/// come back ordered by axis value position, snapshot and solver, whatever
/// order the jobs finished in.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.values.is_empty() || cfg.snapshots == 0 || cfg.solvers.is_empty() {
        return Err(Error::Domain("a sweep needs axis values, snapshots and solvers".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.values.len()).flat_map(|v| (0..cfg.snapshots).map(move |s| (v, s))).collect();
    let threads = cfg.threads.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)).clamp(1, jobs.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Vec<SweepRow>>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                if j >= jobs.len() {
                    break;
                }
                let (v, s) = jobs[j];
                let out = run_job(cfg, cfg.values[v], cfg.seed(s));
                results.lock().expect("no worker panics while holding the lock")[j] = Some(out);
            });
        }
    });
    let mut rows = Vec::new();
    for r in results.into_inner().expect("workers joined") {
        rows.extend(r.expect("every job ran")?);
    }
    Ok(rows)
}

fn opt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

pub const DETAIL_HEADER: [&str; 10] =
    ["axis_value", "seed", "solver", "objective", "energy", "cost", "mean_delay", "active_servers", "runtime_ms", "feasible"];

pub fn write_detail_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(DETAIL_HEADER)?;
    for r in rows {
        out.write_record([
            r.axis_value.to_string(),
            r.seed.to_string(),
            r.solver.to_string(),
            opt(r.objective),
            opt(r.energy),
            opt(r.cost),
            opt(r.mean_delay),
            r.active_servers.to_string(),
            r.runtime_ms.map(opt).unwrap_or_default(),
            r.feasible.as_str().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Means over the feasible snapshots of one (axis value, solver) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub axis_value: f64,
    pub solver: Solver,
    pub snapshots: usize,
    pub feasible: usize,
    pub objective: f64,
    pub energy: f64,
    pub cost: f64,
    pub routing_cost: f64,
    pub mean_delay: f64,
    pub active_servers: f64,
}

pub fn aggregate(rows: &[SweepRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(f64, Solver)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|&(v, s)| v == r.axis_value && s == r.solver) {
            keys.push((r.axis_value, r.solver));
        }
    }
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keys.into_iter()
        .map(|(v, s)| {
            let cell: Vec<&SweepRow> = rows.iter().filter(|r| r.axis_value == v && r.solver == s).collect();
            let ok: Vec<&SweepRow> = cell.iter().copied().filter(|r| r.feasible == Feasible::Yes).collect();
            let mean = |f: &dyn Fn(&SweepRow) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            AggregateRow {
                axis_value: v,
                solver: s,
                snapshots: cell.len(),
                feasible: ok.len(),
                objective: mean(&|r| r.objective),
                energy: mean(&|r| r.energy),
                cost: mean(&|r| r.cost),
                routing_cost: mean(&|r| r.routing_cost),
                mean_delay: mean(&|r| r.mean_delay),
                active_servers: mean(&|r| r.active_servers as f64),
            }
        })
        .collect()
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["axis_value", "solver", "snapshots", "feasible", "objective", "energy", "cost", "mean_delay", "active_servers"])?;
    for r in rows {
        out.write_record([
            r.axis_value.to_string(),
            r.solver.to_string(),
            r.snapshots.to_string(),
            r.feasible.to_string(),
            opt(r.objective),
            opt(r.energy),
            opt(r.cost),
            opt(r.mean_delay),
            opt(r.active_servers),
        ])?;
    }
    out.flush()?;
    Ok(())
}
