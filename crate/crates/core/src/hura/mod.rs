//! Greedy per-SFC placement: a Hungarian assignment of VNFs to servers
//! followed by a routing LP, with one delay-driven retry.

mod hungarian;
mod routing;

pub use hungarian::{hungarian, Assignment, AssignmentMatrix};
pub use routing::{solve_routing, Routing};

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{objective_f, NfvInstance, PlacementSolution, SfcRequest};

/// Remaining resources while SFCs are committed one by one.
#[derive(Debug, Clone, PartialEq)]
pub struct HuraState {
    pub remain_cpu: Vec<f64>,
    /// Per directed arc.
    pub remain_bw: Vec<f64>,
    pub active: Vec<bool>,
    /// Objective over the SFCs committed so far.
    pub objective: f64,
}

impl HuraState {
    pub fn fresh(inst: &NfvInstance) -> Self {
        let g = &inst.graph;
        HuraState {
            remain_cpu: g.servers.iter().map(|s| s.cpu_capacity).collect(),
            remain_bw: (0..g.num_arcs()).map(|a| g.arc_bandwidth(a)).collect(),
            active: vec![false; g.servers.len()],
            objective: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixMode {
    Objective,
    Delay,
}

/// Placement matrix for one SFC: rows are VNFs padded with zero rows up to
/// the server count, columns are servers. Servers without enough remaining
/// CPU get `big_value = 1e9·(largest finite entry + 1)`.
///
/// In objective mode every real entry carries the running objective; it is
/// constant per matrix and does not change the optimal assignment.
pub fn build_placement_matrix(sfc: &SfcRequest, state: &HuraState, inst: &NfvInstance, mode: MatrixMode) -> Result<AssignmentMatrix> {
    let servers = &inst.graph.servers;
    let ns = servers.len();
    if ns < sfc.num_vnfs() {
        return Err(Error::Structural(format!("user {} needs {} distinct servers but only {ns} exist", sfc.user_id, sfc.num_vnfs())));
    }
    let alpha = inst.alpha;
    let mut rows = vec![vec![0.0; ns]; ns];
    let mut admissible = vec![vec![true; ns]; ns];
    let mut largest: f64 = 0.0;
    for (j, &cpu) in sfc.vnf_cpu.iter().enumerate() {
        for (n, s) in servers.iter().enumerate() {
            if state.remain_cpu[n] < cpu {
                admissible[j][n] = false;
                continue;
            }
            let v = match mode {
                MatrixMode::Objective => {
                    let stat = if state.active[n] { 0.0 } else { s.static_power };
                    state.objective + alpha * (stat + s.proc_power * cpu / s.cpu_capacity) + (1.0 - alpha) * sfc.server_unit_price[n] * cpu
                }
                MatrixMode::Delay => cpu / s.cpu_capacity,
            };
            rows[j][n] = v;
            largest = largest.max(v);
        }
    }
    let big = 1e9 * (largest + 1.0);
    for j in 0..sfc.num_vnfs() {
        for n in 0..ns {
            if !admissible[j][n] {
                rows[j][n] = big;
            }
        }
    }
    AssignmentMatrix::from_rows(rows, big)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HuraDecision {
    pub user: u32,
    pub accepted: bool,
    pub mode: Option<MatrixMode>,
    pub servers: Vec<usize>,
    pub routing_cost: f64,
}

#[derive(Debug, Clone)]
pub struct HuraResult {
    /// Rejected SFCs keep all-zero rows.
    pub solution: PlacementSolution,
    pub objective: f64,
    pub accepted: Vec<u32>,
    pub rejected: Vec<u32>,
    pub decisions: Vec<HuraDecision>,
    pub state: HuraState,
}

impl HuraResult {
    pub fn write_decisions<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["user", "accepted", "mode", "servers", "routing_cost"])?;
        for d in &self.decisions {
            let mode = match d.mode {
                Some(MatrixMode::Objective) => "objective",
                Some(MatrixMode::Delay) => "delay",
                None => "",
            };
            let servers: Vec<String> = d.servers.iter().map(|s| s.to_string()).collect();
            out.write_record([
                d.user.to_string(),
                d.accepted.to_string(),
                mode.to_string(),
                servers.join(" "),
                d.routing_cost.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// SFC positions in processing order: increasing max delay, input order on ties.
pub fn processing_order(inst: &NfvInstance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.sfcs.len()).collect();
    order.sort_by(|&a, &b| inst.sfcs[a].max_delay.total_cmp(&inst.sfcs[b].max_delay));
    order
}

fn try_mode(
    inst: &NfvInstance,
    k: usize,
    state: &HuraState,
    committed: &PlacementSolution,
    mode: MatrixMode,
) -> Option<(Vec<usize>, PlacementSolution, Routing)> {
    let sfc = &inst.sfcs[k];
    let matrix = build_placement_matrix(sfc, state, inst, mode).ok()?;
    let assignment = hungarian(&matrix).ok()?;
    let servers: Vec<usize> = assignment.columns[..sfc.num_vnfs()].to_vec();
    if servers.iter().enumerate().any(|(j, &n)| !matrix.is_admissible(j, n)) {
        return None;
    }
    let mut trial = committed.clone();
    for (j, &n) in servers.iter().enumerate() {
        trial.x[k][j][n] = 1.0;
        trial.beta[n] = 1.0;
    }
    let routing = solve_routing(inst, &trial, &[k], state).ok()?;
    Some((servers, trial, routing))
}

pub fn hura_solve(inst: &NfvInstance) -> Result<HuraResult> {
    inst.validate()?;
    let mut state = HuraState::fresh(inst);
    let mut sol = PlacementSolution::zeros(inst);
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    let mut decisions = Vec::new();
    for k in processing_order(inst) {
        let sfc = &inst.sfcs[k];
        let found = [MatrixMode::Objective, MatrixMode::Delay]
            .into_iter()
            .find_map(|mode| try_mode(inst, k, &state, &sol, mode).map(|r| (mode, r)));
        match found {
            Some((mode, (servers, mut trial, routing))) => {
                trial.y[k] = routing.y.into_iter().next().expect("one SFC routed");
                for (j, &n) in servers.iter().enumerate() {
                    state.remain_cpu[n] -= sfc.vnf_cpu[j];
                    state.active[n] = true;
                }
                for seg in &trial.y[k] {
                    for (a, v) in seg.iter().enumerate() {
                        state.remain_bw[a] -= v;
                    }
                }
                sol = trial;
                state.objective = objective_f(inst, &sol)?;
                accepted.push(sfc.user_id);
                decisions.push(HuraDecision { user: sfc.user_id, accepted: true, mode: Some(mode), servers, routing_cost: routing.cost });
            }
            None => {
                rejected.push(sfc.user_id);
                decisions.push(HuraDecision { user: sfc.user_id, accepted: false, mode: None, servers: Vec::new(), routing_cost: 0.0 });
            }
        }
    }
    sol.binary_flag = sol.is_binary();
    Ok(HuraResult { objective: state.objective, solution: sol, accepted, rejected, decisions, state })
}
