//! Best-first branch and bound over the placement variables x.
//!
//! β is never branched on: once x is binary, C3/C4 force β = 1 on hosting
//! servers and the objective drives it to 0 elsewhere. Each node solves the
//! relaxation with some x fixed; a node whose x is binary is turned into a
//! feasible solution by re-solving its routing exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::time::{Duration, Instant};

use crate::ara::round_to_binary;
use crate::error::{Error, Result};
use crate::formulation::{build_relaxation, VarIndex};
use crate::hura::{solve_routing, HuraState};
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::model::{objective_f, NfvInstance, PlacementSolution, DEFAULT_TOL};

const INTEGRALITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactLimits {
    pub node_cap: usize,
    pub time_cap: Option<Duration>,
    /// Keep the per-node search log.
    pub verbose: bool,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits { node_cap: 100_000, time_cap: None, verbose: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactStatus {
    Optimal,
    Infeasible,
    /// A cap stopped the search; the incumbent (if any) is not proven optimal.
    LimitReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    /// (x variable index, fixed value).
    pub fixed: Vec<(usize, bool)>,
    pub lp_bound: f64,
    pub depth: usize,
    id: usize,
}

impl Eq for BnbNode {}

impl Ord for BnbNode {
    // BinaryHeap is a max-heap: smaller bound, then older node, wins.
    fn cmp(&self, other: &Self) -> Ordering {
        other.lp_bound.total_cmp(&self.lp_bound).then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for BnbNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeLogEntry {
    pub node: usize,
    pub depth: usize,
    pub bound: f64,
    pub incumbent: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExactResult {
    pub status: ExactStatus,
    pub solution: Option<PlacementSolution>,
    pub objective: Option<f64>,
    /// True only when the search finished and the incumbent is optimal.
    pub optimal: bool,
    pub root_bound: Option<f64>,
    pub nodes: usize,
    pub log: Vec<NodeLogEntry>,
}

impl ExactResult {
    pub fn write_log<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["node", "depth", "bound", "incumbent"])?;
        for e in &self.log {
            let inc = e.incumbent.map(|v| v.to_string()).unwrap_or_default();
            out.write_record([e.node.to_string(), e.depth.to_string(), e.bound.to_string(), inc])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn node_lp(base: &LpProblem, fixed: &[(usize, bool)]) -> LpProblem {
    let mut lp = base.clone();
    for &(v, one) in fixed {
        let val = if one { 1.0 } else { 0.0 };
        lp.set_bounds(v, val, val);
    }
    lp
}

/// Binary placement from an integral relaxed point, routed exactly.
fn complete(inst: &NfvInstance, vars: &VarIndex, point: &[f64]) -> Result<Option<PlacementSolution>> {
    let mut sol = vars.extract(point);
    for row in sol.x.iter_mut().flatten() {
        for v in row.iter_mut() {
            *v = if *v > 0.5 { 1.0 } else { 0.0 };
        }
    }
    for n in 0..sol.beta.len() {
        sol.beta[n] = if sol.x.iter().flatten().any(|r| r[n] == 1.0) { 1.0 } else { 0.0 };
    }
    let all: Vec<usize> = (0..inst.sfcs.len()).collect();
    match solve_routing(inst, &sol, &all, &HuraState::fresh(inst)) {
        Ok(r) => {
            sol.y = r.y;
            sol.binary_flag = true;
            Ok(Some(sol))
        }
        Err(Error::RoutingInfeasible { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Most fractional x (closest to 0.5); lowest index on ties.
fn branching_var(vars: &VarIndex, point: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for v in vars.x_range() {
        let frac = (point[v] - point[v].round()).abs();
        if frac > INTEGRALITY_TOL && best.is_none_or(|(_, f)| frac > f) {
            best = Some((v, frac));
        }
    }
    best.map(|(v, _)| v)
}

pub fn solve_exact(inst: &NfvInstance, limits: &ExactLimits) -> Result<ExactResult> {
    let start = Instant::now();
    let base = build_relaxation(inst)?;
    let vars = &base.vars;
    let mut heap = BinaryHeap::new();
    let mut incumbent: Option<(f64, PlacementSolution)> = None;
    let mut log = Vec::new();
    let mut root_bound = None;
    let mut nodes = 0;
    let mut next_id = 0;
    let mut exhausted = true;
    // Pending children carry their parent's bound until their own LP is solved.
    heap.push(BnbNode { fixed: Vec::new(), lp_bound: f64::NEG_INFINITY, depth: 0, id: next_id });
    next_id += 1;

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.lp_bound >= inc - 1e-9 * inc.abs().max(1.0) {
                continue;
            }
        }
        if nodes >= limits.node_cap || limits.time_cap.is_some_and(|cap| start.elapsed() >= cap) {
            exhausted = false;
            break;
        }
        nodes += 1;
        let lp = node_lp(&base.lp, &node.fixed);
        let sol = solve_lp(&lp, DEFAULT_TOL)?;
        if sol.status != LpStatus::Optimal {
            continue;
        }
        let bound = sol.objective_value;
        if node.depth == 0 {
            root_bound = Some(bound);
        }
        if limits.verbose {
            log.push(NodeLogEntry { node: node.id, depth: node.depth, bound, incumbent: incumbent.as_ref().map(|(v, _)| *v) });
        }
        if let Some((inc, _)) = &incumbent {
            if bound >= inc - 1e-9 * inc.abs().max(1.0) {
                continue;
            }
        }
        let mut offer = |cand: PlacementSolution| -> Result<()> {
            let f = objective_f(inst, &cand)?;
            if incumbent.as_ref().is_none_or(|(v, _)| f < *v) {
                incumbent = Some((f, cand));
            }
            Ok(())
        };
        match branching_var(vars, &sol.x) {
            None => {
                if let Some(cand) = complete(inst, vars, &sol.x)? {
                    offer(cand)?;
                }
            }
            Some(v) => {
                match round_to_binary(inst, &vars.extract(&sol.x)) {
                    Ok(cand) => offer(cand)?,
                    Err(Error::RoundingFailure(_)) | Err(Error::Domain(_)) => {}
                    Err(e) => return Err(e),
                }
                for one in [true, false] {
                    let mut fixed = node.fixed.clone();
                    fixed.push((v, one));
                    heap.push(BnbNode { fixed, lp_bound: bound, depth: node.depth + 1, id: next_id });
                    next_id += 1;
                }
            }
        }
    }

    let status = match (&incumbent, exhausted) {
        (Some(_), true) => ExactStatus::Optimal,
        (None, true) => ExactStatus::Infeasible,
        (_, false) => ExactStatus::LimitReached,
    };
    let (objective, solution) = match incumbent {
        Some((f, s)) => (Some(f), Some(s)),
        None => (None, None),
    };
    Ok(ExactResult { status, optimal: status == ExactStatus::Optimal, solution, objective, root_bound, nodes, log })
}
