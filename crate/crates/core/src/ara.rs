//! Penalty relaxation of the binary variables solved by majorization-
//! minimization: each step linearizes the concave penalty −v² at the
//! previous iterate and solves the resulting LP.

use std::io::Write;

use crate::error::{Error, Result};
use crate::formulation::{build_relaxation, Formulation, VarIndex};
use crate::hura::{hura_solve, solve_routing, HuraState};
use crate::lp::{LpProblem, LpStatus, WarmLp};
use crate::model::{objective_f, NfvInstance, PlacementSolution, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct AraConfig {
    /// Initial penalty weight on β; `None` picks `lambda_scale · F(start)`.
    pub lambda1: Option<f64>,
    /// Initial penalty weight on x; `None` as for `lambda1`.
    pub lambda2: Option<f64>,
    pub lambda_scale: f64,
    /// Factor applied to both penalties between runs.
    pub lambda_growth: f64,
    /// Runs (one per penalty level) before giving up on integrality.
    pub max_runs: usize,
    /// MM steps per run.
    pub t_max: usize,
    /// Stop a run when the penalized objective changes by less than this,
    /// relative to its magnitude.
    pub eps_converge: f64,
    pub eps_binary: f64,
    /// When a run leaves its start point unchanged, the next run starts this
    /// far along the segment towards the rounded point.
    pub restart_blend: f64,
    /// Start from the HuRA placement when it serves every SFC; otherwise,
    /// and when false, start from the LP relaxation optimum.
    pub start_from_hura: bool,
}

impl Default for AraConfig {
    fn default() -> Self {
        AraConfig {
            lambda1: None,
            lambda2: None,
            lambda_scale: 1e-2,
            lambda_growth: 4.0,
            max_runs: 12,
            t_max: 50,
            eps_converge: 1e-4,
            eps_binary: 1e-3,
            restart_blend: 0.1,
            start_from_hura: true,
        }
    }
}

/// (Σ β−β², Σ x−x²).
pub fn penalty_residual(sol: &PlacementSolution) -> Result<(f64, f64)> {
    let in_box = |v: &f64| (0.0..=1.0).contains(v);
    if !sol.beta.iter().all(in_box) || !sol.x.iter().flatten().flatten().all(in_box) {
        return Err(Error::Domain("penalty residual needs beta and x in [0, 1]".into()));
    }
    let rb = sol.beta.iter().map(|b| b - b * b).sum();
    let rx = sol.x.iter().flatten().flatten().map(|v| v - v * v).sum();
    Ok((rb, rx))
}

/// F + λ₁Σ(β−β²) + λ₂Σ(x−x²).
pub fn penalized_objective(inst: &NfvInstance, sol: &PlacementSolution, lambda1: f64, lambda2: f64) -> Result<f64> {
    let (rb, rx) = penalty_residual(sol)?;
    Ok(objective_f(inst, sol)? + lambda1 * rb + lambda2 * rx)
}

/// Surrogate objective coefficients and offset at `prev`.
fn surrogate_objective(base: &Formulation, lambda1: f64, lambda2: f64, prev: &[f64]) -> (Vec<f64>, f64) {
    let vars = &base.vars;
    let mut c = base.lp.objective.clone();
    let mut offset = base.lp.objective_offset;
    let nb = vars.x_range().start;
    for v in (0..nb).chain(vars.x_range()) {
        let lam = if v < nb { lambda1 } else { lambda2 };
        let p = prev[v];
        c[v] += lam * (1.0 - 2.0 * p);
        offset += lam * p * p;
    }
    (c, offset)
}

fn surrogate_from(base: &Formulation, lambda1: f64, lambda2: f64, prev: &[f64]) -> LpProblem {
    let (c, offset) = surrogate_objective(base, lambda1, lambda2, prev);
    LpProblem { objective: c, objective_offset: offset, ..base.lp.clone() }
}

fn linear_value(c: &[f64], offset: f64, v: &[f64]) -> f64 {
    c.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() + offset
}

/// The MM surrogate at `prev`:
/// F + λ₁Σβ + λ₂Σx − λ₁Σ(2ββ' − β'²) − λ₂Σ(2xx' − x'²), under C1–C7 and the
/// [0, 1] boxes.
pub fn build_surrogate(inst: &NfvInstance, lambda1: f64, lambda2: f64, prev: &PlacementSolution) -> Result<LpProblem> {
    prev.check_dims(inst)?;
    let base = build_relaxation(inst)?;
    let flat = base.vars.flatten(prev);
    Ok(surrogate_from(&base, lambda1, lambda2, &flat))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AraIteration {
    pub run: usize,
    pub iteration: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Surrogate value at the expansion point and the penalized objective
    /// there; equal up to rounding.
    pub surrogate_at_expansion: f64,
    pub penalized_at_expansion: f64,
    /// Surrogate optimum and the penalized objective at the new iterate.
    pub surrogate_value: f64,
    pub penalized_value: f64,
    pub residual_beta: f64,
    pub residual_x: f64,
    pub snapshot: PlacementSolution,
    /// False when the step was discarded for failing to descend.
    pub accepted: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AraTrace {
    pub iterations: Vec<AraIteration>,
}

impl AraTrace {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["run", "iteration", "lambda1", "lambda2", "surrogate", "penalized", "residual_beta", "residual_x"])?;
        for it in &self.iterations {
            out.write_record([
                it.run.to_string(),
                it.iteration.to_string(),
                it.lambda1.to_string(),
                it.lambda2.to_string(),
                it.surrogate_value.to_string(),
                it.penalized_value.to_string(),
                it.residual_beta.to_string(),
                it.residual_x.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AraResult {
    /// Rounded, re-routed binary solution.
    pub solution: PlacementSolution,
    pub objective: f64,
    /// Terminal iterate before rounding.
    pub relaxed: PlacementSolution,
    pub residuals: (f64, f64),
    pub lambda1: f64,
    pub lambda2: f64,
    pub trace: AraTrace,
}

fn clamp_box(v: &mut [f64], vars: &VarIndex) {
    let nb = vars.x_range().start;
    for k in (0..nb).chain(vars.x_range()) {
        v[k] = v[k].clamp(0.0, 1.0);
    }
}

/// One MM run from `start` with fixed penalties. Returns the terminal iterate.
#[allow(clippy::too_many_arguments)]
fn mm_run(
    inst: &NfvInstance,
    base: &Formulation,
    warm: &mut WarmLp,
    start: &[f64],
    lambda1: f64,
    lambda2: f64,
    cfg: &AraConfig,
    run: usize,
    trace: &mut AraTrace,
) -> Result<Vec<f64>> {
    let vars = &base.vars;
    let mut prev = start.to_vec();
    let mut prev_pen = penalized_objective(inst, &vars.extract(&prev), lambda1, lambda2)?;
    for t in 1..=cfg.t_max {
        let (c, offset) = surrogate_objective(base, lambda1, lambda2, &prev);
        let at_expansion = linear_value(&c, offset, &prev);
        let sol = warm.solve(&c, offset).map_err(|e| Error::Surrogate { iteration: t, source: Box::new(e) })?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Surrogate {
                iteration: t,
                source: Box::new(Error::Infeasible(format!("surrogate LP is {:?}", sol.status))),
            });
        }
        let mut next = sol.x;
        clamp_box(&mut next, vars);
        let next_sol = vars.extract(&next);
        let pen = penalized_objective(inst, &next_sol, lambda1, lambda2)?;
        let (rb, rx) = penalty_residual(&next_sol)?;
        trace.iterations.push(AraIteration {
            run,
            iteration: t,
            lambda1,
            lambda2,
            surrogate_at_expansion: at_expansion,
            penalized_at_expansion: prev_pen,
            surrogate_value: linear_value(&c, offset, &next),
            penalized_value: pen,
            residual_beta: rb,
            residual_x: rx,
            snapshot: next_sol,
            accepted: true,
        });
        let scale = prev_pen.abs().max(1.0);
        if pen > prev_pen + 1e-9 * scale {
            // Ascent can only come from LP round-off; keep the previous point.
            trace.iterations.last_mut().expect("just pushed").accepted = false;
            break;
        }
        let change = (prev_pen - pen).abs();
        prev = next;
        prev_pen = pen;
        if change < cfg.eps_converge * scale {
            break;
        }
    }
    Ok(prev)
}

/// Runs the penalized MM iteration from the HuRA placement (or the LP
/// relaxation optimum when HuRA rejects an SFC), then rounds and re-routes.
/// When the final iterate cannot be rounded, the latest earlier iterate
/// that can is used instead.
pub fn ara_solve(inst: &NfvInstance, cfg: &AraConfig) -> Result<AraResult> {
    let base = build_relaxation(inst)?;
    let vars = &base.vars;
    let mut warm = WarmLp::new(&base.lp, DEFAULT_TOL)?;
    let relax = warm.solve(&base.lp.objective, base.lp.objective_offset)?;
    if relax.status != LpStatus::Optimal {
        return Err(Error::Infeasible("the relaxed placement problem has no feasible point".into()));
    }
    let mut start = relax.x;
    if cfg.start_from_hura {
        let h = hura_solve(inst)?;
        if h.rejected.is_empty() {
            start = vars.flatten(&h.solution);
        }
    }
    clamp_box(&mut start, vars);
    let initial = vars.extract(&start);
    let f0 = objective_f(inst, &vars.extract(&start))?.abs().max(1e-12);
    let mut lambda1 = cfg.lambda1.unwrap_or(cfg.lambda_scale * f0);
    let mut lambda2 = cfg.lambda2.unwrap_or(cfg.lambda_scale * f0);
    if !(lambda1 > 0.0 && lambda2 > 0.0 && cfg.lambda_growth >= 1.0 && cfg.max_runs > 0) {
        return Err(Error::Domain("penalty weights must be positive and non-decreasing".into()));
    }
    if !(0.0..=1.0).contains(&cfg.restart_blend) {
        return Err(Error::Domain(format!("restart blend {} outside [0, 1]", cfg.restart_blend)));
    }
    let mut trace = AraTrace::default();
    let mut run = 0;
    let terminal = loop {
        let end = mm_run(inst, &base, &mut warm, &start, lambda1, lambda2, cfg, run, &mut trace)?;
        let (rb, rx) = penalty_residual(&vars.extract(&end))?;
        if rb.max(rx) <= cfg.eps_binary || run + 1 >= cfg.max_runs {
            break end;
        }
        // A fractional point left unchanged is a stationary point of the
        // linearization (e.g. x = 1/2 ties); nudge it towards its rounding.
        let moved = end.iter().zip(&start).any(|(a, b)| (a - b).abs() > 1e-9);
        start = if !moved { nudge(inst, vars, &end, cfg.restart_blend)? } else { end };
        lambda1 *= cfg.lambda_growth;
        lambda2 *= cfg.lambda_growth;
        run += 1;
    };
    let relaxed = vars.extract(&terminal);
    let residuals = penalty_residual(&relaxed)?;
    let solution = match round_to_binary(inst, &relaxed) {
        Err(Error::RoundingFailure(msg)) => {
            // Greedy rounding can strand a VNF; earlier iterates, then the
            // start point, are tried in turn.
            let mut earlier = trace.iterations.iter().rev().map(|it| &it.snapshot).chain(std::iter::once(&initial));
            earlier.find_map(|p| round_to_binary(inst, p).ok()).ok_or(Error::RoundingFailure(msg))?
        }
        other => other?,
    };
    let objective = objective_f(inst, &solution)?;
    Ok(AraResult { solution, objective, relaxed, residuals, lambda1, lambda2, trace })
}

fn nudge(inst: &NfvInstance, vars: &VarIndex, point: &[f64], theta: f64) -> Result<Vec<f64>> {
    match round_to_binary(inst, &vars.extract(point)) {
        Ok(r) => {
            let target = vars.flatten(&r);
            Ok(point.iter().zip(&target).map(|(p, q)| (1.0 - theta) * p + theta * q).collect())
        }
        Err(Error::RoundingFailure(_)) => Ok(point.to_vec()),
        Err(e) => Err(e),
    }
}

/// Turns a relaxed point into a deployable binary placement.
///
/// (SFC, VNF) pairs are visited by decreasing largest x; each takes the
/// server with the largest x (lowest index on ties) that still has CPU left
/// and, under C2, is not already used by the same SFC. β follows from the
/// hosting servers and all SFCs are routed jointly from scratch.
pub fn round_to_binary(inst: &NfvInstance, relaxed: &PlacementSolution) -> Result<PlacementSolution> {
    relaxed.check_dims(inst)?;
    let ns = inst.graph.servers.len();
    for (k, rows) in relaxed.x.iter().enumerate() {
        for (j, row) in rows.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::Domain(format!("x row ({k}, {j}) sums to {s}, not 1")));
            }
        }
    }
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for (k, rows) in relaxed.x.iter().enumerate() {
        for (j, row) in rows.iter().enumerate() {
            pairs.push((k, j, row.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
        }
    }
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2));
    let mut remain: Vec<f64> = inst.graph.servers.iter().map(|s| s.cpu_capacity).collect();
    let mut out = PlacementSolution::zeros(inst);
    for (k, j, _) in pairs {
        let cpu = inst.sfcs[k].vnf_cpu[j];
        let row = &relaxed.x[k][j];
        let mut cands: Vec<usize> = (0..ns).collect();
        cands.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
        let pick =
            cands.into_iter().find(|&n| remain[n] >= cpu && !(inst.enforce_distinct_servers && out.x[k].iter().any(|r| r[n] == 1.0)));
        let n = pick.ok_or_else(|| Error::RoundingFailure(format!("no server can take VNF {j} of user {}", inst.sfcs[k].user_id)))?;
        out.x[k][j][n] = 1.0;
        out.beta[n] = 1.0;
        remain[n] -= cpu;
    }
    let all: Vec<usize> = (0..inst.sfcs.len()).collect();
    let routing = solve_routing(inst, &out, &all, &HuraState::fresh(inst)).map_err(|e| match e {
        Error::RoutingInfeasible { user } => Error::RoundingFailure(format!("rounded placement cannot be routed (user {user})")),
        other => other,
    })?;
    out.y = routing.y;
    out.binary_flag = true;
    Ok(out)
}
