//! Dense bounded-variable primal simplex (two phases).
//!
//! Variables are first shifted so every column lives in `[0, u]` with `u`
//! possibly infinite; free columns are split. Rows are equilibrated to unit
//! max-norm, then made `rhs ≥ 0`. Nonbasic columns sit at either bound.
//! Pricing is Dantzig's rule; after `2·(m+n)` consecutive degenerate pivots
//! it switches to Bland's rule until the objective moves again. Long runs of
//! degenerate pivots also shift basic variables off their bounds by about
//! 1e-9; the shift is removed once the phase is optimal.

use super::{LpProblem, LpSolution, LpStatus, Relation};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;
const INF: f64 = f64::INFINITY;
/// Consecutive degenerate pivots before the right-hand side is perturbed.
const PERTURB_AFTER: usize = 50;
const PERTURBATION: f64 = 1e-9;
/// Geometric column/row scaling passes before the final row equilibration.
const SCALING_PASSES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptions {
    /// Smallest tableau entry accepted as a pivot.
    pub pivot_tol: f64,
    /// Reduced-cost tolerance, relative to the largest objective coefficient.
    pub optimality_tol: f64,
    /// Feasibility tolerance for phase 1 and the final residual check.
    pub feasibility_tol: f64,
    /// Defaults to `max(10_000, 20·(m + n))` when `None`.
    pub max_iterations: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { pivot_tol: 1e-8, optimality_tol: 1e-9, feasibility_tol: 1e-6, max_iterations: None }
    }
}

#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    Shift { col: usize, lower: f64 },
    Mirror { col: usize, upper: f64 },
    Split { pos: usize, neg: usize },
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Tableau {
    m: usize,
    ncols: usize,
    a: Vec<f64>,
    x_b: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<usize>,
    at_upper: Vec<bool>,
    upper: Vec<f64>,
    d: Vec<f64>,
    /// Right-hand side of the initial system, whose basis columns are `init_col`.
    b0: Vec<f64>,
    /// Initial constraint matrix, kept for refining the basic values.
    a0: Vec<f64>,
    init_col: Vec<usize>,
}

impl Tableau {
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.ncols + j]
    }

    fn price(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.ncols..(i + 1) * self.ncols];
                for (dj, aij) in d.iter_mut().zip(row) {
                    *dj -= cb * aij;
                }
            }
        }
        d
    }

    /// Moves basic variables that sit on a bound a tiny, row-dependent
    /// distance inside their box. This is a shift of the right-hand side, so
    /// the basis stays primal feasible and degenerate ties are broken.
    fn perturb(&mut self, round: u64) {
        for i in 0..self.m {
            let mut h = (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ round.wrapping_mul(0xBF58_476D_1CE4_E5B9);
            h ^= h >> 31;
            h = h.wrapping_mul(0x94D0_49BB_1331_11EB);
            h ^= h >> 29;
            let u = (h >> 11) as f64 / (1u64 << 53) as f64;
            let delta = PERTURBATION * (1.0 + u) * (1.0 + self.x_b[i].abs());
            let ub = self.upper[self.basis[i]];
            if ub < 4.0 * delta {
                continue;
            }
            if self.x_b[i] < delta {
                self.x_b[i] = delta;
            } else if ub != INF && self.x_b[i] > ub - delta {
                self.x_b[i] = ub - delta;
            }
        }
    }

    /// Basic values from the unperturbed system by one step of iterative
    /// refinement: the residual `b0 − A0 x` of the current point is mapped
    /// through `B⁻¹` (the tableau columns of the initial basis) and added to
    /// the basic values. Returns the largest bound violation left, which is
    /// clamped away.
    fn recompute_x_b(&mut self) -> f64 {
        let n = self.ncols;
        let mut value = vec![0.0; n];
        for j in 0..n {
            if self.row_of[j] == NONE && self.at_upper[j] {
                value[j] = self.upper[j];
            }
        }
        for r in 0..self.m {
            value[self.basis[r]] = self.x_b[r];
        }
        let residual: Vec<f64> =
            (0..self.m).map(|i| self.b0[i] - self.a0[i * n..(i + 1) * n].iter().zip(&value).map(|(a, v)| a * v).sum::<f64>()).collect();
        let mut worst = 0.0f64;
        for r in 0..self.m {
            let row = &self.a[r * n..(r + 1) * n];
            let mut v = self.x_b[r];
            for (i, &c) in self.init_col.iter().enumerate() {
                v += row[c] * residual[i];
            }
            let ub = self.upper[self.basis[r]];
            let violation = (-v).max(v - ub).max(0.0) / (1.0 + v.abs());
            worst = worst.max(violation);
            self.x_b[r] = v.max(0.0).min(ub);
        }
        worst
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.ncols;
        let piv = self.a[r * n + q];
        {
            let row = &mut self.a[r * n..(r + 1) * n];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[q] = 1.0;
        }
        let (head, tail) = self.a.split_at_mut(r * n);
        let (prow, rest) = tail.split_at_mut(n);
        for row in head.chunks_exact_mut(n).chain(rest.chunks_exact_mut(n)) {
            let f = row[q];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[q] = 0.0;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (v, p) in self.d.iter_mut().zip(prow.iter()) {
                *v -= f * p;
            }
            self.d[q] = 0.0;
        }
    }

    fn run_phase(&mut self, opts: &SimplexOptions, opt_tol: f64, iterations: &mut usize, max_iterations: usize) -> Result<PhaseEnd> {
        let bland_after = 2 * (self.m + self.ncols);
        let mut degenerate_run = 0usize;
        let mut stalled = 0usize;
        let mut rounds = 0u64;
        loop {
            if stalled >= PERTURB_AFTER {
                rounds += 1;
                self.perturb(rounds);
                stalled = 0;
            }
            let bland = degenerate_run > bland_after;
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.ncols {
                if self.row_of[j] != NONE || self.upper[j] <= 0.0 {
                    continue;
                }
                let dj = self.d[j];
                let dir = if !self.at_upper[j] && dj < -opt_tol {
                    1.0
                } else if self.at_upper[j] && dj > opt_tol {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    entering = Some((j, dir));
                }
            }
            let Some((q, dir)) = entering else {
                if rounds > 0 {
                    let worst = self.recompute_x_b();
                    if worst > opts.feasibility_tol {
                        return Err(Error::Numerical(format!("removing degeneracy perturbation left a bound violated by {worst:e}")));
                    }
                }
                return Ok(PhaseEnd::Optimal);
            };
            if *iterations >= max_iterations {
                return Err(Error::IterationLimit(max_iterations));
            }
            *iterations += 1;

            // Ratio test: smallest step at which a basic variable hits a bound.
            let mut t_min = self.upper[q];
            for i in 0..self.m {
                let alpha = self.entry(i, q);
                if alpha.abs() <= opts.pivot_tol {
                    continue;
                }
                let rate = -dir * alpha;
                let limit = if rate < 0.0 {
                    self.x_b[i].max(0.0) / -rate
                } else {
                    let ub = self.upper[self.basis[i]];
                    if ub == INF {
                        continue;
                    }
                    (ub - self.x_b[i]).max(0.0) / rate
                };
                if limit < t_min {
                    t_min = limit;
                }
            }
            if t_min == INF {
                return Ok(PhaseEnd::Unbounded);
            }
            let flip = self.upper[q] <= t_min;
            let mut leave = NONE;
            let mut leave_to_upper = false;
            if !flip {
                let slack = 1e-12 * (1.0 + t_min);
                let mut best_alpha = 0.0;
                for i in 0..self.m {
                    let alpha = self.entry(i, q);
                    if alpha.abs() <= opts.pivot_tol {
                        continue;
                    }
                    let rate = -dir * alpha;
                    let (limit, to_upper) = if rate < 0.0 {
                        (self.x_b[i].max(0.0) / -rate, false)
                    } else {
                        let ub = self.upper[self.basis[i]];
                        if ub == INF {
                            continue;
                        }
                        ((ub - self.x_b[i]).max(0.0) / rate, true)
                    };
                    if limit > t_min + slack {
                        continue;
                    }
                    let take = if leave == NONE {
                        true
                    } else if bland {
                        self.basis[i] < self.basis[leave]
                    } else {
                        alpha.abs() > best_alpha
                    };
                    if take {
                        leave = i;
                        leave_to_upper = to_upper;
                        best_alpha = alpha.abs();
                    }
                }
            }
            let t = t_min;
            if t <= 1e-12 {
                degenerate_run += 1;
                stalled += 1;
            } else {
                degenerate_run = 0;
                stalled = 0;
            }
            if t > 0.0 {
                for i in 0..self.m {
                    let alpha = self.a[i * self.ncols + q];
                    if alpha != 0.0 {
                        self.x_b[i] -= dir * alpha * t;
                    }
                }
            }
            if flip {
                self.at_upper[q] = !self.at_upper[q];
                continue;
            }
            let r = leave;
            let leaving = self.basis[r];
            let start = if self.at_upper[q] { self.upper[q] } else { 0.0 };
            self.row_of[leaving] = NONE;
            self.at_upper[leaving] = leave_to_upper;
            self.basis[r] = q;
            self.row_of[q] = r;
            self.at_upper[q] = false;
            self.x_b[r] = start + dir * t;
            self.pivot(r, q);
        }
    }
}

fn failed(p: &LpProblem, status: LpStatus, iterations: usize) -> LpSolution {
    let objective_value = match status {
        LpStatus::Unbounded => f64::NEG_INFINITY,
        _ => f64::INFINITY,
    };
    LpSolution {
        status,
        x: vec![0.0; p.num_vars()],
        objective_value,
        iterations,
        duals: vec![0.0; p.num_constraints()],
        reduced_costs: vec![0.0; p.num_vars()],
    }
}

/// Row data kept for recovering duals.
struct RowMeta {
    sign: f64,
    factor: f64,
    original: usize,
    init_col: usize,
}

/// A tableau past phase 1: primal feasible for the constraints it was built
/// from, ready to be optimized for any objective over them.
pub(super) struct Prepared {
    maps: Vec<ColumnMap>,
    col_scale: Vec<f64>,
    structural: usize,
    meta: Vec<RowMeta>,
    t: Tableau,
    iterations: usize,
    max_iterations: usize,
    opts: SimplexOptions,
}

/// Builds the tableau and runs phase 1. `Err(status)` inside the result
/// reports an infeasible problem.
pub(super) fn prepare(p: &LpProblem, opts: &SimplexOptions) -> Result<std::result::Result<Prepared, LpSolution>> {
    let n = p.num_vars();
    if (0..n).any(|j| p.lower[j] > p.upper[j]) {
        return Ok(Err(failed(p, LpStatus::Infeasible, 0)));
    }

    // Columns in shifted space.
    let mut maps = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for j in 0..n {
        let (lo, hi) = (p.lower[j], p.upper[j]);
        if lo.is_finite() {
            maps.push(ColumnMap::Shift { col: upper.len(), lower: lo });
            upper.push(hi - lo);
        } else if hi.is_finite() {
            maps.push(ColumnMap::Mirror { col: upper.len(), upper: hi });
            upper.push(INF);
        } else {
            let pos = upper.len();
            maps.push(ColumnMap::Split { pos, neg: pos + 1 });
            upper.push(INF);
            upper.push(INF);
        }
    }
    let structural = upper.len();

    // Rows in shifted space, densified and equilibrated.
    struct Row {
        dense: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
        factor: f64,
        original: usize,
    }
    let mut rows = Vec::with_capacity(p.num_constraints());
    let mut scratch = vec![0.0; structural];
    let mut seen = vec![false; structural];
    let mut touched = Vec::new();
    for (r, con) in p.constraints.iter().enumerate() {
        let mut rhs = con.rhs;
        let mut add = |col: usize, v: f64| {
            if !seen[col] {
                seen[col] = true;
                touched.push(col);
            }
            scratch[col] += v;
        };
        for &(j, a) in &con.terms {
            match maps[j] {
                ColumnMap::Shift { col, lower } => {
                    add(col, a);
                    rhs -= a * lower;
                }
                ColumnMap::Mirror { col, upper } => {
                    add(col, -a);
                    rhs -= a * upper;
                }
                ColumnMap::Split { pos, neg } => {
                    add(pos, a);
                    add(neg, -a);
                }
            }
        }
        touched.sort_unstable();
        let mut dense: Vec<(usize, f64)> = touched.iter().map(|&c| (c, scratch[c])).filter(|&(_, v)| v != 0.0).collect();
        for &c in &touched {
            scratch[c] = 0.0;
            seen[c] = false;
        }
        touched.clear();
        let norm = dense.iter().fold(0.0f64, |acc, &(_, v)| acc.max(v.abs()));
        if norm == 0.0 {
            let ok = match con.relation {
                Relation::Le => 0.0 <= rhs + opts.feasibility_tol,
                Relation::Ge => 0.0 >= rhs - opts.feasibility_tol,
                Relation::Eq => rhs.abs() <= opts.feasibility_tol,
            };
            if !ok {
                return Ok(Err(failed(p, LpStatus::Infeasible, 0)));
            }
            continue;
        }
        let scale = 1.0 / norm;
        for e in dense.iter_mut() {
            e.1 *= scale;
        }
        rows.push(Row { dense, relation: con.relation, rhs: rhs * scale, factor: scale, original: r });
    }

    // Geometric scaling passes over columns then rows, finished by a max-norm
    // row pass. Column j is represented as col_scale[j] times its new column.
    let mut col_scale = vec![1.0; structural];
    for _ in 0..SCALING_PASSES {
        let mut lo = vec![INF; structural];
        let mut hi = vec![0.0f64; structural];
        for row in &rows {
            for &(c, v) in &row.dense {
                lo[c] = lo[c].min(v.abs());
                hi[c] = hi[c].max(v.abs());
            }
        }
        let f: Vec<f64> = (0..structural).map(|c| if hi[c] > 0.0 { 1.0 / (lo[c] * hi[c]).sqrt() } else { 1.0 }).collect();
        for row in rows.iter_mut() {
            for e in row.dense.iter_mut() {
                e.1 *= f[e.0];
            }
            let (lo, hi) = row.dense.iter().fold((INF, 0.0f64), |(l, h), &(_, v)| (l.min(v.abs()), h.max(v.abs())));
            let g = 1.0 / (lo * hi).sqrt();
            for e in row.dense.iter_mut() {
                e.1 *= g;
            }
            row.rhs *= g;
            row.factor *= g;
        }
        for (s, fc) in col_scale.iter_mut().zip(&f) {
            *s *= fc;
        }
    }
    for row in rows.iter_mut() {
        let g = 1.0 / row.dense.iter().fold(0.0f64, |acc, &(_, v)| acc.max(v.abs()));
        for e in row.dense.iter_mut() {
            e.1 *= g;
        }
        row.rhs *= g;
        row.factor *= g;
    }
    for (u, s) in upper.iter_mut().zip(&col_scale) {
        *u /= s;
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    // Decide which rows need an artificial.
    let mut sign = vec![1.0; m];
    let mut needs_art = vec![false; m];
    for (i, row) in rows.iter().enumerate() {
        if row.rhs < 0.0 {
            sign[i] = -1.0;
        }
        let slack_coef = match row.relation {
            Relation::Le => 1.0,
            Relation::Ge => -1.0,
            Relation::Eq => 0.0,
        } * sign[i];
        needs_art[i] = slack_coef != 1.0;
    }
    let n_art = needs_art.iter().filter(|&&b| b).count();
    let ncols = structural + n_slack + n_art;

    let mut t = Tableau {
        m,
        ncols,
        a: vec![0.0; m * ncols],
        x_b: vec![0.0; m],
        basis: vec![NONE; m],
        row_of: vec![NONE; ncols],
        at_upper: vec![false; ncols],
        upper: {
            let mut u = upper;
            u.resize(ncols, INF);
            u
        },
        d: Vec::new(),
        b0: Vec::new(),
        a0: Vec::new(),
        init_col: Vec::new(),
    };
    let mut init_col = vec![NONE; m];
    let mut next_slack = structural;
    let mut next_art = structural + n_slack;
    for (i, row) in rows.iter().enumerate() {
        let s = sign[i];
        let base = i * ncols;
        for &(c, v) in &row.dense {
            t.a[base + c] = s * v;
        }
        if row.relation != Relation::Eq {
            let coef = if row.relation == Relation::Le { 1.0 } else { -1.0 } * s;
            t.a[base + next_slack] = coef;
            if coef == 1.0 {
                init_col[i] = next_slack;
            }
            next_slack += 1;
        }
        if needs_art[i] {
            t.a[base + next_art] = 1.0;
            init_col[i] = next_art;
            next_art += 1;
        }
        t.basis[i] = init_col[i];
        t.row_of[init_col[i]] = i;
        t.x_b[i] = s * row.rhs;
    }
    t.b0 = t.x_b.clone();
    t.a0 = t.a.clone();
    t.init_col = init_col.clone();

    let max_iterations = opts.max_iterations.unwrap_or_else(|| (20 * (m + ncols)).max(10_000));
    let mut iterations = 0usize;

    if n_art > 0 {
        let mut phase1 = vec![0.0; ncols];
        for c in phase1.iter_mut().skip(structural + n_slack) {
            *c = 1.0;
        }
        t.d = t.price(&phase1);
        t.run_phase(opts, opts.optimality_tol, &mut iterations, max_iterations)?;
        let infeasibility: f64 = (0..m).filter(|&i| t.basis[i] >= structural + n_slack).map(|i| t.x_b[i]).sum::<f64>()
            + (structural + n_slack..ncols).filter(|&j| t.row_of[j] == NONE && t.at_upper[j]).map(|j| t.upper[j]).sum::<f64>();
        if infeasibility > opts.feasibility_tol {
            return Ok(Err(failed(p, LpStatus::Infeasible, iterations)));
        }
        for j in structural + n_slack..ncols {
            t.upper[j] = 0.0;
            t.at_upper[j] = false;
        }
    }

    let meta = rows
        .iter()
        .enumerate()
        .map(|(i, row)| RowMeta { sign: sign[i], factor: row.factor, original: row.original, init_col: init_col[i] })
        .collect();
    Ok(Ok(Prepared { maps, col_scale, structural, meta, t, iterations, max_iterations, opts: opts.clone() }))
}

impl Prepared {
    /// Phase 2 for the objective of `p`, starting from the current basis.
    /// `p` must have the constraints and bounds the tableau was built from.
    pub(super) fn optimize(&mut self, p: &LpProblem) -> Result<LpSolution> {
        let start_iterations = self.iterations;
        let opts = &self.opts;
        let structural = self.structural;
        let ncols = self.t.ncols;
        let maps = &self.maps;
        let t = &mut self.t;
        let mut cost = vec![0.0; structural];
        for (j, m) in maps.iter().enumerate() {
            let c = p.objective[j];
            match *m {
                ColumnMap::Shift { col, .. } => cost[col] = c,
                ColumnMap::Mirror { col, .. } => cost[col] = -c,
                ColumnMap::Split { pos, neg } => {
                    cost[pos] = c;
                    cost[neg] = -c;
                }
            }
        }
        for (c, s) in cost.iter_mut().zip(&self.col_scale) {
            *c *= s;
        }
        let mut iterations = self.iterations;
        let max_iterations = self.max_iterations + start_iterations;
        let mut phase2 = vec![0.0; ncols];
        phase2[..structural].copy_from_slice(&cost);
        let cmax = cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
        t.d = t.price(&phase2);
        match t.run_phase(opts, opts.optimality_tol * cmax, &mut iterations, max_iterations)? {
            PhaseEnd::Unbounded => {
                self.iterations = iterations;
                return Ok(failed(p, LpStatus::Unbounded, iterations - start_iterations));
            }
            PhaseEnd::Optimal => {}
        }

        // Shifted-space values, clamped into their boxes.
        let mut z = vec![0.0; structural];
        for (j, zj) in z.iter_mut().enumerate() {
            let v = if t.row_of[j] != NONE {
                t.x_b[t.row_of[j]]
            } else if t.at_upper[j] {
                t.upper[j]
            } else {
                0.0
            };
            *zj = v.max(0.0).min(t.upper[j]) * self.col_scale[j];
        }
        let x: Vec<f64> = maps
            .iter()
            .map(|m| match *m {
                ColumnMap::Shift { col, lower } => lower + z[col],
                ColumnMap::Mirror { col, upper } => upper - z[col],
                ColumnMap::Split { pos, neg } => z[pos] - z[neg],
            })
            .collect();

        let mut duals = vec![0.0; p.num_constraints()];
        for row in &self.meta {
            let y_scaled = -t.d[row.init_col];
            duals[row.original] = y_scaled * row.sign * row.factor;
        }
        let mut reduced_costs = p.objective.clone();
        for (con, y) in p.constraints.iter().zip(&duals) {
            if *y != 0.0 {
                for &(j, a) in &con.terms {
                    reduced_costs[j] -= y * a;
                }
            }
        }

        for (r, con) in p.constraints.iter().enumerate() {
            let scale = 1.0 + con.rhs.abs() + con.terms.iter().map(|&(j, a)| (a * x[j]).abs()).sum::<f64>();
            let v = con.violation(&x);
            if v > opts.feasibility_tol * scale {
                return Err(Error::Numerical(format!("row {r} violated by {v:e} after {iterations} iterations")));
            }
        }

        self.iterations = iterations;
        Ok(LpSolution {
            status: LpStatus::Optimal,
            objective_value: p.evaluate(&x),
            x,
            iterations: iterations - start_iterations,
            duals,
            reduced_costs,
        })
    }
}

pub(super) fn solve(p: &LpProblem, opts: &SimplexOptions) -> Result<LpSolution> {
    match prepare(p, opts)? {
        Ok(mut prep) => prep.optimize(p),
        Err(failed) => Ok(failed),
    }
}
