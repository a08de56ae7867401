//! Linear programming substrate.
//!
//! Every optimization problem in this crate that is linear once the binary
//! decisions are fixed or relaxed (placement relaxations, the majorizing
//! surrogate, routing, mining offload) is expressed as an [`LpProblem`] and
//! solved by [`solve_lp`], a dense bounded-variable primal simplex.
//!
//! Problems are always *minimized*. Constraints are stored sparsely; the
//! solver densifies them into its own tableau.

mod simplex;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use simplex::SimplexOptions;

/// Sense of a linear constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// One row `Σ coef·x (rel) rhs`, stored as `(variable, coefficient)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `minimize cᵀx + offset  s.t.  rows, lower ≤ x ≤ upper`.
///
/// Bounds may be infinite. New variables default to `[0, +∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            objective: vec![0.0; num_vars],
            objective_offset: 0.0,
            constraints: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint { terms, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(x));
        let bounds = x.iter().enumerate().map(|(j, &v)| (self.lower[j] - v).max(v - self.upper[j]).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Dimension(format!("objective has {n} entries but bounds have {}/{}", self.lower.len(), self.upper.len())));
        }
        if !self.objective_offset.is_finite() || self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("objective coefficients must be finite".into()));
        }
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::Domain(format!("variable {j} has invalid bounds [{lo}, {hi}]")));
            }
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(Error::Domain(format!("row {r} has non-finite rhs")));
            }
            for &(j, a) in &c.terms {
                if j >= n {
                    return Err(Error::Dimension(format!("row {r} references variable {j} of {n}")));
                }
                if !a.is_finite() {
                    return Err(Error::Domain(format!("row {r} has non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump, one constraint per line, for diffing against other
    /// solvers.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "minimize");
        for (j, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                let _ = write!(out, " {c:+e} x{j}");
            }
        }
        let _ = writeln!(out, " {:+e}", self.objective_offset);
        for (r, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, "r{r}:");
            for &(j, a) in &c.terms {
                let _ = write!(out, " {a:+e} x{j}");
            }
            let _ = writeln!(out, " {} {:e}", c.relation.symbol(), c.rhs);
        }
        for j in 0..self.num_vars() {
            let _ = writeln!(out, "bound x{j} [{:e}, {:e}]", self.lower[j], self.upper[j]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve_lp`].
///
/// When `status` is `Optimal`, `duals` holds one multiplier per constraint
/// row and `reduced_costs` holds `c − Aᵀy` per variable; together they
/// certify `objective_value = bᵀy + Σ reduced_cost·x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Value of the dual certificate `bᵀy + Σ_j d_j x_j + offset`.
    pub fn dual_objective(&self, p: &LpProblem) -> f64 {
        let by: f64 = p.constraints.iter().zip(&self.duals).map(|(c, y)| c.rhs * y).sum();
        let bounds: f64 = self.reduced_costs.iter().zip(&self.x).map(|(d, v)| d * v).sum();
        by + bounds + p.objective_offset
    }
}

/// Solves `p` with default pivoting tolerances and feasibility tolerance `tol`.
pub fn solve_lp(p: &LpProblem, tol: f64) -> Result<LpSolution> {
    let opts = SimplexOptions { feasibility_tol: tol, ..SimplexOptions::default() };
    solve_lp_with(p, &opts)
}

pub fn solve_lp_with(p: &LpProblem, opts: &SimplexOptions) -> Result<LpSolution> {
    if !(opts.feasibility_tol >= 0.0) {
        return Err(Error::Domain("feasibility tolerance must be non-negative".into()));
    }
    p.validate()?;
    simplex::solve(p, opts)
}

/// A problem whose constraints stay fixed while its objective changes.
///
/// Phase 1 runs once; each [`WarmLp::solve`] restarts phase 2 from the
/// previous optimal basis, which usually needs few pivots.
pub struct WarmLp {
    problem: LpProblem,
    state: std::result::Result<simplex::Prepared, LpSolution>,
}

impl WarmLp {
    pub fn new(p: &LpProblem, tol: f64) -> Result<Self> {
        let opts = SimplexOptions { feasibility_tol: tol, ..SimplexOptions::default() };
        if !(tol >= 0.0) {
            return Err(Error::Domain("feasibility tolerance must be non-negative".into()));
        }
        p.validate()?;
        Ok(WarmLp { problem: p.clone(), state: simplex::prepare(p, &opts)? })
    }

    /// Minimizes `objective·x + offset` over the fixed constraints.
    pub fn solve(&mut self, objective: &[f64], offset: f64) -> Result<LpSolution> {
        if objective.len() != self.problem.num_vars() {
            return Err(Error::Dimension(format!("objective has {} entries, expected {}", objective.len(), self.problem.num_vars())));
        }
        self.problem.objective.copy_from_slice(objective);
        self.problem.objective_offset = offset;
        match &mut self.state {
            Ok(prep) => prep.optimize(&self.problem),
            Err(failed) => Ok(failed.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_bound() {
        let mut p = LpProblem::new(1);
        p.objective[0] = 1.0;
        p.add_constraint(vec![(0, 1.0)], Relation::Ge, 3.0);
        p.add_constraint(vec![(0, 1.0)], Relation::Le, 10.0);
        let s = solve_lp(&p, 1e-6).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_simplex_vertex() {
        let mut p = LpProblem::new(2);
        p.objective = vec![-1.0, -1.0];
        p.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.0);
        let s = solve_lp(&p, 1e-6).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut p = LpProblem::new(1);
        p.objective[0] = 1.0;
        p.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        p.add_constraint(vec![(0, 1.0)], Relation::Ge, 1.0);
        p.add_constraint(vec![(0, 1.0)], Relation::Le, 0.0);
        assert_eq!(solve_lp(&p, 1e-6).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut p = LpProblem::new(1);
        p.objective[0] = 1.0;
        p.set_bounds(0, 1.0, 0.0);
        assert_eq!(solve_lp(&p, 1e-6).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut p = LpProblem::new(2);
        p.objective = vec![-1.0, 0.0];
        p.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0);
        assert_eq!(solve_lp(&p, 1e-6).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_upper_only_variables() {
        // min x - y, x free with x >= -2 as a row, y <= 4 upper-only.
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, -1.0];
        p.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        p.set_bounds(1, f64::NEG_INFINITY, 4.0);
        p.add_constraint(vec![(0, 1.0)], Relation::Ge, -2.0);
        let s = solve_lp(&p, 1e-6).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] + 2.0).abs() < 1e-9 && (s.x[1] - 4.0).abs() < 1e-9);
        assert!((s.objective_value + 6.0).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut p = LpProblem::new(1);
        p.add_constraint(vec![(3, 1.0)], Relation::Le, 1.0);
        assert!(matches!(solve_lp(&p, 1e-6), Err(Error::Dimension(_))));
        let mut q = LpProblem::new(2);
        q.lower.pop();
        assert!(matches!(solve_lp(&q, 1e-6), Err(Error::Dimension(_))));
    }

    #[test]
    fn iteration_limit_is_reported() {
        let mut p = LpProblem::new(3);
        p.objective = vec![-1.0, -2.0, -3.0];
        p.add_constraint(vec![(0, 1.0), (1, 1.0), (2, 1.0)], Relation::Le, 4.0);
        p.add_constraint(vec![(0, 1.0), (1, 3.0)], Relation::Le, 6.0);
        p.add_constraint(vec![(1, 1.0), (2, 2.0)], Relation::Ge, 1.0);
        let opts = SimplexOptions { max_iterations: Some(0), ..Default::default() };
        assert!(matches!(solve_lp_with(&p, &opts), Err(Error::IterationLimit(0))));
    }

    #[test]
    fn dual_certificate_matches_primal() {
        let mut p = LpProblem::new(3);
        p.objective = vec![2.0, 3.0, -1.0];
        p.set_bounds(2, 0.0, 5.0);
        p.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 2.0);
        p.add_constraint(vec![(0, 1.0), (2, 1.0)], Relation::Le, 7.0);
        p.add_constraint(vec![(1, 2.0), (2, -1.0)], Relation::Eq, -1.0);
        let s = solve_lp(&p, 1e-6).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.dual_objective(&p) - s.objective_value).abs() < 1e-9);
    }

    #[test]
    fn text_dump_has_one_line_per_row() {
        let mut p = LpProblem::new(2);
        p.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
        p.add_constraint(vec![(1, 2.0)], Relation::Eq, 3.0);
        let text = p.to_text();
        assert_eq!(text.lines().filter(|l| l.starts_with('r')).count(), 2);
        assert!(text.contains("r1: +2e0 x1 = 3e0"));
    }
}
