//! Vertex-enumeration oracle for tiny LPs.
//!
//! Every constraint and every (finite or boxed) bound is turned into a
//! half-space; all n-subsets are solved as square systems and the feasible
//! ones scored. Infinite bounds are replaced by a box of half-width `M`;
//! comparing the optimum for two box sizes detects unboundedness.

use nfvchain::lp::{LpProblem, Relation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleVerdict {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

struct HalfSpace {
    a: Vec<f64>,
    b: f64,
    eq: bool,
}

fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..n {
                        m[r][c] -= f * m[col][c];
                    }
                    rhs[r] -= f * rhs[col];
                }
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

fn boxed_optimum(p: &LpProblem, big: f64) -> Option<f64> {
    let n = p.num_vars();
    let mut hs = Vec::new();
    for c in &p.constraints {
        let mut a = vec![0.0; n];
        for &(j, v) in &c.terms {
            a[j] += v;
        }
        match c.relation {
            Relation::Le => hs.push(HalfSpace { a, b: c.rhs, eq: false }),
            Relation::Ge => hs.push(HalfSpace { a: a.iter().map(|v| -v).collect(), b: -c.rhs, eq: false }),
            Relation::Eq => hs.push(HalfSpace { a, b: c.rhs, eq: true }),
        }
    }
    for j in 0..n {
        let mut up = vec![0.0; n];
        up[j] = 1.0;
        let hi = if p.upper[j].is_finite() { p.upper[j] } else { big };
        hs.push(HalfSpace { a: up, b: hi, eq: false });
        let mut lo = vec![0.0; n];
        lo[j] = -1.0;
        let l = if p.lower[j].is_finite() { p.lower[j] } else { -big };
        hs.push(HalfSpace { a: lo, b: -l, eq: false });
    }
    let mut best: Option<f64> = None;
    combinations(hs.len(), n, &mut |idx| {
        let m: Vec<Vec<f64>> = idx.iter().map(|&i| hs[i].a.clone()).collect();
        let rhs: Vec<f64> = idx.iter().map(|&i| hs[i].b).collect();
        let Some(x) = solve_square(m, rhs) else { return };
        let feasible = hs.iter().all(|h| {
            let lhs: f64 = h.a.iter().zip(&x).map(|(a, v)| a * v).sum();
            let scale: f64 = h.a.iter().zip(&x).map(|(a, v)| (a * v).abs()).sum();
            let tol = 1e-9 * (1.0 + h.b.abs() + scale);
            if h.eq {
                (lhs - h.b).abs() <= tol
            } else {
                lhs <= h.b + tol
            }
        });
        if feasible {
            let v = p.evaluate(&x);
            if best.is_none_or(|b| v < b) {
                best = Some(v);
            }
        }
    });
    best
}

pub fn oracle(p: &LpProblem) -> OracleVerdict {
    if (0..p.num_vars()).any(|j| p.lower[j] > p.upper[j]) {
        return OracleVerdict::Infeasible;
    }
    match (boxed_optimum(p, 1e6), boxed_optimum(p, 1e7)) {
        (None, _) | (_, None) => OracleVerdict::Infeasible,
        (Some(a), Some(b)) => {
            if b < a - 1e-6 * (1.0 + a.abs()) {
                OracleVerdict::Unbounded
            } else {
                OracleVerdict::Optimal(a)
            }
        }
    }
}

/// A random LP with ≤ 6 variables, ≤ 6 rows, integer data in [−5, 5].
pub fn random_lp(seed: u64) -> LpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=6);
    let m = rng.random_range(1..=6);
    let mut p = LpProblem::new(n);
    for c in p.objective.iter_mut() {
        *c = rng.random_range(-5..=5) as f64;
    }
    for j in 0..n {
        let lo = match rng.random_range(0..10) {
            0 => f64::NEG_INFINITY,
            1..=3 => rng.random_range(-3..=0) as f64,
            _ => 0.0,
        };
        let hi = match rng.random_range(0..10) {
            0..=5 => f64::INFINITY,
            _ => {
                let base = if lo.is_finite() { lo } else { 0.0 };
                base + rng.random_range(0..=6) as f64
            }
        };
        p.set_bounds(j, lo, hi);
    }
    for _ in 0..m {
        let terms: Vec<(usize, f64)> = (0..n)
            .filter_map(|j| {
                let v = rng.random_range(-5..=5);
                (v != 0).then_some((j, v as f64))
            })
            .collect();
        let relation = match rng.random_range(0..7) {
            0..=2 => Relation::Le,
            3..=4 => Relation::Ge,
            _ => Relation::Eq,
        };
        let rhs = rng.random_range(-10..=10) as f64;
        p.add_constraint(terms, relation, rhs);
    }
    p
}
