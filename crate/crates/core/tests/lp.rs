#![allow(clippy::needless_range_loop)]

use nfvchain::formulation::build_relaxation;
use nfvchain::harness::{generate_nfv_scenario, NfvScenarioParams};
use nfvchain::hura::{hungarian, AssignmentMatrix};
use nfvchain::lp::{solve_lp, LpProblem, LpStatus, Relation, WarmLp};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assignment_lp(cost: &[Vec<f64>]) -> LpProblem {
    let n = cost.len();
    let mut p = LpProblem::new(n * n);
    for r in 0..n {
        for c in 0..n {
            p.objective[r * n + c] = cost[r][c];
        }
        p.add_constraint((0..n).map(|c| (r * n + c, 1.0)).collect(), Relation::Eq, 1.0);
    }
    for c in 0..n {
        p.add_constraint((0..n).map(|r| (r * n + c, 1.0)).collect(), Relation::Eq, 1.0);
    }
    p
}

#[test]
fn degenerate_assignment_lps_match_hungarian() {
    // Assignment polytopes are highly degenerate; small integer costs add ties.
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 4 + (seed % 13) as usize;
        let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(0..4) as f64).collect()).collect();
        let lp = solve_lp(&assignment_lp(&cost), 1e-9).unwrap();
        let h = hungarian(&AssignmentMatrix::from_rows(cost.clone(), f64::INFINITY).unwrap()).unwrap();
        assert_eq!(lp.status, LpStatus::Optimal);
        assert!((lp.objective_value - h.total).abs() < 1e-7, "seed {seed}: {} vs {}", lp.objective_value, h.total);
    }
}

#[test]
fn cut_augmented_relaxation_is_certified_by_its_duals() {
    let p = NfvScenarioParams { n_servers: 12, n_sfcs: 4, vnf_count_range: (3, 5), seed: 1, ..Default::default() };
    let inst = generate_nfv_scenario(&p).unwrap();
    let f = build_relaxation(&inst).unwrap();
    let s = solve_lp(&f.lp, 1e-6).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!(f.lp.max_violation(&s.x) <= 1e-6);
    let gap = (s.dual_objective(&f.lp) - s.objective_value).abs();
    assert!(gap <= 1e-6 * s.objective_value.abs().max(1.0), "duality gap {gap}");
}

#[test]
fn warm_resolves_match_cold_solves() {
    let p = NfvScenarioParams { n_servers: 5, n_sfcs: 2, vnf_count_range: (2, 3), seed: 4, ..Default::default() };
    let inst = generate_nfv_scenario(&p).unwrap();
    let f = build_relaxation(&inst).unwrap();
    let mut warm = WarmLp::new(&f.lp, 1e-6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for round in 0..6 {
        let c: Vec<f64> = f.lp.objective.iter().map(|v| v + rng.random_range(-1.0..1.0) * 10.0).collect();
        let cold = solve_lp(&LpProblem { objective: c.clone(), objective_offset: 2.0, ..f.lp.clone() }, 1e-6).unwrap();
        let hot = warm.solve(&c, 2.0).unwrap();
        assert_eq!(cold.status, hot.status);
        assert!((cold.objective_value - hot.objective_value).abs() <= 1e-6 * cold.objective_value.abs().max(1.0), "round {round}");
    }
}

#[test]
fn objective_offset_shifts_the_value_only() {
    let mut p = LpProblem::new(2);
    p.objective = vec![-1.0, -1.0];
    p.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.0);
    let a = solve_lp(&p, 1e-9).unwrap();
    p.objective_offset = 5.0;
    let b = solve_lp(&p, 1e-9).unwrap();
    assert_eq!(a.x, b.x);
    assert!((b.objective_value - a.objective_value - 5.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn transportation_lps_conserve_supply(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (rng.random_range(2..5), rng.random_range(2..5));
        let supply: Vec<f64> = (0..m).map(|_| rng.random_range(1..6) as f64).collect();
        let total: f64 = supply.iter().sum();
        let mut demand: Vec<f64> = vec![(total / n as f64).floor(); n];
        demand[0] += total - demand.iter().sum::<f64>();
        let mut p = LpProblem::new(m * n);
        for v in p.objective.iter_mut() {
            *v = rng.random_range(0..3) as f64;
        }
        for (i, s) in supply.iter().enumerate() {
            p.add_constraint((0..n).map(|j| (i * n + j, 1.0)).collect(), Relation::Eq, *s);
        }
        for (j, d) in demand.iter().enumerate() {
            p.add_constraint((0..m).map(|i| (i * n + j, 1.0)).collect(), Relation::Ge, *d);
        }
        let s = solve_lp(&p, 1e-9).unwrap();
        prop_assert_eq!(s.status, LpStatus::Optimal);
        prop_assert!(p.max_violation(&s.x) <= 1e-7);
        prop_assert!((s.dual_objective(&p) - s.objective_value).abs() <= 1e-7);
    }
}
