use std::time::Duration;

use nfvchain::harness::*;
use nfvchain::mining::RewardParams;
use nfvchain::model::NfvInstance;
use nfvchain::Error;

#[test]
fn nfv_generation_is_deterministic() {
    let p = NfvScenarioParams { seed: 17, ..Default::default() };
    let a = generate_nfv_scenario(&p).unwrap();
    let b = generate_nfv_scenario(&p).unwrap();
    assert_eq!(a, b);
    let c = generate_nfv_scenario(&NfvScenarioParams { seed: 18, ..p }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn cpu_demand_stays_within_one_to_five_segment_bandwidths() {
    for seed in 0..50 {
        let inst = generate_nfv_scenario(&NfvScenarioParams { seed, ..Default::default() }).unwrap();
        for s in &inst.sfcs {
            for (j, &c) in s.vnf_cpu.iter().enumerate() {
                let b = s.segment_bandwidth[j + 1];
                assert!(c >= b && c <= 5.0 * b, "seed {seed}: {c} vs {b}");
            }
        }
    }
}

#[test]
fn thousand_seeds_pass_validation_and_round_trip() {
    for seed in 0..1000 {
        let p = NfvScenarioParams { n_servers: 8 + (seed % 5) as usize, n_sfcs: 1 + (seed % 4) as usize, seed, ..Default::default() };
        let inst = generate_nfv_scenario(&p).unwrap();
        inst.validate().unwrap();
        let text = inst.to_json().unwrap();
        let back = NfvInstance::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text, "seed {seed}");
    }
}

#[test]
fn structural_parameters_are_checked() {
    let too_few = NfvScenarioParams { n_servers: 4, ..Default::default() };
    assert!(matches!(generate_nfv_scenario(&too_few), Err(Error::Domain(_))));
    let bad_range = NfvScenarioParams { bandwidth_range: Range::new(5.0, 1.0), ..Default::default() };
    assert!(matches!(generate_nfv_scenario(&bad_range), Err(Error::Domain(_))));
    let bad_density = NfvScenarioParams { link_density: 0.0, ..Default::default() };
    assert!(matches!(generate_nfv_scenario(&bad_density), Err(Error::Domain(_))));
    let bad_gamma = MiningScenarioParams { gamma: 1.5, ..Default::default() };
    assert!(matches!(generate_mining_scenario(&bad_gamma), Err(Error::Domain(_))));
}

#[test]
fn doubling_distance_drops_gain_eightfold() {
    let near = path_gain(1.3, 20.0, 3.0);
    let far = path_gain(1.3, 40.0, 3.0);
    assert!((near / far - 8.0).abs() < 1e-12);
}

#[test]
fn mining_generation_is_deterministic_with_exact_noise() {
    let p = MiningScenarioParams { n_miners: 4, seed: 5, ..Default::default() };
    let a = generate_mining_scenario(&p).unwrap();
    assert_eq!(a, generate_mining_scenario(&p).unwrap());
    assert_eq!(a.len(), 4);
    for t in &a {
        assert_eq!(t.participants.len(), 5);
        assert!(t.participants.iter().all(|q| q.noise == 1e-14));
        assert!(t.participants.iter().all(|q| q.channel_gain > 0.0));
    }
    // The pool is shared, so capacities agree across miners.
    for k in 0..5 {
        assert_eq!(a[0].participants[k].cpu_capacity, a[3].participants[k].cpu_capacity);
    }
}

#[test]
fn default_parameters_are_pinned() {
    let n = NfvScenarioParams::default();
    assert_eq!(n.vnf_count_range, (3, 8));
    assert_eq!(n.bandwidth_range, Range::new(100.0, 500.0));
    assert_eq!(n.cpu_demand_multiplier_range, Range::new(1.0, 5.0));
    assert_eq!(n.server_capacity_range, Range::new(1.0, 10.0));
    assert_eq!(n.link_bandwidth_range, Range::new(100.0, 500.0));
    assert_eq!(n.proc_power_range, Range::new(1.0, 5.0));
    assert_eq!(n.static_power_range, Range::new(1.0, 10.0));
    assert_eq!(n.server_price_range, Range::new(0.1, 1.0));
    assert_eq!(n.link_price_range, Range::new(0.1, 1.0));
    assert_eq!(n.alpha, 0.5);
    assert_eq!(n.t_th, 0.02);
    assert_eq!(n.link_density, 0.4);
    assert_eq!(n.demand_scale, 1.0);

    let m = MiningScenarioParams::default();
    assert_eq!(m.n_participants, 5);
    assert_eq!(m.noise, 1e-14);
    assert_eq!(m.price_range, Range::new(1.0, 10.0));
    assert_eq!(m.capacity_range, Range::new(100.0, 500.0));
    assert_eq!(m.proc_power_range, Range::new(0.1, 0.9));
    assert_eq!(m.tx_power_range, Range::new(1e-3, 1e-2));
    assert_eq!(m.gamma, 0.5);
    assert_eq!(m.path_loss_exponent, 3.0);
    assert_eq!(m.reward, RewardParams { r_const: 12.5, r_trans: 0.01, n_trans: 5.0, lambda: 1.0 / 600.0, z: 0.01 });
}

#[test]
fn sweep_row_counts() {
    let mut cfg = SweepConfig::new(Axis::NServers, vec![10.0, 15.0, 20.0]);
    cfg.snapshots = 5;
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 15);
    let agg = aggregate(&rows);
    assert_eq!(agg.len(), 3);
    assert!(agg.iter().all(|a| a.snapshots == 5 && a.solver == Solver::Hura));
    let mut buf = Vec::new();
    write_detail_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), DETAIL_HEADER.join(","));
    assert_eq!(text.lines().count(), 16);
}

fn detail(cfg: &SweepConfig) -> String {
    let mut buf = Vec::new();
    write_detail_csv(&run_sweep(cfg).unwrap(), &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn sweep_output_ignores_thread_count() {
    let mut cfg = SweepConfig::new(Axis::NSfcs, vec![2.0, 4.0]);
    cfg.snapshots = 6;
    cfg.nfv.n_servers = 10;
    cfg.threads = Some(1);
    let one = detail(&cfg);
    cfg.threads = Some(4);
    assert_eq!(one, detail(&cfg));
    assert_eq!(one, detail(&cfg));
}

#[test]
fn mining_sweeps_produce_mo_rows() {
    let mut cfg = SweepConfig::new(Axis::NMiners, vec![1.0, 3.0]);
    cfg.snapshots = 4;
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.solver == Solver::Mo && r.routing_cost == 0.0));
    cfg.solvers = vec![Solver::Hura];
    assert!(matches!(run_sweep(&cfg), Err(Error::Domain(_))));
}

#[test]
fn timed_out_rows_are_flagged_not_dropped() {
    let mut cfg = SweepConfig::new(Axis::NSfcs, vec![2.0]);
    cfg.snapshots = 3;
    cfg.nfv.n_servers = 10;
    cfg.timing = true;
    cfg.timeout = Some(Duration::ZERO);
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.feasible == Feasible::Timeout && r.runtime_ms.is_some()));
}

#[test]
fn empty_sweeps_and_unknown_axes_are_rejected() {
    assert!(matches!(run_sweep(&SweepConfig::new(Axis::NServers, vec![])), Err(Error::Domain(_))));
    assert!("bogus".parse::<Axis>().is_err());
    for a in Axis::ALL {
        assert_eq!(a.name().parse::<Axis>().unwrap(), a);
    }
}

#[test]
fn aggregate_skips_infeasible_snapshots() {
    let row = |v: f64, obj: f64, feasible| SweepRow {
        axis_value: v,
        seed: 0,
        solver: Solver::Hura,
        objective: obj,
        energy: 1.0,
        cost: 1.0,
        routing_cost: 0.5,
        mean_delay: 0.01,
        active_servers: 2,
        runtime_ms: None,
        feasible,
    };
    let rows = vec![
        row(1.0, 4.0, Feasible::Yes),
        row(1.0, f64::NAN, Feasible::No),
        row(1.0, 6.0, Feasible::Yes),
        row(0.5, 1.0, Feasible::Timeout),
    ];
    let agg = aggregate(&rows);
    assert_eq!(agg[0].axis_value, 0.5);
    assert!(agg[0].objective.is_nan() && agg[0].feasible == 0);
    assert_eq!((agg[1].snapshots, agg[1].feasible, agg[1].objective), (3, 2, 5.0));
}

#[test]
fn ranks_average_ties() {
    assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
}

#[test]
fn trend_test_exact_p_values() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let up = [0.1, 0.5, 0.7, 1.0, 1.1, 2.0];
    let r = trend_test(&x, &up, Direction::Increasing).unwrap();
    assert_eq!(r.rho, 1.0);
    assert!((r.p_value - 1.0 / 720.0).abs() < 1e-15);
    let r = trend_test(&x, &up, Direction::Decreasing).unwrap();
    assert_eq!(r.p_value, 1.0);
    assert!(trend_test(&[1.0; 11], &[1.0; 11], Direction::Increasing).is_err());
    assert!(matches!(spearman(&[1.0], &[1.0]), Err(Error::Dimension(_))));
}
