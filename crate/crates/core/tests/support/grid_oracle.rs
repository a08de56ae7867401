//! Grid search over f₁ for one miner with two participants (f₂ = 1 − f₁).
//!
//! The coarse 10⁻³ grid misses optima sitting on a capacity or delay
//! boundary between grid points, so the best point is refined with nested
//! 1001-point grids around it down to a 10⁻¹² step.

use nfvchain::mining::{mining_energy, offload_cost, reward, MiningTask, RewardParams};

pub fn objective_at(tasks: &[MiningTask], f1: f64, gamma: f64, rp: &RewardParams) -> f64 {
    let f = vec![vec![f1, 1.0 - f1]];
    let rw: f64 = tasks.iter().map(|t| reward(t, tasks, rp).unwrap()).sum();
    gamma * mining_energy(tasks, &f).unwrap() + (1.0 - gamma) * (offload_cost(tasks, &f).unwrap() - rw)
}

/// Capacity and delay limits written out directly.
pub fn feasible(t: &MiningTask, f1: f64) -> bool {
    [f1, 1.0 - f1].iter().enumerate().all(|(k, &w)| {
        let p = &t.participants[k];
        let rate = (t.tx_power[k] * p.channel_gain / p.noise + 1.0).log2();
        let time = w * t.size_bits / rate + w * t.size_bits * t.cycles_per_bit / p.cpu_capacity;
        w * t.size_bits * t.cycles_per_bit <= p.cpu_capacity * (1.0 + 1e-12) && time <= t.max_delay * (1.0 + 1e-12)
    })
}

/// (best objective on the 10⁻³ grid, best after refinement); `None` when no
/// grid point is feasible.
pub fn grid_minimum(tasks: &[MiningTask], gamma: f64, rp: &RewardParams) -> Option<(f64, f64)> {
    let best_on = |lo: f64, hi: f64| -> Option<(f64, f64)> {
        (0..=1000)
            .map(|i| lo + (hi - lo) * i as f64 / 1000.0)
            .filter(|f1| (0.0..=1.0).contains(f1) && feasible(&tasks[0], *f1))
            .map(|f1| (objective_at(tasks, f1, gamma, rp), f1))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    };
    let (coarse, mut at) = best_on(0.0, 1.0)?;
    let mut fine = coarse;
    let mut step = 1e-3;
    while step > 1e-12 {
        if let Some((v, f1)) = best_on(at - step, at + step) {
            if v < fine {
                fine = v;
                at = f1;
            }
        }
        step *= 2e-3;
    }
    Some((coarse, fine))
}
