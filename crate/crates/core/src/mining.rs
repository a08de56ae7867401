//! Offloading of PoW mining work from miners to participating devices.
//!
//! A participant id may appear in several tasks; every occurrence must carry
//! the same capacity and processing power, and the capacity is shared by all
//! miners offloading to it. Price, channel gain and noise are per (miner,
//! participant) pair.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus, Relation};
use crate::model::DEFAULT_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: u32,
    /// F_k^max in cycles per second.
    pub cpu_capacity: f64,
    /// p̃_k in watts.
    pub proc_power: f64,
    /// cost_{i,k} per CPU cycle.
    pub unit_price: f64,
    /// h_{i,k}.
    pub channel_gain: f64,
    /// σ_k in watts.
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningTask {
    pub miner_id: u32,
    /// D_i in bits.
    pub size_bits: f64,
    /// C_i in cycles per bit.
    pub cycles_per_bit: f64,
    /// p_{i,k} in watts, one per participant.
    pub tx_power: Vec<f64>,
    pub participants: Vec<Participant>,
    /// T_i^mine in seconds.
    pub max_delay: f64,
}

impl MiningTask {
    pub fn demand(&self) -> f64 {
        self.size_bits * self.cycles_per_bit
    }

    pub fn rate(&self, k: usize) -> Result<f64> {
        let p = &self.participants[k];
        data_rate(self.tx_power[k], p.channel_gain, p.noise)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub r_const: f64,
    pub r_trans: f64,
    pub n_trans: f64,
    /// Block-generation rate in 1/s.
    pub lambda: f64,
    pub z: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams { r_const: 12.5, r_trans: 0.01, n_trans: 5.0, lambda: 1.0 / 600.0, z: 0.01 }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.r_const, self.r_trans, self.n_trans, self.z].iter().all(|v| *v >= 0.0 && v.is_finite())
            && self.lambda > 0.0
            && self.lambda.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("reward parameters must be non-negative with a positive rate".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffloadSolution {
    /// `f[i][k]` per task and participant position.
    pub f: Vec<Vec<f64>>,
    /// G, including the reward term.
    pub objective_value: f64,
    pub energy: f64,
    pub cost: f64,
    pub rewards: Vec<f64>,
}

/// log₂(1 + p·h/σ) in bits per second.
pub fn data_rate(tx_power: f64, gain: f64, noise: f64) -> Result<f64> {
    if !(noise > 0.0) {
        return Err(Error::Domain(format!("noise power {noise} must be positive")));
    }
    Ok((tx_power * gain / noise).ln_1p() / std::f64::consts::LN_2)
}

fn check_shape(tasks: &[MiningTask], f: &[Vec<f64>]) -> Result<()> {
    if f.len() != tasks.len() || tasks.iter().zip(f).any(|(t, r)| r.len() != t.participants.len()) {
        return Err(Error::Dimension("offload weights do not match the tasks".into()));
    }
    Ok(())
}

/// Per-(task, participant) energy coefficient: energy = Σ coef·f.
fn energy_coefficient(t: &MiningTask, k: usize) -> Result<f64> {
    let r = t.rate(k)?;
    let p = &t.participants[k];
    let tx = if r > 0.0 { t.tx_power[k] * t.size_bits / r } else { f64::INFINITY };
    Ok(tx + p.proc_power * t.demand() / p.cpu_capacity)
}

/// Transmission plus processing energy of all offloaded portions.
pub fn mining_energy(tasks: &[MiningTask], f: &[Vec<f64>]) -> Result<f64> {
    check_shape(tasks, f)?;
    let mut e = 0.0;
    for (t, row) in tasks.iter().zip(f) {
        for (k, &w) in row.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let r = t.rate(k)?;
            if r == 0.0 {
                return Err(Error::Domain(format!("miner {} has a zero-rate link to participant {k}", t.miner_id)));
            }
            let p = &t.participants[k];
            e += t.tx_power[k] * w * t.size_bits / r + p.proc_power * w * t.demand() / p.cpu_capacity;
        }
    }
    Ok(e)
}

/// Payment Σ cost_{i,k}·f·D_i·C_i.
pub fn offload_cost(tasks: &[MiningTask], f: &[Vec<f64>]) -> Result<f64> {
    check_shape(tasks, f)?;
    Ok(tasks
        .iter()
        .zip(f)
        .map(|(t, row)| row.iter().enumerate().map(|(k, w)| t.participants[k].unit_price * w * t.demand()).sum::<f64>())
        .sum())
}

/// 1 − exp(−λ·z·N).
pub fn orphan_probability(rp: &RewardParams) -> f64 {
    -(-rp.lambda * rp.z * rp.n_trans).exp_m1()
}

/// Share D_iC_i/ΣD_jC_j of (R_const + N·R_trans), discounted by the
/// probability that the block is not orphaned.
pub fn reward(task: &MiningTask, all_tasks: &[MiningTask], rp: &RewardParams) -> Result<f64> {
    if all_tasks.is_empty() {
        return Err(Error::Domain("reward needs at least one task".into()));
    }
    let total: f64 = all_tasks.iter().map(MiningTask::demand).sum();
    if !(total > 0.0) {
        return Err(Error::Domain("total mining demand must be positive".into()));
    }
    Ok(task.demand() / total * (rp.r_const + rp.n_trans * rp.r_trans) * (1.0 - orphan_probability(rp)))
}

fn validate_tasks(tasks: &[MiningTask]) -> Result<BTreeMap<u32, (f64, f64)>> {
    let mut pool = BTreeMap::new();
    for t in tasks {
        if !(t.size_bits > 0.0 && t.cycles_per_bit > 0.0) {
            return Err(Error::InvalidInstance(format!("miner {} needs positive size and cycles per bit", t.miner_id)));
        }
        if t.participants.is_empty() {
            return Err(Error::InvalidInstance(format!("miner {} has no participants", t.miner_id)));
        }
        if t.tx_power.len() != t.participants.len() {
            return Err(Error::Dimension(format!("miner {} needs one transmit power per participant", t.miner_id)));
        }
        if !(t.max_delay > 0.0) {
            return Err(Error::InvalidInstance(format!("miner {} needs a positive max delay", t.miner_id)));
        }
        for p in &t.participants {
            let ok = p.cpu_capacity > 0.0 && p.proc_power >= 0.0 && p.unit_price >= 0.0 && p.channel_gain >= 0.0 && p.noise >= 0.0;
            if !ok {
                return Err(Error::InvalidInstance(format!("participant {} has invalid parameters", p.id)));
            }
            match pool.get(&p.id) {
                None => {
                    pool.insert(p.id, (p.cpu_capacity, p.proc_power));
                }
                Some(&(c, w)) if c == p.cpu_capacity && w == p.proc_power => {}
                Some(_) => {
                    return Err(Error::InvalidInstance(format!("participant {} appears with different capacities", p.id)));
                }
            }
        }
    }
    Ok(pool)
}

/// Minimizes γ·energy + (1−γ)·(payment − Σ rewards) over the offload weights.
///
/// The max-delay constraint is imposed per (miner, participant) pair, which
/// is exact for a maximum of linear terms. Rewards do not depend on f and
/// enter as a constant offset.
pub fn mo_solve(tasks: &[MiningTask], gamma: f64, rp: &RewardParams) -> Result<OffloadSolution> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("gamma {gamma} outside [0, 1]")));
    }
    rp.validate()?;
    let pool = validate_tasks(tasks)?;
    let mut starts = Vec::with_capacity(tasks.len());
    let mut nvars = 0;
    for t in tasks {
        starts.push(nvars);
        nvars += t.participants.len();
    }
    let mut lp = LpProblem::new(nvars);
    let rewards: Vec<f64> = tasks.iter().map(|t| reward(t, tasks, rp)).collect::<Result<_>>()?;
    lp.objective_offset = -(1.0 - gamma) * rewards.iter().sum::<f64>();
    for (i, t) in tasks.iter().enumerate() {
        for (k, p) in t.participants.iter().enumerate() {
            let v = starts[i] + k;
            let r = t.rate(k)?;
            if r > 0.0 {
                lp.objective[v] = gamma * energy_coefficient(t, k)? + (1.0 - gamma) * p.unit_price * t.demand();
                let per_unit = t.size_bits / r + t.demand() / p.cpu_capacity;
                lp.add_constraint(vec![(v, per_unit)], Relation::Le, t.max_delay);
            } else {
                // Nothing can be sent over a zero-rate link.
                lp.set_bounds(v, 0.0, 0.0);
            }
        }
        let terms = (0..t.participants.len()).map(|k| (starts[i] + k, 1.0)).collect();
        lp.add_constraint(terms, Relation::Eq, 1.0);
    }
    for (&id, &(cap, _)) in &pool {
        let terms: Vec<(usize, f64)> = tasks
            .iter()
            .enumerate()
            .flat_map(|(i, t)| {
                let base = starts[i];
                t.participants.iter().enumerate().filter(|(_, p)| p.id == id).map(move |(k, _)| (base + k, t.demand()))
            })
            .collect();
        lp.add_constraint(terms, Relation::Le, cap);
    }
    let sol = solve_lp(&lp, DEFAULT_TOL)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Infeasible("offloading constraints admit no weights".into()));
    }
    let f: Vec<Vec<f64>> =
        tasks.iter().enumerate().map(|(i, t)| (0..t.participants.len()).map(|k| sol.x[starts[i] + k].max(0.0)).collect()).collect();
    let energy = mining_energy(tasks, &f)?;
    let cost = offload_cost(tasks, &f)?;
    Ok(OffloadSolution { objective_value: sol.objective_value, energy, cost, rewards, f })
}

impl OffloadSolution {
    /// One row per (miner, participant): f with its energy and cost shares.
    pub fn write_csv<W: Write>(&self, tasks: &[MiningTask], w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["miner", "participant", "f", "energy", "cost"])?;
        for (t, row) in tasks.iter().zip(&self.f) {
            for (k, &v) in row.iter().enumerate() {
                let p = &t.participants[k];
                let energy = if v > 0.0 { v * energy_coefficient(t, k)? } else { 0.0 };
                out.write_record([
                    t.miner_id.to_string(),
                    p.id.to_string(),
                    v.to_string(),
                    energy.to_string(),
                    (p.unit_price * v * t.demand()).to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}
