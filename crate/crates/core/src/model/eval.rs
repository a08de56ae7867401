use super::{NfvInstance, PlacementSolution};
use crate::error::Result;

/// End-to-end delay of SFC position `k`: processing plus transmission.
pub fn sfc_delay(inst: &NfvInstance, sol: &PlacementSolution, k: usize) -> f64 {
    let sfc = &inst.sfcs[k];
    let servers = &inst.graph.servers;
    let mut d = 0.0;
    for (j, row) in sol.x[k].iter().enumerate() {
        for (n, v) in row.iter().enumerate() {
            d += v * sfc.vnf_cpu[j] / servers[n].cpu_capacity;
        }
    }
    for seg in &sol.y[k] {
        for (a, v) in seg.iter().enumerate() {
            d += v / inst.graph.arc_bandwidth(a);
        }
    }
    d
}

pub fn compute_delay(inst: &NfvInstance, sol: &PlacementSolution, user: u32) -> Result<f64> {
    sol.check_dims(inst)?;
    let k = inst.sfc_index(user)?;
    Ok(sfc_delay(inst, sol, k))
}

pub fn compute_energy(inst: &NfvInstance, sol: &PlacementSolution) -> Result<f64> {
    sol.check_dims(inst)?;
    let servers = &inst.graph.servers;
    let mut e: f64 = sol.beta.iter().zip(servers).map(|(b, s)| b * s.static_power).sum();
    for (k, sfc) in inst.sfcs.iter().enumerate() {
        for (j, row) in sol.x[k].iter().enumerate() {
            for (n, v) in row.iter().enumerate() {
                e += servers[n].proc_power * v * sfc.vnf_cpu[j] / servers[n].cpu_capacity;
            }
        }
    }
    Ok(e)
}

/// Share of the resource cost paid by SFC position `k`.
pub fn sfc_cost(inst: &NfvInstance, sol: &PlacementSolution, k: usize) -> f64 {
    let sfc = &inst.sfcs[k];
    let mut c = 0.0;
    for (j, row) in sol.x[k].iter().enumerate() {
        for (n, v) in row.iter().enumerate() {
            c += sfc.server_unit_price[n] * v * sfc.vnf_cpu[j];
        }
    }
    for seg in &sol.y[k] {
        for (a, v) in seg.iter().enumerate() {
            c += sfc.link_unit_price[a / 2] * v;
        }
    }
    c
}

pub fn compute_cost(inst: &NfvInstance, sol: &PlacementSolution) -> Result<f64> {
    sol.check_dims(inst)?;
    Ok((0..inst.sfcs.len()).map(|k| sfc_cost(inst, sol, k)).sum())
}

/// α·energy + (1−α)·cost.
pub fn objective_f(inst: &NfvInstance, sol: &PlacementSolution) -> Result<f64> {
    let e = compute_energy(inst, sol)?;
    let c = compute_cost(inst, sol)?;
    Ok(inst.alpha * e + (1.0 - inst.alpha) * c)
}
