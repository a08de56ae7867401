//! Small hand-built instances.

use nfvchain::model::{DataCenterGraph, Link, NfvInstance, PlacementSolution, Server, SfcRequest};

/// Access switch 0, transport switch 1, servers 2.. joined as a path
/// 0 – 2 – 3 – … – 1. Link l joins consecutive nodes of the path.
pub fn path_graph(servers: &[(f64, f64, f64)], bandwidth: f64) -> DataCenterGraph {
    let servers: Vec<Server> = servers
        .iter()
        .enumerate()
        .map(|(n, &(cap, stat, proc_))| Server { id: 2 + n as u32, cpu_capacity: cap, static_power: stat, proc_power: proc_ })
        .collect();
    let mut chain = vec![0u32];
    chain.extend(servers.iter().map(|s| s.id));
    chain.push(1);
    let links = chain.windows(2).enumerate().map(|(l, w)| Link { id: l as u32, src: w[0], dst: w[1], bandwidth }).collect();
    DataCenterGraph { access_switches: vec![0], transport_switches: vec![1], servers, links }
}

pub fn sfc(user: u32, vnf_cpu: Vec<f64>, segment_bandwidth: Vec<f64>, g: &DataCenterGraph, max_delay: f64) -> SfcRequest {
    SfcRequest {
        user_id: user,
        vnf_cpu,
        segment_bandwidth,
        source: 0,
        destination: 1,
        max_delay,
        server_unit_price: vec![1.0; g.servers.len()],
        link_unit_price: vec![1.0; g.links.len()],
    }
}

/// Two servers on the path 0 – 2 – 3 – 1 and one SFC with two VNFs.
pub fn two_server_chain() -> NfvInstance {
    let g = path_graph(&[(1000.0, 10.0, 5.0), (1000.0, 4.0, 2.0)], 500.0);
    let s = sfc(1, vec![100.0, 200.0], vec![10.0, 20.0, 30.0], &g, 10.0);
    NfvInstance { graph: g, sfcs: vec![s], alpha: 0.5, enforce_distinct_servers: true }
}

/// VNF 0 on server 0 and VNF 1 on server 1, each segment on the direct arc.
pub fn two_server_chain_solution(inst: &NfvInstance) -> PlacementSolution {
    let mut sol = PlacementSolution::zeros(inst);
    sol.beta = vec![1.0, 1.0];
    sol.x[0][0][0] = 1.0;
    sol.x[0][1][1] = 1.0;
    sol.y[0][0][0] = 10.0;
    sol.y[0][1][2] = 20.0;
    sol.y[0][2][4] = 30.0;
    sol
}
