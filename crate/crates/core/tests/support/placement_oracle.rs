//! Exhaustive placement oracle: every capacity-feasible placement, ordered
//! by a lower bound (exact placement terms plus cheapest-path routing),
//! routed by a separately written routing LP until the bound passes the
//! best value found.

use nfvchain::lp::{solve_lp, LpProblem, LpStatus, Relation};
use nfvchain::model::NfvInstance;

pub struct OracleOutcome {
    pub objective: Option<f64>,
    pub placements: usize,
    pub lp_solves: usize,
}

fn node_positions(inst: &NfvInstance) -> (Vec<u32>, impl Fn(u32) -> usize + '_) {
    let g = &inst.graph;
    let mut ids: Vec<u32> = g.access_switches.clone();
    ids.extend(&g.transport_switches);
    ids.extend(g.servers.iter().map(|s| s.id));
    let lookup = ids.clone();
    (ids, move |id: u32| lookup.iter().position(|&v| v == id).expect("declared node"))
}

/// All-pairs cheapest path by link price for one SFC (Floyd–Warshall).
fn price_distances(inst: &NfvInstance, k: usize) -> Vec<Vec<f64>> {
    let (ids, pos) = node_positions(inst);
    let n = ids.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (l, link) in inst.graph.links.iter().enumerate() {
        let (u, v) = (pos(link.src), pos(link.dst));
        let c = inst.sfcs[k].link_unit_price[l];
        if c < d[u][v] {
            d[u][v] = c;
            d[v][u] = c;
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][m] + d[m][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

struct Candidate {
    servers: Vec<usize>,
    /// α·processing energy + (1−α)·(server cost + cheapest routing).
    separable: f64,
}

fn candidates(inst: &NfvInstance, k: usize) -> Vec<Candidate> {
    let g = &inst.graph;
    let sfc = &inst.sfcs[k];
    let ns = g.servers.len();
    let j = sfc.vnf_cpu.len();
    let a = inst.alpha;
    let dist = price_distances(inst, k);
    let (_, pos) = node_positions(inst);
    let src = pos(sfc.source);
    let dst = pos(sfc.destination);
    let server_node = |n: usize| pos(g.servers[n].id);
    let mut out = Vec::new();
    let total = ns.pow(j as u32);
    for code in 0..total {
        let mut c = code;
        let servers: Vec<usize> = (0..j)
            .map(|_| {
                let n = c % ns;
                c /= ns;
                n
            })
            .collect();
        if inst.enforce_distinct_servers {
            let mut s = servers.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != j {
                continue;
            }
        }
        let proc_delay: f64 = servers.iter().enumerate().map(|(v, &n)| sfc.vnf_cpu[v] / g.servers[n].cpu_capacity).sum();
        if proc_delay > sfc.max_delay {
            continue;
        }
        if servers.iter().enumerate().any(|(v, &n)| sfc.vnf_cpu[v] > g.servers[n].cpu_capacity) {
            continue;
        }
        let mut sep = 0.0;
        for (v, &n) in servers.iter().enumerate() {
            let s = &g.servers[n];
            sep += a * s.proc_power * sfc.vnf_cpu[v] / s.cpu_capacity + (1.0 - a) * sfc.server_unit_price[n] * sfc.vnf_cpu[v];
        }
        let mut nodes = vec![src];
        nodes.extend(servers.iter().map(|&n| server_node(n)));
        nodes.push(dst);
        for (s, w) in nodes.windows(2).enumerate() {
            sep += (1.0 - a) * sfc.segment_bandwidth[s] * dist[w[0]][w[1]];
        }
        if sep.is_finite() {
            out.push(Candidate { servers, separable: sep });
        }
    }
    out
}

/// Min-cost routing of every SFC for a fixed placement, with arc capacity
/// rows and delay rows always present. Returns (1−α)·routing cost.
fn routing_value(inst: &NfvInstance, placement: &[Vec<usize>]) -> Option<f64> {
    let g = &inst.graph;
    let (ids, pos) = node_positions(inst);
    let na = 2 * g.links.len();
    let arc = |a: usize| {
        let l = &g.links[a / 2];
        if a.is_multiple_of(2) {
            (pos(l.src), pos(l.dst))
        } else {
            (pos(l.dst), pos(l.src))
        }
    };
    let mut offsets = Vec::new();
    let mut nvars = 0;
    for sfc in &inst.sfcs {
        offsets.push(nvars);
        nvars += (sfc.vnf_cpu.len() + 1) * na;
    }
    let mut lp = LpProblem::new(nvars);
    for (k, sfc) in inst.sfcs.iter().enumerate() {
        let mut nodes = vec![pos(sfc.source)];
        nodes.extend(placement[k].iter().map(|&n| pos(g.servers[n].id)));
        nodes.push(pos(sfc.destination));
        let mut delay_terms = Vec::new();
        for s in 0..=sfc.vnf_cpu.len() {
            let var = |a: usize| offsets[k] + s * na + a;
            for a in 0..na {
                lp.objective[var(a)] = (1.0 - inst.alpha) * sfc.link_unit_price[a / 2];
                delay_terms.push((var(a), 1.0 / g.links[a / 2].bandwidth));
            }
            for v in 0..ids.len() {
                let mut terms = Vec::new();
                for a in 0..na {
                    let (t, h) = arc(a);
                    if t == v {
                        terms.push((var(a), 1.0));
                    }
                    if h == v {
                        terms.push((var(a), -1.0));
                    }
                }
                let supply = (nodes[s] == v) as i32 as f64 - (nodes[s + 1] == v) as i32 as f64;
                lp.add_constraint(terms, Relation::Eq, sfc.segment_bandwidth[s] * supply);
            }
        }
        let proc_delay: f64 = placement[k].iter().enumerate().map(|(v, &n)| sfc.vnf_cpu[v] / g.servers[n].cpu_capacity).sum();
        lp.add_constraint(delay_terms, Relation::Le, sfc.max_delay - proc_delay);
    }
    for a in 0..na {
        let terms = inst
            .sfcs
            .iter()
            .enumerate()
            .flat_map(|(k, sfc)| (0..=sfc.vnf_cpu.len()).map(move |s| (k, s)))
            .map(|(k, s)| (offsets[k] + s * na + a, 1.0))
            .collect();
        lp.add_constraint(terms, Relation::Le, g.links[a / 2].bandwidth);
    }
    let sol = solve_lp(&lp, 1e-9).expect("routing LP solves");
    (sol.status == LpStatus::Optimal).then_some(sol.objective_value)
}

/// Optimal objective over all binary placements, or `None` if none is feasible.
pub fn enumerate_optimum(inst: &NfvInstance) -> OracleOutcome {
    let g = &inst.graph;
    let ns = g.servers.len();
    let cands: Vec<Vec<Candidate>> = (0..inst.sfcs.len()).map(|k| candidates(inst, k)).collect();
    // Depth-first over SFCs, keeping capacity-feasible combinations.
    let mut leaves: Vec<(f64, Vec<u32>)> = Vec::new();
    let mut choice = vec![0u32; inst.sfcs.len()];
    let mut load = vec![0.0; ns];
    fn dfs(
        inst: &NfvInstance,
        cands: &[Vec<Candidate>],
        k: usize,
        acc: f64,
        load: &mut [f64],
        choice: &mut [u32],
        leaves: &mut Vec<(f64, Vec<u32>)>,
    ) {
        let g = &inst.graph;
        if k == cands.len() {
            let mut used = vec![false; g.servers.len()];
            for (q, &i) in choice.iter().enumerate() {
                for &n in &cands[q][i as usize].servers {
                    used[n] = true;
                }
            }
            let stat: f64 = (0..g.servers.len()).filter(|&n| used[n]).map(|n| g.servers[n].static_power).sum();
            leaves.push((acc + inst.alpha * stat, choice.to_vec()));
            return;
        }
        for (i, c) in cands[k].iter().enumerate() {
            let cpu = &inst.sfcs[k].vnf_cpu;
            let fits = c.servers.iter().all(|&n| {
                let extra: f64 = c.servers.iter().zip(cpu).filter(|&(&m, _)| m == n).map(|(_, w)| w).sum();
                load[n] + extra <= g.servers[n].cpu_capacity
            });
            if !fits {
                continue;
            }
            for (v, &n) in c.servers.iter().enumerate() {
                load[n] += cpu[v];
            }
            choice[k] = i as u32;
            dfs(inst, cands, k + 1, acc + c.separable, load, choice, leaves);
            for (v, &n) in c.servers.iter().enumerate() {
                load[n] -= cpu[v];
            }
        }
    }
    dfs(inst, &cands, 0, 0.0, &mut load, &mut choice, &mut leaves);
    let placements = leaves.len();
    leaves.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best = f64::INFINITY;
    let mut lp_solves = 0;
    for (lb, choice) in leaves {
        if lb >= best - 1e-9 * best.abs().max(1.0) {
            break;
        }
        let placement: Vec<Vec<usize>> = choice.iter().enumerate().map(|(k, &i)| cands[k][i as usize].servers.clone()).collect();
        // Placement terms without the routing bound.
        let mut fixed = 0.0;
        let mut used = vec![false; ns];
        for (k, servers) in placement.iter().enumerate() {
            let sfc = &inst.sfcs[k];
            for (v, &n) in servers.iter().enumerate() {
                let s = &g.servers[n];
                used[n] = true;
                fixed += inst.alpha * s.proc_power * sfc.vnf_cpu[v] / s.cpu_capacity
                    + (1.0 - inst.alpha) * sfc.server_unit_price[n] * sfc.vnf_cpu[v];
            }
        }
        fixed += inst.alpha * (0..ns).filter(|&n| used[n]).map(|n| g.servers[n].static_power).sum::<f64>();
        lp_solves += 1;
        if let Some(r) = routing_value(inst, &placement) {
            best = best.min(fixed + r);
        }
    }
    OracleOutcome { objective: best.is_finite().then_some(best), placements, lp_solves }
}
