//! Continuous relaxation of the placement problem as an [`LpProblem`].
//!
//! Variable layout: β_n first, then x per (SFC, VNF, server), then y per
//! (SFC, segment, arc). Binary constraints are relaxed to [0, 1] boxes.

use crate::error::Result;
use crate::lp::{LpProblem, Relation};
use crate::model::{NfvInstance, NodeKind, PlacementSolution};

#[derive(Debug, Clone)]
pub struct VarIndex {
    ns: usize,
    na: usize,
    vnfs: Vec<usize>,
    x_start: Vec<usize>,
    y_start: Vec<usize>,
    total: usize,
}

impl VarIndex {
    pub fn new(inst: &NfvInstance) -> Self {
        let ns = inst.graph.servers.len();
        let na = inst.graph.num_arcs();
        let vnfs: Vec<usize> = inst.sfcs.iter().map(|s| s.num_vnfs()).collect();
        let mut next = ns;
        let mut x_start = Vec::new();
        for &j in &vnfs {
            x_start.push(next);
            next += j * ns;
        }
        let mut y_start = Vec::new();
        for &j in &vnfs {
            y_start.push(next);
            next += (j + 1) * na;
        }
        VarIndex { ns, na, vnfs, x_start, y_start, total: next }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn beta(&self, n: usize) -> usize {
        n
    }

    pub fn x(&self, k: usize, j: usize, n: usize) -> usize {
        self.x_start[k] + j * self.ns + n
    }

    pub fn y(&self, k: usize, s: usize, a: usize) -> usize {
        self.y_start[k] + s * self.na + a
    }

    /// Range of all x variables, in (SFC, VNF, server) lexicographic order.
    pub fn x_range(&self) -> std::ops::Range<usize> {
        self.ns..self.y_start.first().copied().unwrap_or(self.ns)
    }

    /// Decodes an x variable index into (SFC, VNF, server).
    pub fn x_coords(&self, var: usize) -> (usize, usize, usize) {
        let k = self.x_start.iter().rposition(|&s| s <= var).expect("not an x variable");
        let off = var - self.x_start[k];
        (k, off / self.ns, off % self.ns)
    }

    pub fn extract(&self, v: &[f64]) -> PlacementSolution {
        let beta = (0..self.ns).map(|n| v[self.beta(n)]).collect();
        let x =
            (0..self.vnfs.len()).map(|k| (0..self.vnfs[k]).map(|j| (0..self.ns).map(|n| v[self.x(k, j, n)]).collect()).collect()).collect();
        let y = (0..self.vnfs.len())
            .map(|k| (0..=self.vnfs[k]).map(|s| (0..self.na).map(|a| v[self.y(k, s, a)]).collect()).collect())
            .collect();
        let mut sol = PlacementSolution { beta, x, y, binary_flag: false };
        sol.binary_flag = sol.is_binary();
        sol
    }

    pub fn flatten(&self, sol: &PlacementSolution) -> Vec<f64> {
        let mut v = vec![0.0; self.total];
        for n in 0..self.ns {
            v[self.beta(n)] = sol.beta[n];
        }
        for k in 0..self.vnfs.len() {
            for j in 0..self.vnfs[k] {
                for n in 0..self.ns {
                    v[self.x(k, j, n)] = sol.x[k][j][n];
                }
            }
            for s in 0..=self.vnfs[k] {
                for a in 0..self.na {
                    v[self.y(k, s, a)] = sol.y[k][s][a];
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct Formulation {
    pub lp: LpProblem,
    pub vars: VarIndex,
}

/// Linear coefficients of the objective F over the variable layout.
pub fn objective_coefficients(inst: &NfvInstance, vars: &VarIndex) -> Vec<f64> {
    let alpha = inst.alpha;
    let servers = &inst.graph.servers;
    let mut c = vec![0.0; vars.len()];
    for (n, s) in servers.iter().enumerate() {
        c[vars.beta(n)] = alpha * s.static_power;
    }
    for (k, sfc) in inst.sfcs.iter().enumerate() {
        for (j, &cpu) in sfc.vnf_cpu.iter().enumerate() {
            for (n, s) in servers.iter().enumerate() {
                c[vars.x(k, j, n)] = alpha * s.proc_power * cpu / s.cpu_capacity + (1.0 - alpha) * sfc.server_unit_price[n] * cpu;
            }
        }
        for s in 0..sfc.num_segments() {
            for a in 0..inst.graph.num_arcs() {
                c[vars.y(k, s, a)] = (1.0 - alpha) * sfc.link_unit_price[a / 2];
            }
        }
    }
    c
}

/// Builds the relaxed problem: C1–C7 with [0, 1] boxes on β and x.
///
/// Each y is bounded by its segment bandwidth: any flow exceeding it on an
/// arc contains a cycle, and cancelling the cycle lowers cost and delay, so
/// the bound removes no optimal point. C6 rows are emitted only for arcs
/// where these bounds do not already imply them.
pub fn build_relaxation(inst: &NfvInstance) -> Result<Formulation> {
    build_relaxation_with(inst, true)
}

/// As [`build_relaxation`]; `separation_cuts` adds, under C2, the rows
/// forcing each middle segment to leave the server of the VNF before it and
/// enter the server of the VNF after it. Binary points satisfy them (the two
/// VNFs sit on different servers), fractional points that co-locate parts of
/// consecutive VNFs to cancel their flow do not.
pub fn build_relaxation_with(inst: &NfvInstance, separation_cuts: bool) -> Result<Formulation> {
    inst.validate()?;
    let vars = VarIndex::new(inst);
    let g = &inst.graph;
    let inc = g.incidence();
    let ns = g.servers.len();
    let na = g.num_arcs();
    let mut lp = LpProblem::new(vars.len());
    lp.objective = objective_coefficients(inst, &vars);
    for n in 0..ns {
        lp.set_bounds(vars.beta(n), 0.0, 1.0);
    }
    for (k, sfc) in inst.sfcs.iter().enumerate() {
        for j in 0..sfc.num_vnfs() {
            for n in 0..ns {
                lp.set_bounds(vars.x(k, j, n), 0.0, 1.0);
            }
        }
        for (s, &bw) in sfc.segment_bandwidth.iter().enumerate() {
            for a in 0..na {
                lp.set_bounds(vars.y(k, s, a), 0.0, bw.min(g.arc_bandwidth(a)));
            }
        }
    }

    for (k, sfc) in inst.sfcs.iter().enumerate() {
        for j in 0..sfc.num_vnfs() {
            lp.add_constraint((0..ns).map(|n| (vars.x(k, j, n), 1.0)).collect(), Relation::Eq, 1.0);
        }
    }
    if inst.enforce_distinct_servers {
        for (k, sfc) in inst.sfcs.iter().enumerate() {
            if sfc.num_vnfs() > 1 {
                for n in 0..ns {
                    lp.add_constraint((0..sfc.num_vnfs()).map(|j| (vars.x(k, j, n), 1.0)).collect(), Relation::Le, 1.0);
                }
            }
        }
    }
    for (n, server) in g.servers.iter().enumerate() {
        let mut terms = vec![(vars.beta(n), -server.cpu_capacity)];
        for (k, sfc) in inst.sfcs.iter().enumerate() {
            for (j, &cpu) in sfc.vnf_cpu.iter().enumerate() {
                terms.push((vars.x(k, j, n), cpu));
            }
        }
        lp.add_constraint(terms, Relation::Le, 0.0);
    }
    for (k, sfc) in inst.sfcs.iter().enumerate() {
        for j in 0..sfc.num_vnfs() {
            for n in 0..ns {
                lp.add_constraint(vec![(vars.x(k, j, n), 1.0), (vars.beta(n), -1.0)], Relation::Le, 0.0);
            }
        }
    }
    for (k, sfc) in inst.sfcs.iter().enumerate() {
        let jn = sfc.num_vnfs();
        for (s, &bw) in sfc.segment_bandwidth.iter().enumerate() {
            for (v, kind) in inc.kinds.iter().enumerate() {
                let mut terms: Vec<(usize, f64)> = inc.out_arcs[v].iter().map(|&a| (vars.y(k, s, a), 1.0)).collect();
                terms.extend(inc.in_arcs[v].iter().map(|&a| (vars.y(k, s, a), -1.0)));
                let mut rhs = 0.0;
                match *kind {
                    NodeKind::Server(n) => {
                        if s >= 1 {
                            terms.push((vars.x(k, s - 1, n), -bw));
                        }
                        if s < jn {
                            terms.push((vars.x(k, s, n), bw));
                        }
                    }
                    _ => {
                        let id = inc.nodes[v];
                        if s == 0 && id == sfc.source {
                            rhs += bw;
                        }
                        if s == jn && id == sfc.destination {
                            rhs -= bw;
                        }
                    }
                }
                if !terms.is_empty() || rhs != 0.0 {
                    lp.add_constraint(terms, Relation::Eq, rhs);
                }
            }
        }
    }
    if separation_cuts && inst.enforce_distinct_servers {
        for (k, sfc) in inst.sfcs.iter().enumerate() {
            for s in 1..sfc.num_vnfs() {
                let bw = sfc.segment_bandwidth[s];
                for n in 0..ns {
                    let v = inc.server_node[n];
                    let mut out: Vec<(usize, f64)> = inc.out_arcs[v].iter().map(|&a| (vars.y(k, s, a), 1.0)).collect();
                    out.push((vars.x(k, s - 1, n), -bw));
                    lp.add_constraint(out, Relation::Ge, 0.0);
                    let mut inn: Vec<(usize, f64)> = inc.in_arcs[v].iter().map(|&a| (vars.y(k, s, a), 1.0)).collect();
                    inn.push((vars.x(k, s, n), -bw));
                    lp.add_constraint(inn, Relation::Ge, 0.0);
                }
            }
        }
    }
    let demand: f64 = inst.sfcs.iter().flat_map(|s| s.segment_bandwidth.iter()).sum();
    for a in 0..na {
        if demand > g.arc_bandwidth(a) {
            let terms = inst
                .sfcs
                .iter()
                .enumerate()
                .flat_map(|(k, sfc)| (0..sfc.num_segments()).map(move |s| (k, s)))
                .map(|(k, s)| (vars.y(k, s, a), 1.0))
                .collect();
            lp.add_constraint(terms, Relation::Le, g.arc_bandwidth(a));
        }
    }
    for (k, sfc) in inst.sfcs.iter().enumerate() {
        let mut terms = Vec::new();
        for (j, &cpu) in sfc.vnf_cpu.iter().enumerate() {
            for (n, server) in g.servers.iter().enumerate() {
                terms.push((vars.x(k, j, n), cpu / server.cpu_capacity));
            }
        }
        for s in 0..sfc.num_segments() {
            for a in 0..na {
                terms.push((vars.y(k, s, a), 1.0 / g.arc_bandwidth(a)));
            }
        }
        lp.add_constraint(terms, Relation::Le, sfc.max_delay);
    }
    Ok(Formulation { lp, vars })
}
