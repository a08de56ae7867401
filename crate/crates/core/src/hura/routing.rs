use super::HuraState;
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus, Relation};
use crate::model::{NfvInstance, NodeKind, PlacementSolution, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct Routing {
    /// `y[q][s][a]` for the q-th SFC of the requested subset.
    pub y: Vec<Vec<Vec<f64>>>,
    /// (1−α)·Σ cost·y over the subset.
    pub cost: f64,
}

/// Minimum-cost routing of the SFC positions in `subset` for a fixed binary
/// placement, against the remaining arc bandwidth in `state`.
///
/// Fails with [`Error::RoutingInfeasible`] (naming the first user of the
/// subset) when no flow meets flow conservation, the remaining capacities and
/// each SFC's delay budget left after processing delay.
pub fn solve_routing(inst: &NfvInstance, placement: &PlacementSolution, subset: &[usize], state: &HuraState) -> Result<Routing> {
    placement.check_dims(inst)?;
    let g = &inst.graph;
    let na = g.num_arcs();
    let inc = g.incidence();
    if state.remain_bw.len() != na {
        return Err(Error::Dimension("routing state does not match the arc count".into()));
    }
    let mut starts = Vec::with_capacity(subset.len());
    let mut next = 0;
    for &k in subset {
        starts.push(next);
        next += inst.sfcs[k].num_segments() * na;
    }
    let var = |q: usize, s: usize, a: usize| starts[q] + s * na + a;
    let mut lp = LpProblem::new(next);
    // With α = 1 the routing cost carries no weight; unit weight then picks
    // the cheapest among the (all optimal) routings.
    let weight = if inst.alpha < 1.0 { 1.0 - inst.alpha } else { 1.0 };

    let mut demand = 0.0;
    for (q, &k) in subset.iter().enumerate() {
        let sfc = &inst.sfcs[k];
        let jn = sfc.num_vnfs();
        for (s, &bw) in sfc.segment_bandwidth.iter().enumerate() {
            demand += bw;
            for a in 0..na {
                lp.objective[var(q, s, a)] = weight * sfc.link_unit_price[a / 2];
                lp.set_bounds(var(q, s, a), 0.0, bw.min(state.remain_bw[a].max(0.0)));
            }
            for (v, kind) in inc.kinds.iter().enumerate() {
                let mut terms: Vec<(usize, f64)> = inc.out_arcs[v].iter().map(|&a| (var(q, s, a), 1.0)).collect();
                terms.extend(inc.in_arcs[v].iter().map(|&a| (var(q, s, a), -1.0)));
                let rhs = match *kind {
                    NodeKind::Server(n) => {
                        let here = if s >= 1 { placement.x[k][s - 1][n] } else { 0.0 };
                        let next = if s < jn { placement.x[k][s][n] } else { 0.0 };
                        bw * (here - next)
                    }
                    _ => {
                        let id = inc.nodes[v];
                        let here = if s == 0 && id == sfc.source { 1.0 } else { 0.0 };
                        let next = if s == jn && id == sfc.destination { 1.0 } else { 0.0 };
                        bw * (here - next)
                    }
                };
                if !terms.is_empty() || rhs != 0.0 {
                    lp.add_constraint(terms, Relation::Eq, rhs);
                }
            }
        }
        let mut proc = 0.0;
        for (j, row) in placement.x[k].iter().enumerate() {
            for (n, v) in row.iter().enumerate() {
                proc += v * sfc.vnf_cpu[j] / g.servers[n].cpu_capacity;
            }
        }
        let terms = (0..sfc.num_segments())
            .flat_map(|s| (0..na).map(move |a| (s, a)))
            .map(|(s, a)| (var(q, s, a), 1.0 / g.arc_bandwidth(a)))
            .collect();
        lp.add_constraint(terms, Relation::Le, sfc.max_delay - proc);
    }
    for a in 0..na {
        if demand > state.remain_bw[a] {
            let terms = subset
                .iter()
                .enumerate()
                .flat_map(|(q, &k)| (0..inst.sfcs[k].num_segments()).map(move |s| (q, s)))
                .map(|(q, s)| (var(q, s, a), 1.0))
                .collect();
            lp.add_constraint(terms, Relation::Le, state.remain_bw[a].max(0.0));
        }
    }

    let sol = solve_lp(&lp, DEFAULT_TOL)?;
    if sol.status != LpStatus::Optimal {
        let user = subset.first().map(|&k| inst.sfcs[k].user_id).unwrap_or(0);
        return Err(Error::RoutingInfeasible { user });
    }
    let mut cost = 0.0;
    let y = subset
        .iter()
        .enumerate()
        .map(|(q, &k)| {
            let sfc = &inst.sfcs[k];
            (0..sfc.num_segments())
                .map(|s| {
                    (0..na)
                        .map(|a| {
                            let v = sol.x[var(q, s, a)].max(0.0);
                            cost += (1.0 - inst.alpha) * sfc.link_unit_price[a / 2] * v;
                            v
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(Routing { y, cost })
}
