use std::fmt;

use serde::{Deserialize, Serialize};

use super::{sfc_delay, NfvInstance, NodeKind, PlacementSolution};
use crate::error::{Error, Result};

/// Absolute tolerance used when callers have no better choice.
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    C10,
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One violated constraint. Index fields that do not apply are `None`;
/// `user` is the SFC's user id, the others are positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: ConstraintId,
    pub user: Option<u32>,
    pub vnf: Option<usize>,
    pub segment: Option<usize>,
    pub server: Option<usize>,
    pub arc: Option<usize>,
    pub node: Option<u32>,
    pub residual: f64,
}

impl Violation {
    fn new(constraint: ConstraintId, residual: f64) -> Self {
        Violation { constraint, user: None, vnf: None, segment: None, server: None, arc: None, node: None, residual }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constraint)?;
        let fields = [
            ("user", self.user.map(|v| v as usize)),
            ("vnf", self.vnf),
            ("segment", self.segment),
            ("server", self.server),
            ("arc", self.arc),
            ("node", self.node.map(|v| v as usize)),
        ];
        for (name, v) in fields {
            if let Some(v) = v {
                write!(f, " {name}={v}")?;
            }
        }
        write!(f, " residual={:e}", self.residual)
    }
}

/// Lists every constraint of C1–C10 violated by more than `tol`.
///
/// C8/C9 report the distance of β/x entries from {0, 1}, so relaxed points
/// show up as integrality violations. C5 is checked at every node, including
/// each SFC's source and destination switch.
pub fn check_feasibility(inst: &NfvInstance, sol: &PlacementSolution, tol: f64) -> Result<Vec<Violation>> {
    if !(tol >= 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be non-negative")));
    }
    sol.check_dims(inst)?;
    let g = &inst.graph;
    let inc = g.incidence();
    let ns = g.servers.len();
    let mut out = Vec::new();
    let mut push = |v: Violation| {
        if v.residual > tol {
            out.push(v);
        }
    };

    for (n, b) in sol.beta.iter().enumerate() {
        let r = if (0.0..=1.0).contains(b) { b.min(1.0 - b) } else { (-b).max(b - 1.0) };
        push(Violation { server: Some(n), ..Violation::new(ConstraintId::C8, r) });
    }

    let mut load = vec![0.0; ns];
    for (k, sfc) in inst.sfcs.iter().enumerate() {
        let user = Some(sfc.user_id);
        for (j, row) in sol.x[k].iter().enumerate() {
            let total: f64 = row.iter().sum();
            push(Violation { user, vnf: Some(j), ..Violation::new(ConstraintId::C1, (total - 1.0).abs()) });
            for (n, v) in row.iter().enumerate() {
                load[n] += v * sfc.vnf_cpu[j];
                push(Violation { user, vnf: Some(j), server: Some(n), ..Violation::new(ConstraintId::C4, v - sol.beta[n]) });
                let r = if (0.0..=1.0).contains(v) { v.min(1.0 - v) } else { (-v).max(v - 1.0) };
                push(Violation { user, vnf: Some(j), server: Some(n), ..Violation::new(ConstraintId::C9, r) });
            }
        }
        if inst.enforce_distinct_servers {
            for n in 0..ns {
                let s: f64 = sol.x[k].iter().map(|row| row[n]).sum();
                push(Violation { user, server: Some(n), ..Violation::new(ConstraintId::C2, s - 1.0) });
            }
        }

        let jn = sfc.num_vnfs();
        for (s, seg) in sol.y[k].iter().enumerate() {
            for (a, v) in seg.iter().enumerate() {
                push(Violation { user, segment: Some(s), arc: Some(a), ..Violation::new(ConstraintId::C10, -v) });
            }
            for (v, kind) in inc.kinds.iter().enumerate() {
                let flow: f64 = inc.out_arcs[v].iter().map(|&a| seg[a]).sum::<f64>() - inc.in_arcs[v].iter().map(|&a| seg[a]).sum::<f64>();
                let (here, next) = match *kind {
                    NodeKind::Server(n) => (if s >= 1 { sol.x[k][s - 1][n] } else { 0.0 }, if s < jn { sol.x[k][s][n] } else { 0.0 }),
                    _ => {
                        let id = inc.nodes[v];
                        (if s == 0 && id == sfc.source { 1.0 } else { 0.0 }, if s == jn && id == sfc.destination { 1.0 } else { 0.0 })
                    }
                };
                let r = (flow - sfc.segment_bandwidth[s] * (here - next)).abs();
                push(Violation { user, segment: Some(s), node: Some(inc.nodes[v]), ..Violation::new(ConstraintId::C5, r) });
            }
        }

        let d = sfc_delay(inst, sol, k);
        push(Violation { user, ..Violation::new(ConstraintId::C7, d - sfc.max_delay) });
    }

    for n in 0..ns {
        let r = load[n] - sol.beta[n] * g.servers[n].cpu_capacity;
        push(Violation { server: Some(n), ..Violation::new(ConstraintId::C3, r) });
    }

    for a in 0..g.num_arcs() {
        let used: f64 = sol.y.iter().flatten().map(|seg| seg[a]).sum();
        push(Violation { arc: Some(a), ..Violation::new(ConstraintId::C6, used - g.arc_bandwidth(a)) });
    }

    out.sort_by_key(|v| v.constraint);
    Ok(out)
}
