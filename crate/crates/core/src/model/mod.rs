//! Data-center graph, SFC requests and placement solutions.
//!
//! Servers are addressed by their position in [`DataCenterGraph::servers`],
//! links by their position in [`DataCenterGraph::links`]. Link `l`
//! materializes as arc `2l` (src → dst) and arc `2l + 1` (dst → src), each
//! with the full link bandwidth.

mod eval;
mod feasibility;

pub use eval::{compute_cost, compute_delay, compute_energy, objective_f, sfc_cost, sfc_delay};
pub use feasibility::{check_feasibility, ConstraintId, Violation, DEFAULT_TOL};

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = u32;

/// Version tag written into every instance document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Server {
    pub id: NodeId,
    /// C_n^max in cycles per second.
    pub cpu_capacity: f64,
    /// p_n^s, paid whenever the server is active.
    pub static_power: f64,
    /// p_n, scaled by utilization.
    pub proc_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: u32,
    pub src: NodeId,
    pub dst: NodeId,
    /// B_l^max in bits per second, available in each direction.
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataCenterGraph {
    pub access_switches: Vec<NodeId>,
    pub transport_switches: Vec<NodeId>,
    pub servers: Vec<Server>,
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Access,
    Transport,
    Server(usize),
}

/// Node positions and arc adjacency derived from a [`DataCenterGraph`].
#[derive(Debug, Clone)]
pub struct Incidence {
    pub nodes: Vec<NodeId>,
    pub kinds: Vec<NodeKind>,
    pub index: HashMap<NodeId, usize>,
    /// Node position of each server, by server position.
    pub server_node: Vec<usize>,
    pub out_arcs: Vec<Vec<usize>>,
    pub in_arcs: Vec<Vec<usize>>,
    /// (tail, head) node positions of each arc.
    pub arcs: Vec<(usize, usize)>,
}

impl DataCenterGraph {
    pub fn num_arcs(&self) -> usize {
        2 * self.links.len()
    }

    /// Bandwidth of arc `a`, i.e. of its underlying link.
    pub fn arc_bandwidth(&self, a: usize) -> f64 {
        self.links[a / 2].bandwidth
    }

    /// (tail, head) node ids of arc `a`.
    pub fn arc_endpoints(&self, a: usize) -> (NodeId, NodeId) {
        let l = &self.links[a / 2];
        if a.is_multiple_of(2) {
            (l.src, l.dst)
        } else {
            (l.dst, l.src)
        }
    }

    pub fn server_position(&self, id: NodeId) -> Option<usize> {
        self.servers.iter().position(|s| s.id == id)
    }

    pub fn incidence(&self) -> Incidence {
        let mut nodes = Vec::new();
        let mut kinds = Vec::new();
        for &a in &self.access_switches {
            nodes.push(a);
            kinds.push(NodeKind::Access);
        }
        for &t in &self.transport_switches {
            nodes.push(t);
            kinds.push(NodeKind::Transport);
        }
        let mut server_node = Vec::with_capacity(self.servers.len());
        for (k, s) in self.servers.iter().enumerate() {
            server_node.push(nodes.len());
            nodes.push(s.id);
            kinds.push(NodeKind::Server(k));
        }
        let index: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(k, &id)| (id, k)).collect();
        let mut out_arcs = vec![Vec::new(); nodes.len()];
        let mut in_arcs = vec![Vec::new(); nodes.len()];
        let mut arcs = Vec::with_capacity(self.num_arcs());
        for a in 0..self.num_arcs() {
            let (t, h) = self.arc_endpoints(a);
            let (t, h) = (index[&t], index[&h]);
            out_arcs[t].push(a);
            in_arcs[h].push(a);
            arcs.push((t, h));
        }
        Incidence { nodes, kinds, index, server_node, out_arcs, in_arcs, arcs }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        let all = self.access_switches.iter().chain(&self.transport_switches).chain(self.servers.iter().map(|s| &s.id));
        for id in all {
            if !seen.insert(*id) {
                return Err(Error::InvalidInstance(format!("node {id} declared twice")));
            }
        }
        for s in &self.servers {
            if !(s.cpu_capacity > 0.0 && s.cpu_capacity.is_finite()) {
                return Err(Error::InvalidInstance(format!("server {} needs positive finite capacity", s.id)));
            }
            if !(s.static_power >= 0.0 && s.proc_power >= 0.0) || !s.static_power.is_finite() || !s.proc_power.is_finite() {
                return Err(Error::InvalidInstance(format!("server {} has invalid power figures", s.id)));
            }
        }
        for l in &self.links {
            if !(l.bandwidth > 0.0 && l.bandwidth.is_finite()) {
                return Err(Error::InvalidInstance(format!("link {} needs positive finite bandwidth", l.id)));
            }
            if l.src == l.dst {
                return Err(Error::InvalidInstance(format!("link {} is a self-loop", l.id)));
            }
            if !seen.contains(&l.src) || !seen.contains(&l.dst) {
                return Err(Error::InvalidInstance(format!("link {} has an undeclared endpoint", l.id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfcRequest {
    pub user_id: u32,
    /// C_{i,j} in cycles, one per VNF.
    pub vnf_cpu: Vec<f64>,
    /// B_i^{j,j+1} for j = 0..=J, source segment first.
    pub segment_bandwidth: Vec<f64>,
    pub source: NodeId,
    pub destination: NodeId,
    /// T_i^th in seconds.
    pub max_delay: f64,
    /// cost_{i,n}, indexed by server position.
    pub server_unit_price: Vec<f64>,
    /// cost_{i,l}, indexed by link position.
    pub link_unit_price: Vec<f64>,
}

impl SfcRequest {
    pub fn num_vnfs(&self) -> usize {
        self.vnf_cpu.len()
    }

    pub fn num_segments(&self) -> usize {
        self.vnf_cpu.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfvInstance {
    pub graph: DataCenterGraph,
    pub sfcs: Vec<SfcRequest>,
    pub alpha: f64,
    /// Enforce C2 (VNFs of one SFC on distinct servers).
    pub enforce_distinct_servers: bool,
}

#[derive(Serialize)]
struct DocOut<'a> {
    schema_version: u32,
    #[serde(flatten)]
    instance: &'a NfvInstance,
}

#[derive(Deserialize)]
struct DocIn {
    schema_version: u32,
    #[serde(flatten)]
    instance: NfvInstance,
}

impl NfvInstance {
    pub fn sfc_index(&self, user: u32) -> Result<usize> {
        self.sfcs.iter().position(|s| s.user_id == user).ok_or_else(|| Error::Domain(format!("unknown user {user}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidInstance(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        let ns = self.graph.servers.len();
        let nl = self.graph.links.len();
        let mut users = BTreeSet::new();
        for s in &self.sfcs {
            let u = s.user_id;
            if !users.insert(u) {
                return Err(Error::InvalidInstance(format!("user {u} appears twice")));
            }
            if s.vnf_cpu.is_empty() {
                return Err(Error::InvalidInstance(format!("SFC of user {u} has no VNF")));
            }
            if s.segment_bandwidth.len() != s.vnf_cpu.len() + 1 {
                return Err(Error::InvalidInstance(format!("SFC of user {u} needs J+1 segment bandwidths")));
            }
            if s.server_unit_price.len() != ns || s.link_unit_price.len() != nl {
                return Err(Error::InvalidInstance(format!("SFC of user {u} has a price table of the wrong size")));
            }
            let positive = |v: &f64| *v > 0.0 && v.is_finite();
            if !(s.vnf_cpu.iter().all(positive)
                && s.segment_bandwidth.iter().all(positive)
                && s.server_unit_price.iter().all(positive)
                && s.link_unit_price.iter().all(positive))
            {
                return Err(Error::InvalidInstance(format!("SFC of user {u} has a non-positive demand or price")));
            }
            if !positive(&s.max_delay) {
                return Err(Error::InvalidInstance(format!("SFC of user {u} has non-positive max delay")));
            }
            if !self.graph.access_switches.contains(&s.source) {
                return Err(Error::InvalidInstance(format!("source of user {u} is not an access switch")));
            }
            if !self.graph.transport_switches.contains(&s.destination) {
                return Err(Error::InvalidInstance(format!("destination of user {u} is not a transport switch")));
            }
        }
        Ok(())
    }

    /// The instance restricted to the SFC positions in `keep`.
    pub fn subset(&self, keep: &[usize]) -> NfvInstance {
        NfvInstance { sfcs: keep.iter().map(|&k| self.sfcs[k].clone()).collect(), ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&DocOut { schema_version: SCHEMA_VERSION, instance: self })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DocIn = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInstance(format!("unsupported schema version {}", doc.schema_version)));
        }
        doc.instance.validate()?;
        Ok(doc.instance)
    }
}

/// β, X and Y for one instance. `x[i][j][n]` and `y[i][s][a]` are indexed by
/// SFC position, VNF/segment position and server/arc position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSolution {
    pub beta: Vec<f64>,
    pub x: Vec<Vec<Vec<f64>>>,
    pub y: Vec<Vec<Vec<f64>>>,
    pub binary_flag: bool,
}

impl PlacementSolution {
    pub fn zeros(inst: &NfvInstance) -> Self {
        let ns = inst.graph.servers.len();
        let na = inst.graph.num_arcs();
        PlacementSolution {
            beta: vec![0.0; ns],
            x: inst.sfcs.iter().map(|s| vec![vec![0.0; ns]; s.num_vnfs()]).collect(),
            y: inst.sfcs.iter().map(|s| vec![vec![0.0; na]; s.num_segments()]).collect(),
            binary_flag: true,
        }
    }

    pub fn check_dims(&self, inst: &NfvInstance) -> Result<()> {
        let ns = inst.graph.servers.len();
        let na = inst.graph.num_arcs();
        let bad = |what: &str| Err(Error::Dimension(format!("solution {what} does not match the instance")));
        if self.beta.len() != ns {
            return bad("beta");
        }
        if self.x.len() != inst.sfcs.len() || self.y.len() != inst.sfcs.len() {
            return bad("SFC count");
        }
        for (k, s) in inst.sfcs.iter().enumerate() {
            if self.x[k].len() != s.num_vnfs() || self.x[k].iter().any(|r| r.len() != ns) {
                return bad("x");
            }
            if self.y[k].len() != s.num_segments() || self.y[k].iter().any(|r| r.len() != na) {
                return bad("y");
            }
        }
        Ok(())
    }

    /// The solution restricted to the SFC positions in `keep`; β is kept whole.
    pub fn subset(&self, keep: &[usize]) -> PlacementSolution {
        PlacementSolution {
            beta: self.beta.clone(),
            x: keep.iter().map(|&k| self.x[k].clone()).collect(),
            y: keep.iter().map(|&k| self.y[k].clone()).collect(),
            binary_flag: self.binary_flag,
        }
    }

    /// True when every β and x entry is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        let bin = |v: &f64| *v == 0.0 || *v == 1.0;
        self.beta.iter().all(bin) && self.x.iter().flatten().flatten().all(bin)
    }

    /// Server hosting VNF `j` of SFC `k`, when that row is binary.
    pub fn host(&self, k: usize, j: usize) -> Option<usize> {
        let row = &self.x[k][j];
        let hosts: Vec<usize> = (0..row.len()).filter(|&n| row[n] == 1.0).collect();
        (hosts.len() == 1 && row.iter().all(|v| *v == 0.0 || *v == 1.0)).then(|| hosts[0])
    }

    pub fn active_servers(&self) -> usize {
        self.beta.iter().filter(|b| **b > 0.5).count()
    }

    /// Componentwise `a·self + (1−a)·other`.
    pub fn blend(&self, other: &Self, a: f64) -> Self {
        let mix = |p: &f64, q: &f64| a * p + (1.0 - a) * q;
        let mix3 = |p: &Vec<Vec<Vec<f64>>>, q: &Vec<Vec<Vec<f64>>>| {
            p.iter()
                .zip(q)
                .map(|(u, v)| u.iter().zip(v).map(|(r, s)| r.iter().zip(s).map(|(e, f)| mix(e, f)).collect()).collect())
                .collect()
        };
        let mut out = PlacementSolution {
            beta: self.beta.iter().zip(&other.beta).map(|(p, q)| mix(p, q)).collect(),
            x: mix3(&self.x, &other.x),
            y: mix3(&self.y, &other.y),
            binary_flag: false,
        };
        out.binary_flag = out.is_binary();
        out
    }
}
