use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Weibull};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mining::{MiningTask, Participant, RewardParams};
use crate::model::{DataCenterGraph, Link, NfvInstance, Server, SfcRequest};

/// Closed interval for uniform draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi {
            Ok(())
        } else {
            Err(Error::Domain(format!("range {name} must satisfy lo <= hi")))
        }
    }

    /// The range rescaled so that its upper end becomes `v`.
    pub fn with_upper(&self, v: f64) -> Range {
        Range { lo: self.lo * v / self.hi, hi: v }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfvScenarioParams {
    pub n_servers: usize,
    pub n_sfcs: usize,
    pub n_access: usize,
    pub n_transport: usize,
    /// Inclusive range of VNFs per SFC.
    pub vnf_count_range: (usize, usize),
    /// Segment bandwidth in bit/s.
    pub bandwidth_range: Range,
    /// CPU demand of a VNF as a multiple of its outgoing segment bandwidth.
    pub cpu_demand_multiplier_range: Range,
    /// Server capacity in Mcycles/s.
    pub server_capacity_range: Range,
    /// Link bandwidth in Mbit/s.
    pub link_bandwidth_range: Range,
    pub proc_power_range: Range,
    pub static_power_range: Range,
    pub server_price_range: Range,
    pub link_price_range: Range,
    pub alpha: f64,
    /// Delay budget of every SFC in seconds.
    pub t_th: f64,
    pub link_density: f64,
    /// Multiplies segment bandwidths (and with them CPU demands).
    pub demand_scale: f64,
    pub enforce_distinct_servers: bool,
    pub seed: u64,
}

impl Default for NfvScenarioParams {
    fn default() -> Self {
        NfvScenarioParams {
            n_servers: 20,
            n_sfcs: 5,
            n_access: 1,
            n_transport: 1,
            vnf_count_range: (3, 8),
            bandwidth_range: Range::new(100.0, 500.0),
            cpu_demand_multiplier_range: Range::new(1.0, 5.0),
            server_capacity_range: Range::new(1.0, 10.0),
            link_bandwidth_range: Range::new(100.0, 500.0),
            proc_power_range: Range::new(1.0, 5.0),
            static_power_range: Range::new(1.0, 10.0),
            server_price_range: Range::new(0.1, 1.0),
            link_price_range: Range::new(0.1, 1.0),
            alpha: 0.5,
            t_th: 0.02,
            link_density: 0.4,
            demand_scale: 1.0,
            enforce_distinct_servers: true,
            seed: 0,
        }
    }
}

impl NfvScenarioParams {
    pub fn validate(&self) -> Result<()> {
        let ranges = [
            (&self.bandwidth_range, "bandwidth_range"),
            (&self.cpu_demand_multiplier_range, "cpu_demand_multiplier_range"),
            (&self.server_capacity_range, "server_capacity_range"),
            (&self.link_bandwidth_range, "link_bandwidth_range"),
            (&self.proc_power_range, "proc_power_range"),
            (&self.static_power_range, "static_power_range"),
            (&self.server_price_range, "server_price_range"),
            (&self.link_price_range, "link_price_range"),
        ];
        for (r, name) in ranges {
            r.check(name)?;
        }
        let positive = [
            &self.bandwidth_range,
            &self.cpu_demand_multiplier_range,
            &self.server_capacity_range,
            &self.link_bandwidth_range,
            &self.server_price_range,
            &self.link_price_range,
        ];
        if positive.iter().any(|r| r.lo <= 0.0) {
            return Err(Error::Domain("demands, capacities and prices must be drawn from positive ranges".into()));
        }
        if self.proc_power_range.lo < 0.0 || self.static_power_range.lo < 0.0 {
            return Err(Error::Domain("power ranges must be non-negative".into()));
        }
        let (lo, hi) = self.vnf_count_range;
        if lo == 0 || lo > hi {
            return Err(Error::Domain("vnf_count_range must satisfy 1 <= lo <= hi".into()));
        }
        if !(self.link_density > 0.0 && self.link_density <= 1.0) {
            return Err(Error::Domain("link_density must lie in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) || !(self.t_th > 0.0) || !(self.demand_scale > 0.0) {
            return Err(Error::Domain("alpha must lie in [0, 1]; t_th and demand_scale must be positive".into()));
        }
        if self.n_servers == 0 || self.n_access == 0 || self.n_transport == 0 {
            return Err(Error::Domain("need at least one server, access switch and transport switch".into()));
        }
        if self.enforce_distinct_servers && self.n_servers < hi {
            return Err(Error::Domain(format!("{} servers cannot host {hi} VNFs on distinct servers", self.n_servers)));
        }
        Ok(())
    }
}

// Independent streams per purpose and entity, so that changing one
// parameter leaves the draws of unrelated entities untouched.
const TOPOLOGY: u64 = 1;
const SERVER: u64 = 2;
const SFC: u64 = 3;
const SERVER_PRICE: u64 = 4;
const LINK_PRICE: u64 = 5;
const LINK_BW: u64 = 6;
const MINER: u64 = 7;
const PARTICIPANT: u64 = 8;
const PAIR: u64 = 9;

fn stream(seed: u64, purpose: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ a.wrapping_mul(0xBF58_476D_1CE4_E5B9) ^ b.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    rng.set_stream(z);
    rng
}

fn connected(n_nodes: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n_nodes];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n_nodes];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

const MAX_TOPOLOGY_ATTEMPTS: u64 = 10_000;

/// Draws a data center and SFC set. Links join server pairs, access
/// switches to servers and servers to transport switches; each candidate
/// is kept with probability `link_density`, and the draw is repeated until
/// the graph is connected.
pub fn generate_nfv_scenario(p: &NfvScenarioParams) -> Result<NfvInstance> {
    p.validate()?;
    let seed = p.seed;
    let access: Vec<u32> = (0..p.n_access as u32).collect();
    let transport: Vec<u32> = (0..p.n_transport as u32).map(|t| p.n_access as u32 + t).collect();
    let first_server = (p.n_access + p.n_transport) as u32;
    let servers: Vec<Server> = (0..p.n_servers)
        .map(|n| {
            let mut rng = stream(seed, SERVER, n as u64, 0);
            Server {
                id: first_server + n as u32,
                cpu_capacity: p.server_capacity_range.sample(&mut rng) * 1e6,
                static_power: p.static_power_range.sample(&mut rng),
                proc_power: p.proc_power_range.sample(&mut rng),
            }
        })
        .collect();

    // Candidate pairs, keyed by node ids so a pair keeps its draws when
    // other nodes are added.
    let mut candidates = Vec::new();
    for a in 0..p.n_servers {
        for b in a + 1..p.n_servers {
            candidates.push((first_server + a as u32, first_server + b as u32));
        }
    }
    for &ac in &access {
        for s in &servers {
            candidates.push((ac, s.id));
        }
    }
    for s in &servers {
        for &tr in &transport {
            candidates.push((s.id, tr));
        }
    }
    let n_nodes = p.n_access + p.n_transport + p.n_servers;
    let mut chosen = None;
    for attempt in 0..MAX_TOPOLOGY_ATTEMPTS {
        let kept: Vec<(u32, u32)> = candidates
            .iter()
            .copied()
            .filter(|&(u, v)| stream(seed, TOPOLOGY, attempt, ((u as u64) << 32) | v as u64).random::<f64>() < p.link_density)
            .collect();
        let edges: Vec<(usize, usize)> = kept.iter().map(|&(u, v)| (u as usize, v as usize)).collect();
        if connected(n_nodes, &edges) {
            chosen = Some(kept);
            break;
        }
    }
    let kept = chosen.ok_or_else(|| Error::Domain(format!("no connected topology found at density {}", p.link_density)))?;
    let links: Vec<Link> = kept
        .iter()
        .enumerate()
        .map(|(l, &(u, v))| {
            let mut rng = stream(seed, LINK_BW, ((u as u64) << 32) | v as u64, 0);
            Link { id: l as u32, src: u, dst: v, bandwidth: p.link_bandwidth_range.sample(&mut rng) * 1e6 }
        })
        .collect();

    let sfcs = (0..p.n_sfcs)
        .map(|i| {
            let mut rng = stream(seed, SFC, i as u64, 0);
            let (lo, hi) = p.vnf_count_range;
            let j = rng.random_range(lo..=hi);
            let segment_bandwidth: Vec<f64> = (0..=j).map(|_| p.bandwidth_range.sample(&mut rng) * p.demand_scale).collect();
            let vnf_cpu = (0..j).map(|v| p.cpu_demand_multiplier_range.sample(&mut rng) * segment_bandwidth[v + 1]).collect();
            let source = access[rng.random_range(0..access.len())];
            let destination = transport[rng.random_range(0..transport.len())];
            let server_unit_price =
                servers.iter().map(|s| p.server_price_range.sample(&mut stream(seed, SERVER_PRICE, i as u64, s.id as u64))).collect();
            let link_unit_price = kept
                .iter()
                .map(|&(u, v)| p.link_price_range.sample(&mut stream(seed, LINK_PRICE, i as u64, ((u as u64) << 32) | v as u64)))
                .collect();
            SfcRequest {
                user_id: i as u32 + 1,
                vnf_cpu,
                segment_bandwidth,
                source,
                destination,
                max_delay: p.t_th,
                server_unit_price,
                link_unit_price,
            }
        })
        .collect();

    let inst = NfvInstance {
        graph: DataCenterGraph { access_switches: access, transport_switches: transport, servers, links },
        sfcs,
        alpha: p.alpha,
        enforce_distinct_servers: p.enforce_distinct_servers,
    };
    inst.validate()?;
    Ok(inst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningScenarioParams {
    pub n_miners: usize,
    pub n_participants: usize,
    pub noise: f64,
    pub price_range: Range,
    /// Participant capacity in cycles/s.
    pub capacity_range: Range,
    pub proc_power_range: Range,
    /// Miner transmit power in W.
    pub tx_power_range: Range,
    pub gamma: f64,
    pub reward: RewardParams,
    pub path_loss_exponent: f64,
    /// Miner to participant distance in m.
    pub distance_range: Range,
    /// Task size D_i in bits.
    pub size_bits_range: Range,
    pub cycles_per_bit_range: Range,
    /// T_i^mine in seconds.
    pub t_mine: f64,
    pub seed: u64,
}

impl Default for MiningScenarioParams {
    fn default() -> Self {
        MiningScenarioParams {
            n_miners: 3,
            n_participants: 5,
            noise: 1e-14,
            price_range: Range::new(1.0, 10.0),
            capacity_range: Range::new(100.0, 500.0),
            proc_power_range: Range::new(0.1, 0.9),
            tx_power_range: Range::new(1e-3, 1e-2),
            gamma: 0.5,
            reward: RewardParams::default(),
            path_loss_exponent: 3.0,
            distance_range: Range::new(10.0, 100.0),
            size_bits_range: Range::new(20.0, 60.0),
            cycles_per_bit_range: Range::new(1.0, 3.0),
            t_mine: 600.0,
            seed: 0,
        }
    }
}

impl MiningScenarioParams {
    pub fn validate(&self) -> Result<()> {
        for (r, name) in [
            (&self.price_range, "price_range"),
            (&self.capacity_range, "capacity_range"),
            (&self.proc_power_range, "proc_power_range"),
            (&self.tx_power_range, "tx_power_range"),
            (&self.distance_range, "distance_range"),
            (&self.size_bits_range, "size_bits_range"),
            (&self.cycles_per_bit_range, "cycles_per_bit_range"),
        ] {
            r.check(name)?;
        }
        if self.n_participants == 0 || !(self.noise > 0.0) || !(self.t_mine > 0.0) {
            return Err(Error::Domain("need participants, positive noise and a positive T_mine".into()));
        }
        if self.capacity_range.lo <= 0.0
            || self.distance_range.lo <= 0.0
            || self.size_bits_range.lo <= 0.0
            || self.cycles_per_bit_range.lo <= 0.0
        {
            return Err(Error::Domain("capacities, distances and demands must be drawn from positive ranges".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Domain(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        self.reward.validate()
    }
}

/// h = ν·d^(−μ).
pub fn path_gain(nu: f64, distance: f64, mu: f64) -> f64 {
    nu * distance.powf(-mu)
}

/// Draws miner tasks sharing one pool of participants. Gains follow
/// h = ν·d^(−μ) with ν Rayleigh distributed (unit scale).
pub fn generate_mining_scenario(p: &MiningScenarioParams) -> Result<Vec<MiningTask>> {
    p.validate()?;
    let rayleigh = Weibull::new(std::f64::consts::SQRT_2, 2.0).map_err(|e| Error::Domain(e.to_string()))?;
    let pool: Vec<(f64, f64)> = (0..p.n_participants)
        .map(|k| {
            let mut rng = stream(p.seed, PARTICIPANT, k as u64, 0);
            (p.capacity_range.sample(&mut rng), p.proc_power_range.sample(&mut rng))
        })
        .collect();
    let tasks = (0..p.n_miners)
        .map(|i| {
            let mut rng = stream(p.seed, MINER, i as u64, 0);
            let size_bits = p.size_bits_range.sample(&mut rng);
            let cycles_per_bit = p.cycles_per_bit_range.sample(&mut rng);
            let mut tx_power = Vec::with_capacity(p.n_participants);
            let participants = pool
                .iter()
                .enumerate()
                .map(|(k, &(cpu_capacity, proc_power))| {
                    let mut pr = stream(p.seed, PAIR, i as u64, k as u64);
                    let unit_price = p.price_range.sample(&mut pr);
                    let distance = p.distance_range.sample(&mut pr);
                    let nu = rayleigh.sample(&mut pr);
                    tx_power.push(p.tx_power_range.sample(&mut pr));
                    Participant {
                        id: k as u32,
                        cpu_capacity,
                        proc_power,
                        unit_price,
                        channel_gain: path_gain(nu, distance, p.path_loss_exponent),
                        noise: p.noise,
                    }
                })
                .collect();
            MiningTask { miner_id: i as u32 + 1, size_bits, cycles_per_bit, tx_power, participants, max_delay: p.t_mine }
        })
        .collect();
    Ok(tasks)
}
