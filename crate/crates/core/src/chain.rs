//! Deterministic simulation of the resource-allocation contract: the InP
//! advertises resources, users request SFCs, the InP runs a solver and
//! announces allocations and costs, users pay, and miners verify the
//! transactions and mine a single block.
//!
//! No cryptography is modeled: digests are FNV-1a hashes of the serialized
//! events and the nonce check is a flag on the block.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ara::{ara_solve, AraConfig};
use crate::error::{Error, Result};
use crate::hura::{hura_solve, solve_routing, HuraState};
use crate::mining::{orphan_probability, reward, MiningTask, RewardParams};
use crate::model::{check_feasibility, sfc_cost, sfc_delay, ConstraintId, NfvInstance, PlacementSolution, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkflowSolver {
    Ara,
    Hura,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserPrices {
    pub user: u32,
    pub server_unit_price: Vec<f64>,
    pub link_unit_price: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Payload {
    InpInformation {
        server_capacity: Vec<f64>,
        link_bandwidth: Vec<f64>,
        prices: Vec<UserPrices>,
    },
    RaRequest {
        user: u32,
        vnf_cpu: Vec<f64>,
        segment_bandwidth: Vec<f64>,
        source: u32,
        destination: u32,
        max_delay: f64,
    },
    RunAllocation {
        user: u32,
        /// Server position per VNF.
        servers: Vec<usize>,
        x: Vec<Vec<f64>>,
        y: Vec<Vec<f64>>,
        cost: f64,
        delay: f64,
    },
    Payment {
        user: u32,
        amount: f64,
        wallet: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractEvent {
    pub sequence: u64,
    pub issuer: String,
    pub payload: Payload,
    /// Set by miners once the transaction passed verification.
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reason {
    /// Verification rule number, 0 for structural problems.
    pub rule: u8,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub accepted: bool,
    pub reasons: Vec<Reason>,
}

impl Verdict {
    fn from_reasons(reasons: Vec<Reason>) -> Self {
        Verdict { accepted: reasons.is_empty(), reasons }
    }

    pub fn rules(&self) -> Vec<u8> {
        let mut r: Vec<u8> = self.reasons.iter().map(|r| r.rule).collect();
        r.dedup();
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub transactions: Vec<ContractEvent>,
    pub miner_id: u32,
    pub requested_reward: f64,
    pub prev_hash: String,
    pub orphaned: bool,
    /// Stand-in for a correct proof-of-work nonce.
    pub nonce_valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ledger {
    pub payments: BTreeMap<u32, f64>,
    pub rewards: BTreeMap<u32, f64>,
}

impl Ledger {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["account", "kind", "amount"])?;
        for (u, a) in &self.payments {
            out.write_record([format!("user-{u}"), "payment".into(), a.to_string()])?;
        }
        for (m, a) in &self.rewards {
            out.write_record([format!("miner-{m}"), "reward".into(), a.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct WorkflowReport {
    pub events: Vec<ContractEvent>,
    pub verdicts: Vec<(u64, Verdict)>,
    pub block: Block,
    pub block_verdict: Verdict,
    pub ledger: Ledger,
    pub solution: PlacementSolution,
    pub rejected_users: Vec<u32>,
}

impl WorkflowReport {
    /// One JSON object per line, in sequence order.
    pub fn write_event_log<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// FNV-1a over the serialized events.
pub fn digest(events: &[ContractEvent]) -> Result<String> {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for e in events {
        for b in serde_json::to_vec(e)? {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    Ok(format!("{h:016x}"))
}

/// Draws the winning miner with probability D_iC_i / Σ D_jC_j.
pub fn select_winner<R: Rng>(tasks: &[MiningTask], rng: &mut R) -> Result<usize> {
    let total: f64 = tasks.iter().map(MiningTask::demand).sum();
    if tasks.is_empty() || !(total > 0.0) {
        return Err(Error::Workflow("no miner with positive demand".into()));
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, t) in tasks.iter().enumerate() {
        acc += t.demand();
        if u < acc {
            return Ok(i);
        }
    }
    Ok(tasks.len() - 1)
}

fn reason(rule: u8, message: impl Into<String>) -> Reason {
    Reason { rule, message: message.into() }
}

/// Checks a RunAllocation or Payment event against the published solution.
///
/// Rules: (1) the SFC's delay budget holds; (2) the announced cost matches
/// the cost recomputed from unit prices; (3) the published solution with the
/// payload's rows substituted passes every other constraint; (4) a payment
/// equals the cost of the user's allocation.
pub fn verify_transaction(ev: &ContractEvent, inst: &NfvInstance, sol: &PlacementSolution) -> Verdict {
    let mut reasons = Vec::new();
    if let Err(e) = sol.check_dims(inst) {
        return Verdict::from_reasons(vec![reason(0, format!("malformed solution: {e}"))]);
    }
    match &ev.payload {
        Payload::RunAllocation { user, x, y, cost, .. } => {
            let Ok(k) = inst.sfc_index(*user) else {
                return Verdict::from_reasons(vec![reason(0, format!("unknown user {user}"))]);
            };
            if x.len() != sol.x[k].len()
                || y.len() != sol.y[k].len()
                || x.iter().zip(&sol.x[k]).any(|(p, q)| p.len() != q.len())
                || y.iter().zip(&sol.y[k]).any(|(p, q)| p.len() != q.len())
            {
                return Verdict::from_reasons(vec![reason(0, "allocation payload has the wrong shape")]);
            }
            let mut full = sol.clone();
            full.x[k] = x.clone();
            full.y[k] = y.clone();
            let delay = sfc_delay(inst, &full, k);
            if delay > inst.sfcs[k].max_delay + DEFAULT_TOL {
                reasons.push(reason(1, format!("delay {delay:e} s exceeds the budget {:e} s", inst.sfcs[k].max_delay)));
            }
            let actual = sfc_cost(inst, &full, k);
            if (actual - cost).abs() > DEFAULT_TOL * actual.abs().max(1.0) {
                reasons.push(reason(2, format!("cost mismatch: announced {cost}, recomputed {actual}")));
            }
            let allocated: Vec<usize> = (0..inst.sfcs.len()).filter(|&q| full.x[q].iter().flatten().any(|v| *v != 0.0)).collect();
            match check_feasibility(&inst.subset(&allocated), &full.subset(&allocated), DEFAULT_TOL) {
                Ok(violations) => {
                    for v in violations.iter().filter(|v| v.constraint != ConstraintId::C7) {
                        reasons.push(reason(3, format!("infeasible allocation: {v}")));
                    }
                }
                Err(e) => reasons.push(reason(0, format!("malformed allocation: {e}"))),
            }
        }
        Payload::Payment { user, amount, .. } => {
            let Ok(k) = inst.sfc_index(*user) else {
                return Verdict::from_reasons(vec![reason(0, format!("unknown user {user}"))]);
            };
            let due = sfc_cost(inst, sol, k);
            if (due - amount).abs() > DEFAULT_TOL * due.abs().max(1.0) {
                reasons.push(reason(4, format!("payment {amount} differs from the announced cost {due}")));
            }
        }
        _ => reasons.push(reason(0, "only allocation and payment events are verified")),
    }
    Verdict::from_reasons(reasons)
}

/// Block rules: the requested reward is within `cap`, every transaction was
/// verified beforehand, and the nonce flag is set.
pub fn verify_block(b: &Block, cap: f64) -> Verdict {
    let mut reasons = Vec::new();
    if !(b.requested_reward <= cap) {
        reasons.push(reason(1, format!("requested reward {} exceeds the cap {cap}", b.requested_reward)));
    }
    for t in &b.transactions {
        if !t.verified {
            reasons.push(reason(2, format!("transaction {} was not verified", t.sequence)));
        }
    }
    if !b.nonce_valid {
        reasons.push(reason(3, "nonce is not valid"));
    }
    Verdict::from_reasons(reasons)
}

/// Largest reward the protocol pays for one block.
pub fn reward_cap(rp: &RewardParams) -> f64 {
    rp.r_const + rp.n_trans * rp.r_trans
}

struct Sequencer {
    next: u64,
    events: Vec<ContractEvent>,
}

impl Sequencer {
    fn emit(&mut self, issuer: String, payload: Payload) -> usize {
        self.events.push(ContractEvent { sequence: self.next, issuer, payload, verified: false });
        self.next += 1;
        self.events.len() - 1
    }
}

fn allocation_payload(inst: &NfvInstance, sol: &PlacementSolution, k: usize) -> Payload {
    let servers = (0..inst.sfcs[k].num_vnfs()).map(|j| sol.host(k, j).unwrap_or(usize::MAX)).collect();
    Payload::RunAllocation {
        user: inst.sfcs[k].user_id,
        servers,
        x: sol.x[k].clone(),
        y: sol.y[k].clone(),
        cost: sfc_cost(inst, sol, k),
        delay: sfc_delay(inst, sol, k),
    }
}

/// ARA over every SFC; when that cannot be placed, over the SFCs HuRA
/// admits, with the rest rejected.
fn ara_with_admission(inst: &NfvInstance) -> Result<(PlacementSolution, Vec<u32>)> {
    match ara_solve(inst, &AraConfig::default()) {
        Ok(r) => return Ok((r.solution, Vec::new())),
        Err(Error::RoundingFailure(_) | Error::Infeasible(_)) => {}
        Err(e) => return Err(e),
    }
    let h = hura_solve(inst)?;
    let keep: Vec<usize> = (0..inst.sfcs.len()).filter(|&k| !h.rejected.contains(&inst.sfcs[k].user_id)).collect();
    let mut full = PlacementSolution::zeros(inst);
    if !keep.is_empty() {
        let part = ara_solve(&inst.subset(&keep), &AraConfig::default())?.solution;
        full.beta = part.beta;
        for (q, &k) in keep.iter().enumerate() {
            full.x[k] = part.x[q].clone();
            full.y[k] = part.y[q].clone();
        }
    }
    full.binary_flag = true;
    Ok((full, h.rejected))
}

pub fn run_workflow(
    inst: &NfvInstance,
    mining: &[MiningTask],
    solver: WorkflowSolver,
    rp: &RewardParams,
    seed: u64,
) -> Result<WorkflowReport> {
    inst.validate()?;
    rp.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seq = Sequencer { next: 0, events: Vec::new() };

    seq.emit(
        "inp".into(),
        Payload::InpInformation {
            server_capacity: inst.graph.servers.iter().map(|s| s.cpu_capacity).collect(),
            link_bandwidth: inst.graph.links.iter().map(|l| l.bandwidth).collect(),
            prices: inst
                .sfcs
                .iter()
                .map(|s| UserPrices {
                    user: s.user_id,
                    server_unit_price: s.server_unit_price.clone(),
                    link_unit_price: s.link_unit_price.clone(),
                })
                .collect(),
        },
    );
    seq.events[0].verified = true;

    let mut solution = PlacementSolution::zeros(inst);
    let mut rejected_users = Vec::new();
    let mut verdicts = Vec::new();
    if !inst.sfcs.is_empty() {
        for s in &inst.sfcs {
            let i = seq.emit(
                format!("user-{}", s.user_id),
                Payload::RaRequest {
                    user: s.user_id,
                    vnf_cpu: s.vnf_cpu.clone(),
                    segment_bandwidth: s.segment_bandwidth.clone(),
                    source: s.source,
                    destination: s.destination,
                    max_delay: s.max_delay,
                },
            );
            seq.events[i].verified = true;
        }
        solution = match solver {
            WorkflowSolver::Hura => {
                let r = hura_solve(inst).map_err(|e| Error::Workflow(format!("HuRA failed at step 3: {e}")))?;
                rejected_users = r.rejected;
                r.solution
            }
            WorkflowSolver::Ara => {
                let (sol, rejected) = ara_with_admission(inst).map_err(|e| Error::Workflow(format!("ARA failed at step 3: {e}")))?;
                rejected_users = rejected;
                sol
            }
        };
        let accepted: Vec<usize> = (0..inst.sfcs.len()).filter(|&k| !rejected_users.contains(&inst.sfcs[k].user_id)).collect();
        let mut to_check = Vec::new();
        for &k in &accepted {
            to_check.push(seq.emit("inp".into(), allocation_payload(inst, &solution, k)));
        }
        for &k in &accepted {
            let user = inst.sfcs[k].user_id;
            let amount = sfc_cost(inst, &solution, k);
            to_check.push(seq.emit(format!("user-{user}"), Payload::Payment { user, amount, wallet: format!("wallet-{user}") }));
        }
        for i in to_check {
            let v = verify_transaction(&seq.events[i], inst, &solution);
            seq.events[i].verified = v.accepted;
            verdicts.push((seq.events[i].sequence, v));
        }
    }

    if mining.is_empty() {
        return Err(Error::Workflow("no miners to mine the block".into()));
    }
    let winner = select_winner(mining, &mut rng)?;
    let orphaned = rng.random::<f64>() < orphan_probability(rp);
    let requested_reward = reward(&mining[winner], mining, rp)?;
    let transactions: Vec<ContractEvent> = seq
        .events
        .iter()
        .filter(|e| e.verified && matches!(e.payload, Payload::RunAllocation { .. } | Payload::Payment { .. }))
        .cloned()
        .collect();
    let block = Block {
        transactions,
        miner_id: mining[winner].miner_id,
        requested_reward,
        prev_hash: digest(&seq.events)?,
        orphaned,
        nonce_valid: true,
    };
    let block_verdict = verify_block(&block, reward_cap(rp));

    let mut ledger = Ledger { payments: BTreeMap::new(), rewards: BTreeMap::new() };
    for e in &seq.events {
        if let (true, Payload::Payment { user, amount, .. }) = (e.verified, &e.payload) {
            *ledger.payments.entry(*user).or_insert(0.0) += amount;
        }
    }
    if block_verdict.accepted && !block.orphaned {
        ledger.rewards.insert(block.miner_id, block.requested_reward);
    }
    Ok(WorkflowReport { events: seq.events, verdicts, block, block_verdict, ledger, solution, rejected_users })
}

/// Documented tampering classes and the rule each must trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fault {
    /// Announced cost inflated by one unit or 0.1%, whichever is larger.
    Cost,
    /// One VNF moved to a server without enough spare CPU and re-routed
    /// within its delay budget.
    Capacity,
    /// Circulations added on the links push the SFC past its delay budget.
    Delay,
    /// Payment short of the announced cost by one unit or 0.1%, whichever
    /// is larger.
    Payment,
}

impl Fault {
    pub const ALL: [Fault; 4] = [Fault::Cost, Fault::Capacity, Fault::Delay, Fault::Payment];

    pub fn expected_rule(self) -> u8 {
        match self {
            Fault::Cost => 2,
            Fault::Capacity => 3,
            Fault::Delay => 1,
            Fault::Payment => 4,
        }
    }
}

fn tamper_step(v: f64) -> f64 {
    (1e-3 * v.abs()).max(1.0)
}

/// Returns a tampered copy of the first allocation or payment event of the
/// report that admits the fault. Other payload fields are kept consistent so
/// that only the targeted rule should fail.
pub fn inject_fault(report: &WorkflowReport, inst: &NfvInstance, fault: Fault) -> Result<ContractEvent> {
    let mut last = Error::Workflow("no event to tamper with".into());
    for e in &report.events {
        let kind_matches = match &e.payload {
            Payload::RunAllocation { .. } => fault != Fault::Payment,
            Payload::Payment { .. } => fault == Fault::Payment,
            _ => false,
        };
        if !kind_matches {
            continue;
        }
        match tamper(e.clone(), &report.solution, inst, fault) {
            Ok(ev) => return Ok(ev),
            Err(err) => last = err,
        }
    }
    Err(last)
}

fn tamper(mut ev: ContractEvent, sol: &PlacementSolution, inst: &NfvInstance, fault: Fault) -> Result<ContractEvent> {
    ev.verified = false;
    match (&mut ev.payload, fault) {
        (Payload::Payment { amount, .. }, Fault::Payment) => *amount -= tamper_step(*amount),
        (Payload::RunAllocation { cost, .. }, Fault::Cost) => *cost += tamper_step(*cost),
        (Payload::RunAllocation { user, servers, x, y, cost, delay }, Fault::Capacity) => {
            let k = inst.sfc_index(*user)?;
            let sfc = &inst.sfcs[k];
            let g = &inst.graph;
            let mut spare: Vec<f64> = g.servers.iter().map(|s| s.cpu_capacity).collect();
            for (q, rows) in sol.x.iter().enumerate() {
                for (j, row) in rows.iter().enumerate() {
                    for (n, v) in row.iter().enumerate() {
                        spare[n] -= v * inst.sfcs[q].vnf_cpu[j];
                    }
                }
            }
            // A server outside the chain that lacks room for the VNF, with a
            // route that still meets the delay budget, so that only the
            // allocation rows (capacity, and x ≤ β on an idle server) break.
            // Active servers come first.
            let mut moves: Vec<(usize, usize)> = (0..sfc.num_vnfs())
                .flat_map(|j| (0..spare.len()).map(move |n| (j, n)))
                .filter(|&(j, n)| !servers.contains(&n) && spare[n] < sfc.vnf_cpu[j])
                .collect();
            moves.sort_by(|a, b| sol.beta[b.1].total_cmp(&sol.beta[a.1]).then(spare[a.1].total_cmp(&spare[b.1])).then(a.cmp(b)));
            let moved = moves
                .into_iter()
                .find_map(|(j, n)| {
                    let mut m = sol.clone();
                    m.x[k][j] = vec![0.0; spare.len()];
                    m.x[k][j][n] = 1.0;
                    let r = solve_routing(inst, &m, &[k], &HuraState::fresh(inst)).ok()?;
                    m.y[k] = r.y.into_iter().next().expect("one SFC routed");
                    (sfc_delay(inst, &m, k) <= sfc.max_delay).then_some((j, n, m))
                })
                .ok_or_else(|| Error::Workflow("no server lacks the spare CPU for a capacity tamper".into()))?;
            let (j, n, moved) = moved;
            servers[j] = n;
            *x = moved.x[k].clone();
            *y = moved.y[k].clone();
            *cost = sfc_cost(inst, &moved, k);
            *delay = sfc_delay(inst, &moved, k);
        }
        (Payload::RunAllocation { user, x, y, cost, delay, .. }, Fault::Delay) => {
            let k = inst.sfc_index(*user)?;
            let g = &inst.graph;
            let mut used = vec![0.0; g.num_arcs()];
            for seg in sol.y.iter().flatten() {
                for (a, v) in seg.iter().enumerate() {
                    used[a] += v;
                }
            }
            let budget = inst.sfcs[k].max_delay - *delay;
            let mut needed = budget.max(0.0) + 1e-3 * inst.sfcs[k].max_delay.max(1.0);
            let mut tampered = sol.clone();
            tampered.x[k] = x.clone();
            tampered.y[k] = y.clone();
            // δ on both arcs of link l adds 2δ/B_l of delay; links are
            // filled in order until the budget is exceeded.
            for (l, link) in g.links.iter().enumerate() {
                if needed <= 0.0 {
                    break;
                }
                let b = link.bandwidth;
                let room = (b - used[2 * l]).min(b - used[2 * l + 1]).max(0.0) * (1.0 - 1e-9);
                let delta = room.min(needed * b / 2.0);
                tampered.y[k][0][2 * l] += delta;
                tampered.y[k][0][2 * l + 1] += delta;
                needed -= 2.0 * delta / b;
            }
            if needed > 1e-9 {
                return Err(Error::Workflow("links lack the room for a delay tamper".into()));
            }
            *y = tampered.y[k].clone();
            *cost = sfc_cost(inst, &tampered, k);
            *delay = sfc_delay(inst, &tampered, k);
        }
        _ => unreachable!("event kind chosen to match the fault"),
    }
    Ok(ev)
}
