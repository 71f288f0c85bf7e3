//! Synchronous message-passing simulation of the distributed MM algorithm.
//!
//! Each [`NodeState`] owns its position, a copy of `y_ij` for every incident
//! edge, its anchor terms `w_ik`, and an inbox holding the latest position
//! broadcast by each neighbor. A round runs every node's local update from the
//! previous round's inboxes, then delivers the fresh broadcasts; node order
//! inside a round cannot change the result.

use std::collections::BTreeSet;
use std::io::{self, Write};

use thiserror::Error;

use crate::cost::{cost_original, cost_z, StateZ};
use crate::graph::{Measurements, Network};
use crate::metrics::{mpe, RunTrace, StallDetector, TraceEntry};
use crate::mm::{comm_per_iteration, SolveError, SolverConfig};
use crate::projections::project_sphere_in_place;
use crate::vecops::block;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("sensor {reader} tried to read the state of non-neighbor {source_node}")]
    LocalityViolation { reader: usize, source_node: usize },
    #[error("update order must be a permutation of 0..{0}")]
    BadOrder(usize),
    #[error("sensors disagree on the Lipschitz constant after max-consensus: {0:?}")]
    LipschitzDisagreement(Vec<f64>),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Every cross-node read a run performed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalityAudit {
    /// `(reader, source)` sensor pairs.
    pub sensor_reads: BTreeSet<(usize, usize)>,
    /// `(sensor, anchor)` pairs.
    pub anchor_reads: BTreeSet<(usize, usize)>,
    pub violations: usize,
}

impl LocalityAudit {
    /// Number of recorded reads that do not follow an edge or anchor link.
    pub fn non_local_reads(&self, net: &Network) -> usize {
        let sensors = self
            .sensor_reads
            .iter()
            .filter(|&&(i, j)| !net.is_neighbor(i, j))
            .count();
        let anchors = self
            .anchor_reads
            .iter()
            .filter(|&&(i, k)| !net.anchor_links()[i].contains(&k))
            .count();
        sensors + anchors + self.violations
    }
}

/// One broadcast: `sender` puts `scalars` reals on the air for `receivers`.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub round: usize,
    pub sender: usize,
    pub receivers: Vec<usize>,
    pub scalars: usize,
}

/// Broadcasts of a run. Round 0 is the exchange of `x⁰` that seeds the
/// edge variables; rounds `1..` are iterations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageLog {
    pub messages: Vec<Message>,
}

impl MessageLog {
    pub fn round_scalars(&self, round: usize) -> usize {
        self.messages
            .iter()
            .filter(|m| m.round == round)
            .map(|m| m.scalars)
            .sum()
    }

    /// Scalars sent during iteration rounds (round 0 excluded).
    pub fn iteration_scalars(&self) -> usize {
        self.messages
            .iter()
            .filter(|m| m.round > 0)
            .map(|m| m.scalars)
            .sum()
    }

    /// CSV with header `round,sender,scalars`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "round,sender,scalars")?;
        for m in &self.messages {
            writeln!(out, "{},{},{}", m.round, m.sender, m.scalars)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct EdgeSlot {
    edge: usize,
    neighbor: usize,
    sign: f64,
    range: f64,
    y: Vec<f64>,
}

#[derive(Debug, Clone)]
struct LinkSlot {
    anchor: usize,
    position: Vec<f64>,
    range: f64,
    w: Vec<f64>,
}

/// Latest `x_j` received from each neighbor, in incidence order.
#[derive(Debug, Clone, Default)]
struct Inbox {
    from: Vec<usize>,
    values: Vec<Vec<f64>>,
}

impl Inbox {
    fn read(
        &self,
        reader: usize,
        source: usize,
        audit: &mut Vec<(usize, usize)>,
    ) -> Result<&[f64], SimError> {
        match self.from.iter().position(|&j| j == source) {
            Some(slot) => {
                audit.push((reader, source));
                Ok(&self.values[slot])
            }
            None => Err(SimError::LocalityViolation {
                reader,
                source_node: source,
            }),
        }
    }
}

/// Local state of sensor `id`.
#[derive(Debug, Clone)]
pub struct NodeState {
    id: usize,
    x: Vec<f64>,
    edges: Vec<EdgeSlot>,
    links: Vec<LinkSlot>,
    lipschitz: f64,
    /// `(L − δ_i − |𝒜_i|) / L`.
    self_weight: f64,
    inbox: Inbox,
}

/// New `(x_i, y copies, w copies)` of one sensor.
type LocalUpdate = (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>);

impl NodeState {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn position(&self) -> &[f64] {
        &self.x
    }

    pub fn self_weight(&self) -> f64 {
        self.self_weight
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Senders currently present in the inbox.
    pub fn inbox_senders(&self) -> &[usize] {
        &self.inbox.from
    }

    pub fn inbox_value(&self, sender: usize) -> Option<&[f64]> {
        self.inbox
            .from
            .iter()
            .position(|&j| j == sender)
            .map(|s| &self.inbox.values[s][..])
    }

    /// Local update from the previous round's inbox. Returns the new state
    /// without touching `self`; reads are appended to `reads`.
    fn updated(&self, reads: &mut Vec<(usize, usize)>) -> Result<LocalUpdate, SimError> {
        let p = self.x.len();
        let inv = 1.0 / self.lipschitz;
        let keep = (self.lipschitz - 1.0) / self.lipschitz;

        let mut x_next: Vec<f64> = self.x.iter().map(|v| self.self_weight * v).collect();
        let mut y_next = Vec::with_capacity(self.edges.len());
        let mut neighbor_sum = vec![0.0; p];
        for slot in &self.edges {
            let xj = self.inbox.read(self.id, slot.neighbor, reads)?;
            let mut y = vec![0.0; p];
            for d in 0..p {
                neighbor_sum[d] += xj[d] + slot.sign * slot.y[d];
                y[d] = keep * slot.y[d] + inv * slot.sign * (self.x[d] - xj[d]);
            }
            project_sphere_in_place(&mut y, slot.range);
            y_next.push(y);
        }
        let mut anchor_sum = vec![0.0; p];
        let mut w_next = Vec::with_capacity(self.links.len());
        for slot in &self.links {
            let mut w = vec![0.0; p];
            for d in 0..p {
                anchor_sum[d] += slot.w[d] + slot.position[d];
                w[d] = keep * slot.w[d] + inv * (self.x[d] - slot.position[d]);
            }
            project_sphere_in_place(&mut w, slot.range);
            w_next.push(w);
        }
        for d in 0..p {
            x_next[d] += inv * neighbor_sum[d] + inv * anchor_sum[d];
        }
        Ok((x_next, y_next, w_next))
    }
}

/// Per-sensor Lipschitz estimates after `rounds` of max-consensus flooding
/// of `(δ_i, |𝒜_i|)`. Every sensor holds `2δ_max + max|𝒜_i| + 2` once
/// `rounds ≥ diameter`.
pub fn max_consensus_lipschitz(net: &Network, rounds: usize) -> Vec<f64> {
    let mut known: Vec<(usize, usize)> = (0..net.n())
        .map(|i| (net.degree(i), net.anchor_links()[i].len()))
        .collect();
    for _ in 0..rounds {
        let prev = known.clone();
        for (i, slot) in known.iter_mut().enumerate() {
            for inc in net.incident(i) {
                let (dj, aj) = prev[inc.neighbor];
                slot.0 = slot.0.max(dj);
                slot.1 = slot.1.max(aj);
            }
        }
    }
    known
        .into_iter()
        .map(|(delta, anchors)| (2 * delta + anchors + 2) as f64)
        .collect()
}

/// Scalars sent by [`max_consensus_lipschitz`]: two per sensor per round.
pub fn max_consensus_scalars(net: &Network, rounds: usize) -> usize {
    2 * net.n() * rounds
}

/// A running simulation. Only the observer methods (`gather`, cost
/// evaluation) see global state; node updates go through [`NodeState`].
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    net: &'a Network,
    nodes: Vec<NodeState>,
    round: usize,
    log: MessageLog,
    audit: LocalityAudit,
}

impl<'a> Simulator<'a> {
    /// Sets up every node from `x0` and the per-node Lipschitz values, then
    /// performs the round-0 exchange of `x⁰` and the initial projections.
    pub fn new(
        net: &'a Network,
        meas: &Measurements,
        x0: &[f64],
        lipschitz: &[f64],
    ) -> Result<Self, SimError> {
        let p = net.p();
        let expected = net.n() * p;
        if x0.len() != expected {
            return Err(SolveError::InitShape {
                expected,
                got: x0.len(),
            }
            .into());
        }
        let mut audit = LocalityAudit::default();
        let mut nodes: Vec<NodeState> = (0..net.n())
            .map(|i| {
                let edges = net
                    .incident(i)
                    .iter()
                    .map(|inc| EdgeSlot {
                        edge: inc.edge,
                        neighbor: inc.neighbor,
                        sign: inc.sign,
                        range: meas.d[inc.edge],
                        y: vec![0.0; p],
                    })
                    .collect::<Vec<_>>();
                let links = net
                    .links_of(i)
                    .map(|(l, k)| {
                        audit.anchor_reads.insert((i, k));
                        LinkSlot {
                            anchor: k,
                            position: net.anchor(k).to_vec(),
                            range: meas.r[l],
                            w: vec![0.0; p],
                        }
                    })
                    .collect::<Vec<_>>();
                let lip = lipschitz[i];
                NodeState {
                    id: i,
                    x: block(x0, i, p).to_vec(),
                    self_weight: (lip - edges.len() as f64 - links.len() as f64) / lip,
                    edges,
                    links,
                    lipschitz: lip,
                    inbox: Inbox::default(),
                }
            })
            .collect();
        let mut sim_log = MessageLog::default();
        deliver(net, &mut nodes, &mut sim_log, 0);
        let mut reads = Vec::new();
        for node in &mut nodes {
            for slot in &mut node.edges {
                let xj = node.inbox.read(node.id, slot.neighbor, &mut reads)?;
                for ((y, xi), xj) in slot.y.iter_mut().zip(&node.x).zip(xj) {
                    *y = slot.sign * (xi - xj);
                }
                project_sphere_in_place(&mut slot.y, slot.range);
            }
            for slot in &mut node.links {
                for d in 0..p {
                    slot.w[d] = node.x[d] - slot.position[d];
                }
                project_sphere_in_place(&mut slot.w, slot.range);
            }
        }
        audit.sensor_reads.extend(reads);
        Ok(Self {
            net,
            nodes,
            round: 0,
            log: sim_log,
            audit,
        })
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn log(&self) -> &MessageLog {
        &self.log
    }

    pub fn audit(&self) -> &LocalityAudit {
        &self.audit
    }

    /// One synchronous iteration. `order` permutes the node update sequence;
    /// all nodes read only the previous round's inboxes.
    pub fn step(&mut self, order: Option<&[usize]>) -> Result<(), SimError> {
        let n = self.nodes.len();
        let default_order: Vec<usize>;
        let order = match order {
            Some(o) => {
                let mut seen = vec![false; n];
                if o.len() != n
                    || o.iter()
                        .any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
                {
                    return Err(SimError::BadOrder(n));
                }
                o
            }
            None => {
                default_order = (0..n).collect();
                &default_order
            }
        };
        let mut updates = vec![None; n];
        let mut reads = Vec::new();
        for &i in order {
            updates[i] = Some(self.nodes[i].updated(&mut reads)?);
        }
        for (node, update) in self.nodes.iter_mut().zip(updates) {
            let (x, ys, ws) = update.expect("every node updated");
            node.x = x;
            for (slot, y) in node.edges.iter_mut().zip(ys) {
                slot.y = y;
            }
            for (slot, w) in node.links.iter_mut().zip(ws) {
                slot.w = w;
            }
        }
        self.audit.sensor_reads.extend(reads);
        self.round += 1;
        deliver(self.net, &mut self.nodes, &mut self.log, self.round);
        Ok(())
    }

    /// Test hook: sensor `reader` asks its inbox for `source`'s position.
    pub fn probe_read(&mut self, reader: usize, source: usize) -> Result<Vec<f64>, SimError> {
        let mut reads = Vec::new();
        let res = self.nodes[reader]
            .inbox
            .read(reader, source, &mut reads)
            .map(<[f64]>::to_vec);
        if res.is_err() {
            self.audit.violations += 1;
        }
        self.audit.sensor_reads.extend(reads);
        res
    }

    /// Observer view of the global iterate. `y_e` comes from the copy held by
    /// the edge's `+1` endpoint.
    pub fn gather(&self) -> StateZ {
        let p = self.net.p();
        let mut z = StateZ::zeros(self.net);
        let mut link = 0;
        for node in &self.nodes {
            z.x[node.id * p..(node.id + 1) * p].copy_from_slice(&node.x);
            for slot in node.edges.iter().filter(|s| s.sign > 0.0) {
                z.y[slot.edge * p..(slot.edge + 1) * p].copy_from_slice(&slot.y);
            }
            for slot in &node.links {
                debug_assert!(self.net.anchor_links()[node.id].contains(&slot.anchor));
                z.w[link * p..(link + 1) * p].copy_from_slice(&slot.w);
                link += 1;
            }
        }
        z
    }

    /// Largest disagreement between the two endpoint copies of any `y_e`.
    pub fn edge_copy_mismatch(&self) -> f64 {
        let p = self.net.p();
        let mut tail = vec![0.0; self.net.num_edges() * p];
        let mut head = vec![0.0; self.net.num_edges() * p];
        for node in &self.nodes {
            for slot in &node.edges {
                let dst = if slot.sign > 0.0 {
                    &mut tail
                } else {
                    &mut head
                };
                dst[slot.edge * p..(slot.edge + 1) * p].copy_from_slice(&slot.y);
            }
        }
        tail.iter()
            .zip(&head)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Every node broadcasts its `x_i` to its neighbors' inboxes.
fn deliver(net: &Network, nodes: &mut [NodeState], log: &mut MessageLog, round: usize) {
    let p = net.p();
    let positions: Vec<Vec<f64>> = nodes.iter().map(|nd| nd.x.clone()).collect();
    for node in nodes.iter_mut() {
        node.inbox.from.clear();
        node.inbox.values.clear();
        for inc in net.incident(node.id) {
            node.inbox.from.push(inc.neighbor);
            node.inbox.values.push(positions[inc.neighbor].clone());
        }
    }
    for (i, _) in positions.iter().enumerate() {
        log.messages.push(Message {
            round,
            sender: i,
            receivers: net.incident(i).iter().map(|inc| inc.neighbor).collect(),
            scalars: p,
        });
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub x: Vec<f64>,
    pub trace: RunTrace,
    pub log: MessageLog,
    pub audit: LocalityAudit,
    /// Per-sensor Lipschitz constants used.
    pub lipschitz: Vec<f64>,
    /// Scalars spent agreeing on `L`, reported apart from the iterations.
    pub lipschitz_scalars: usize,
    pub edge_copy_mismatch: f64,
}

fn observe(
    net: &Network,
    meas: &Measurements,
    sim: &Simulator<'_>,
    iter: usize,
    comm: u64,
) -> TraceEntry {
    let z = sim.gather();
    TraceEntry {
        iter,
        cost_per_sensor: cost_original(net, meas, &z.x) / net.n() as f64,
        cost_z: cost_z(net, &z),
        comm_scalars: comm,
        mpe: net
            .true_positions()
            .map(|truth| mpe(std::slice::from_ref(&z.x), truth, net.p())),
    }
}

/// Runs the distributed algorithm with the same stopping rule as
/// [`crate::mm::solve`]. Without an override, `L` is agreed on by
/// max-consensus over `n` rounds.
pub fn simulate(
    net: &Network,
    meas: &Measurements,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<SimOutput, SimError> {
    let resolved = cfg.resolve_lipschitz(net)?;
    let (lipschitz, lipschitz_scalars) = if cfg.lipschitz_override.is_some() {
        (vec![resolved; net.n()], 0)
    } else {
        let rounds = net.n();
        let per_node = max_consensus_lipschitz(net, rounds);
        if per_node.iter().any(|&l| l != per_node[0]) {
            return Err(SimError::LipschitzDisagreement(per_node));
        }
        (per_node, max_consensus_scalars(net, rounds))
    };
    let mut sim = Simulator::new(net, meas, x0, &lipschitz)?;
    let per_iter = comm_per_iteration(net);
    let mut trace = RunTrace::default();
    trace.push(observe(net, meas, &sim, 0, 0));
    let mut stall = StallDetector::new(cfg.tol_rel_cost);
    for t in 1..=cfg.max_iters {
        sim.step(None)?;
        let prev = trace.last().map_or(f64::INFINITY, |e| e.cost_z);
        let entry = observe(net, meas, &sim, t, t as u64 * per_iter);
        trace.push(entry);
        if stall.update(prev, entry.cost_z) {
            break;
        }
    }
    Ok(SimOutput {
        x: sim.gather().x,
        trace,
        edge_copy_mismatch: sim.edge_copy_mismatch(),
        log: sim.log,
        audit: sim.audit,
        lipschitz,
        lipschitz_scalars,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mm::lipschitz_bound;

    fn path(n: usize) -> Network {
        let edges = (0..n - 1).map(|i| (i, i + 1)).collect();
        Network::new(n, 2, edges, &[], vec![vec![]; n], None).unwrap()
    }

    #[test]
    fn two_nodes_one_round_inbox() {
        let net = path(2);
        let meas = Measurements::new(&net, vec![1.0], vec![], 0.0).unwrap();
        let x0 = [0.0, 0.0, 0.5, 0.5];
        let l = vec![lipschitz_bound(&net); 2];
        let mut sim = Simulator::new(&net, &meas, &x0, &l).unwrap();
        assert_eq!(sim.nodes()[0].inbox_senders(), &[1]);
        assert_eq!(sim.nodes()[0].inbox_value(1), Some(&[0.5, 0.5][..]));
        assert_eq!(sim.nodes()[1].inbox_value(0), Some(&[0.0, 0.0][..]));
        sim.step(None).unwrap();
        assert_eq!(sim.nodes()[0].inbox_senders(), &[1]);
        assert_eq!(sim.log().round_scalars(1), 4);
    }

    #[test]
    fn star_agrees_after_two_rounds() {
        let edges = (1..5).map(|j| (0, j)).collect();
        let mut links = vec![vec![]; 5];
        links[4] = vec![0, 1];
        let net =
            Network::new(5, 2, edges, &[vec![0.0, 0.0], vec![1.0, 0.0]], links, None).unwrap();
        let l = max_consensus_lipschitz(&net, 2);
        assert!(l.iter().all(|&v| v == 2.0 * 4.0 + 2.0 + 2.0));
        let l1 = max_consensus_lipschitz(&net, 1);
        assert_ne!(l1[1], l1[0]);
    }

    #[test]
    fn path_needs_diameter_rounds() {
        let mut links = vec![vec![]; 5];
        links[0] = vec![0];
        let edges = (0..4).map(|i| (i, i + 1)).collect();
        let net = Network::new(5, 2, edges, &[vec![0.0, 0.0]], links, None).unwrap();
        let after1 = max_consensus_lipschitz(&net, 1);
        assert!(after1.iter().any(|&v| v != after1[0]));
        let after4 = max_consensus_lipschitz(&net, 4);
        assert!(after4.iter().all(|&v| v == lipschitz_bound(&net)));
    }

    #[test]
    fn non_neighbor_read_is_refused() {
        let net = path(3);
        let meas = Measurements::new(&net, vec![1.0, 1.0], vec![], 0.0).unwrap();
        let x0 = [0.0, 0.0, 1.0, 0.0, 2.0, 0.0];
        let mut sim = Simulator::new(&net, &meas, &x0, &[6.0; 3]).unwrap();
        assert_eq!(
            sim.probe_read(0, 2),
            Err(SimError::LocalityViolation {
                reader: 0,
                source_node: 2
            })
        );
        assert!(sim.probe_read(0, 1).is_ok());
        assert_eq!(sim.audit().non_local_reads(&net), 1);
    }

    #[test]
    fn message_log_csv() {
        let net = path(2);
        let meas = Measurements::new(&net, vec![1.0], vec![], 0.0).unwrap();
        let mut sim = Simulator::new(&net, &meas, &[0.0, 0.0, 1.0, 0.0], &[4.0; 2]).unwrap();
        sim.step(None).unwrap();
        let mut buf = Vec::new();
        sim.log().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "round,sender,scalars\n0,0,2\n0,1,2\n1,0,2\n1,1,2\n"
        );
    }

    #[test]
    fn bad_order_is_rejected() {
        let net = path(3);
        let meas = Measurements::new(&net, vec![1.0, 1.0], vec![], 0.0).unwrap();
        let mut sim = Simulator::new(&net, &meas, &[0.0; 6], &[6.0; 3]).unwrap();
        assert_eq!(sim.step(Some(&[0, 0, 1])), Err(SimError::BadOrder(3)));
    }
}
