//! Simulated message network: per-link FIFO queues with pluggable
//! delivery order, message accounting, the watchdog, and the merge
//! instrumentation used by the invariant checks.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::RngCore;

use super::messages::{Message, MessageKind};
use super::node::{NodeProtocolState, Phase};
use super::{MergeEvent, ProtocolError, ProtocolStats};
use crate::graph::{CommGraph, DisjointSet};
use crate::model::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeliveryPolicy {
    /// Deliver in global send order.
    #[default]
    ImmediateFifo,
    /// Deliver the head of a uniformly random non-empty link each time.
    RandomizedDelay(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub round: u32,
    pub seq: u64,
    pub from: usize,
    pub to: usize,
    pub kind: MessageKind,
}

/// Message budget `16 · N · (⌈log₂ N⌉ + 1)`: sixteen messages per node
/// for the initial round and each of at most `⌈log₂ N⌉` merge rounds.
pub fn watchdog_budget(n: usize) -> u64 {
    let n = n.max(1) as u64;
    let log = u64::from(64 - (n - 1).leading_zeros());
    16 * n * (log + 1)
}

pub struct NetworkHarness {
    policy: DeliveryPolicy,
    links: BTreeMap<(usize, usize), usize>,
    queues: Vec<VecDeque<Message>>,
    fifo: VecDeque<usize>,
    nonempty: Vec<usize>,
    slot: Vec<Option<usize>>,
    pending: usize,
    rng: ChaCha8Rng,
    round: u32,
    seq: u64,
    budget: u64,
    stats: ProtocolStats,
    trace: Option<Vec<TraceEntry>>,
    labels: Vec<usize>,
    members_of: Vec<Vec<usize>>,
    accepted: DisjointSet,
    accepted_edges: BTreeSet<(usize, usize)>,
    merges_this_round: usize,
}

impl NetworkHarness {
    pub fn new(graph: &CommGraph, policy: DeliveryPolicy) -> Self {
        let mut links = BTreeMap::new();
        for e in graph.edges() {
            let k = links.len();
            links.insert((e.i, e.j), k);
            links.insert((e.j, e.i), k + 1);
        }
        let seed = match policy {
            DeliveryPolicy::ImmediateFifo => 0,
            DeliveryPolicy::RandomizedDelay(s) => s,
        };
        let labels = graph.subgroups().to_vec();
        let mut members_of = alloc::vec![Vec::new(); graph.subgroup_count()];
        for (v, &s) in labels.iter().enumerate() {
            members_of[s].push(v);
        }
        let count = links.len();
        Self {
            policy,
            links,
            queues: (0..count).map(|_| VecDeque::new()).collect(),
            fifo: VecDeque::new(),
            nonempty: Vec::new(),
            slot: alloc::vec![None; count],
            pending: 0,
            rng: seeded_rng(seed, 0x006d_6363_7374),
            round: 0,
            seq: 0,
            budget: watchdog_budget(graph.n()),
            stats: ProtocolStats::default(),
            trace: None,
            labels,
            members_of,
            accepted: DisjointSet::new(graph.n()),
            accepted_edges: BTreeSet::new(),
            merges_this_round: 0,
        }
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<TraceEntry> {
        self.trace.take().unwrap_or_default()
    }

    pub fn stats(&self) -> &ProtocolStats {
        &self.stats
    }

    pub fn pending(&self) -> usize {
        self.pending
    }

    pub fn is_quiescent(&self) -> bool {
        self.pending == 0
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn send(&mut self, msg: Message) -> Result<(), ProtocolError> {
        if msg.from == msg.to {
            return Err(ProtocolError::SelfMessage(msg.from));
        }
        let &link = self
            .links
            .get(&(msg.from, msg.to))
            .ok_or(ProtocolError::NotNeighbor { node: msg.to, from: msg.from })?;
        self.stats.messages += 1;
        self.stats.by_kind[msg.kind().index()] += 1;
        if self.stats.messages > self.budget {
            return Err(ProtocolError::WatchdogExceeded { budget: self.budget });
        }
        self.queues[link].push_back(msg);
        self.pending += 1;
        match self.policy {
            DeliveryPolicy::ImmediateFifo => self.fifo.push_back(link),
            DeliveryPolicy::RandomizedDelay(_) => {
                if self.slot[link].is_none() {
                    self.slot[link] = Some(self.nonempty.len());
                    self.nonempty.push(link);
                }
            }
        }
        Ok(())
    }

    pub fn send_all(&mut self, msgs: impl IntoIterator<Item = Message>) -> Result<(), ProtocolError> {
        msgs.into_iter().try_for_each(|m| self.send(m))
    }

    /// Next message to deliver under the policy; per-link order is FIFO.
    pub fn next_message(&mut self) -> Option<Message> {
        let link = match self.policy {
            DeliveryPolicy::ImmediateFifo => self.fifo.pop_front()?,
            DeliveryPolicy::RandomizedDelay(_) => {
                if self.nonempty.is_empty() {
                    return None;
                }
                let pick = (self.rng.next_u64() % self.nonempty.len() as u64) as usize;
                self.nonempty[pick]
            }
        };
        let msg = self.queues[link].pop_front().expect("scheduled link has a message");
        if self.queues[link].is_empty() {
            if let Some(pos) = self.slot[link].take() {
                self.nonempty.swap_remove(pos);
                if let Some(&moved) = self.nonempty.get(pos) {
                    self.slot[moved] = Some(pos);
                }
            }
        }
        self.pending -= 1;
        self.seq += 1;
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEntry { round: self.round, seq: self.seq, from: msg.from, to: msg.to, kind: msg.kind() });
        }
        Some(msg)
    }

    fn subgroup_whole(&mut self, s: usize) -> bool {
        let members = core::mem::take(&mut self.members_of[s]);
        let whole = members.split_first().is_none_or(|(&first, rest)| {
            let root = self.accepted.find(first);
            rest.iter().all(|&v| self.accepted.find(v) == root)
        });
        self.members_of[s] = members;
        whole
    }

    /// Instrumentation: records tree edges accepted by a node, rejecting
    /// any edge that would close a cycle in the union of accepted edges.
    pub fn record_accepted(&mut self, edges: Vec<(usize, usize)>) -> Result<(), ProtocolError> {
        for edge in edges {
            if !self.accepted_edges.insert(edge) {
                continue;
            }
            let (i, j) = edge;
            let inter = self.labels[i] != self.labels[j];
            let whole = !inter || (self.subgroup_whole(self.labels[i]) && self.subgroup_whole(self.labels[j]));
            if !self.accepted.union(i, j) {
                return Err(ProtocolError::Cycle(edge));
            }
            self.merges_this_round += 1;
            self.stats.merges.push(MergeEvent { round: self.round, edge, inter_subgroup: inter, subgroups_whole: whole });
        }
        Ok(())
    }

    /// Starts the next round on every node. Requires an empty network.
    pub fn reset_round(&mut self, nodes: &mut [NodeProtocolState]) -> Result<(), ProtocolError> {
        if !self.is_quiescent() {
            return Err(ProtocolError::NotQuiescent { pending: self.pending });
        }
        self.round += 1;
        self.stats.rounds = self.round;
        self.merges_this_round = 0;
        for node in nodes.iter_mut() {
            let out = node.reset_round();
            self.send_all(out)?;
        }
        Ok(())
    }

    fn deliver_all(&mut self, nodes: &mut [NodeProtocolState]) -> Result<(), ProtocolError> {
        while let Some(msg) = self.next_message() {
            let to = msg.to;
            let out = nodes[to].handle(msg)?;
            let accepted = nodes[to].take_accepted();
            self.record_accepted(accepted)?;
            self.send_all(out)?;
        }
        Ok(())
    }
}

/// Seeds the initial round, then alternates delivery-until-quiescence with
/// round resets until every node's fragment spans the team.
pub fn drive_until_quiescent(harness: &mut NetworkHarness, nodes: &mut [NodeProtocolState]) -> Result<ProtocolStats, ProtocolError> {
    for node in nodes.iter_mut() {
        let out = node.start_initial();
        let accepted = node.take_accepted();
        harness.record_accepted(accepted)?;
        harness.send_all(out)?;
    }
    loop {
        harness.deliver_all(nodes)?;
        if nodes.iter().all(|n| n.phase() == Phase::Done || n.fragment().spans_from(n.id())) {
            break;
        }
        if harness.round > 0 && harness.merges_this_round == 0 {
            return Err(ProtocolError::Stalled { round: harness.round });
        }
        harness.reset_round(nodes)?;
    }
    for node in nodes.iter_mut() {
        node.finish();
    }
    Ok(harness.stats.clone())
}
