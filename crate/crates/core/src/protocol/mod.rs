//! Distributed MCCST construction.
//!
//! Every robot runs a [`NodeProtocolState`] that only talks to its
//! communication neighbors. Fragments start as single robots, connect
//! along their minimum-key outgoing edge, merge adjacency matrices and
//! re-elect the smallest id as leader, until one fragment spans the team.
//! Rounds are delimited by global quiescence of the simulated network,
//! which the [`NetworkHarness`] observes directly.

use alloc::vec::Vec;

use crate::graph::{self, CommGraph, GraphError, SpanningTreeEdges};

mod harness;
mod messages;
mod node;

pub use harness::{drive_until_quiescent, watchdog_budget, DeliveryPolicy, NetworkHarness, TraceEntry};
pub use messages::{Candidate, FragmentMatrix, Message, MessageKind, Payload};
pub use node::{NodeProtocolState, NodeView, Phase};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("node {node} received a message from non-neighbor {from}")]
    NotNeighbor { node: usize, from: usize },
    #[error("node {node} was handed a message addressed to {to}")]
    Misrouted { node: usize, to: usize },
    #[error("node {0} tried to message itself")]
    SelfMessage(usize),
    #[error("node {node} got unexpected {kind} from {from} in phase {phase:?}")]
    Unexpected { node: usize, from: usize, kind: MessageKind, phase: Phase },
    #[error("node {node} got a report from {from}, which is not one of its fragment children")]
    ReportOutsideFragment { node: usize, from: usize },
    #[error("node {node} got a connect command for non-MWOE edge {edge:?}")]
    ConnectCmdNotMwoe { node: usize, edge: (usize, usize) },
    #[error("leader {leader} counted {got} reports for a fragment of {expected}")]
    InconsistentReport { leader: usize, expected: usize, got: usize },
    #[error("message budget of {budget} exceeded")]
    WatchdogExceeded { budget: u64 },
    #[error("round {round} finished without any merge")]
    Stalled { round: u32 },
    #[error("reset requested while {pending} messages are in flight")]
    NotQuiescent { pending: usize },
    #[error("nodes disagree on the final tree")]
    Disagreement,
    #[error("accepted edge {0:?} closes a cycle")]
    Cycle((usize, usize)),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One edge entering the tree, as seen by the harness instrumentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeEvent {
    pub round: u32,
    pub edge: (usize, usize),
    pub inter_subgroup: bool,
    /// Both endpoint subgroups were each a single fragment (in the union
    /// of previously accepted edges) when this edge was accepted.
    pub subgroups_whole: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProtocolStats {
    pub messages: u64,
    pub by_kind: [u64; 7],
    /// Processing rounds after the initial round.
    pub rounds: u32,
    pub merges: Vec<MergeEvent>,
}

impl ProtocolStats {
    pub fn count(&self, kind: MessageKind) -> u64 {
        self.by_kind[kind.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProtocolOptions {
    pub policy: DeliveryPolicy,
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub tree: SpanningTreeEdges,
    pub stats: ProtocolStats,
    pub trace: Vec<TraceEntry>,
}

/// Runs the distributed construction on `graph` with the given delivery
/// policy and returns the agreed spanning tree.
pub fn run_protocol(graph: &CommGraph, policy: DeliveryPolicy) -> Result<(SpanningTreeEdges, ProtocolStats), ProtocolError> {
    let out = run_protocol_with(graph, ProtocolOptions { policy, trace: false })?;
    Ok((out.tree, out.stats))
}

pub fn run_protocol_with(graph: &CommGraph, options: ProtocolOptions) -> Result<ProtocolOutcome, ProtocolError> {
    let n = graph.n();
    if !graph::is_connected(graph) {
        return Err(GraphError::Disconnected.into());
    }
    for m in 0..graph.subgroup_count() {
        if !graph::induced_subgraph_connected(graph, m) {
            return Err(GraphError::SubgroupDisconnected(m).into());
        }
    }
    let mut nodes: Vec<NodeProtocolState> = NodeView::all_from_graph(graph).into_iter().map(NodeProtocolState::new).collect();
    let mut harness = NetworkHarness::new(graph, options.policy);
    if options.trace {
        harness.enable_trace();
    }
    let stats = drive_until_quiescent(&mut harness, &mut nodes)?;
    let reference = nodes[0].edge_list();
    if nodes.iter().any(|node| node.edge_list() != reference) {
        return Err(ProtocolError::Disagreement);
    }
    let tree = SpanningTreeEdges::new(n, reference)?;
    Ok(ProtocolOutcome { tree, stats, trace: harness.take_trace() })
}
