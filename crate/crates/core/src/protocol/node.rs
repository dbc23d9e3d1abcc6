//! One robot's state machine for the distributed MCCST construction.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::messages::{Candidate, FragmentMatrix, Message, MessageKind, Payload};
use super::ProtocolError;
use crate::graph::{CommGraph, EdgeKey};
use crate::model::SubgroupId;

/// What a node knows before the protocol starts: its id, the team size,
/// its incident links with their comparator keys, and the (static)
/// subgroup assignment.
#[derive(Debug, Clone)]
pub struct NodeView {
    pub id: usize,
    pub n: usize,
    /// `(neighbor, key)` sorted by neighbor.
    pub incident: Vec<(usize, EdgeKey)>,
    pub subgroups: Arc<[SubgroupId]>,
    pub subgroup_sizes: Arc<[usize]>,
}

impl NodeView {
    /// Local views of every vertex of `graph`.
    pub fn all_from_graph(graph: &CommGraph) -> Vec<NodeView> {
        let subgroups: Arc<[SubgroupId]> = graph.subgroups().into();
        let mut sizes = alloc::vec![0usize; graph.subgroup_count()];
        for &s in graph.subgroups() {
            sizes[s] += 1;
        }
        let sizes: Arc<[usize]> = sizes.into();
        (0..graph.n())
            .map(|v| {
                let mut incident: Vec<(usize, EdgeKey)> = graph
                    .neighbors(v)
                    .iter()
                    .map(|&(u, k)| (u, graph.edges()[k].key))
                    .collect();
                incident.sort_by_key(|&(u, _)| u);
                NodeView {
                    id: v,
                    n: graph.n(),
                    incident,
                    subgroups: subgroups.clone(),
                    subgroup_sizes: sizes.clone(),
                }
            })
            .collect()
    }

    fn key_to(&self, u: usize) -> Option<EdgeKey> {
        self.incident
            .binary_search_by_key(&u, |&(v, _)| v)
            .ok()
            .map(|k| self.incident[k].1)
    }

    fn is_neighbor(&self, u: usize) -> bool {
        self.key_to(u).is_some()
    }

    /// True when every member of `subgroup` lies in `members`.
    fn subgroup_complete(&self, subgroup: SubgroupId, members: &[usize]) -> bool {
        let inside = members.iter().filter(|&&v| self.subgroups[v] == subgroup).count();
        inside == self.subgroup_sizes[subgroup]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Initializing,
    /// Own candidate known, waiting for children's reports.
    Idle,
    /// Asked the far endpoint of the local candidate for its fragment info.
    AwaitingInfo,
    /// Reported to the parent (or, for the leader, decided the round).
    Reported,
    /// Fragment adjacency spans the whole team.
    Done,
}

/// One node's protocol state.
#[derive(Debug, Clone)]
pub struct NodeProtocolState {
    view: NodeView,
    leader_id: usize,
    fragment: FragmentMatrix,
    phase: Phase,
    round: u32,
    initial_finished: bool,
    // Round snapshot, fixed at reset: the fragment tree rooted at the
    // round's leader.
    parent: Option<usize>,
    children: Vec<usize>,
    fragment_size: usize,
    members: Vec<usize>,
    own_candidate: Option<Candidate>,
    own_resolved: bool,
    /// Child → best candidate of that child's subtree and its node count.
    /// At the leader this holds every report of the fragment.
    mwoe_cache: BTreeMap<usize, (Option<Candidate>, usize)>,
    accepted: Vec<(usize, usize)>,
}

impl NodeProtocolState {
    pub fn new(view: NodeView) -> Self {
        let id = view.id;
        let n = view.n;
        Self {
            view,
            leader_id: id,
            fragment: FragmentMatrix::new(n),
            phase: Phase::Initializing,
            round: 0,
            initial_finished: false,
            parent: None,
            children: Vec::new(),
            fragment_size: 1,
            members: alloc::vec![id],
            own_candidate: None,
            own_resolved: false,
            mwoe_cache: BTreeMap::new(),
            accepted: Vec::new(),
        }
    }

    pub fn id(&self) -> usize {
        self.view.id
    }

    pub fn leader_id(&self) -> usize {
        self.leader_id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn fragment(&self) -> &FragmentMatrix {
        &self.fragment
    }

    pub fn initial_round_finished(&self) -> bool {
        self.initial_finished
    }

    pub fn view(&self) -> &NodeView {
        &self.view
    }

    /// `getEdgeList(A)`.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.fragment.edges()
    }

    /// Edges this node has accepted into the tree since the last call:
    /// its own initial-round choice and every accepted `Connect`.
    pub fn take_accepted(&mut self) -> Vec<(usize, usize)> {
        core::mem::take(&mut self.accepted)
    }

    fn msg(&self, to: usize, payload: Payload) -> Message {
        Message { from: self.view.id, to, payload }
    }

    fn refresh_after_growth(&mut self) {
        // Mid-round the phase is left alone: replies and reports for the
        // snapshot may still arrive. Done is declared at the next reset.
        self.leader_id = self.fragment.component_of(self.view.id)[0];
    }

    /// Merges a neighbor's fragment adjacency and gossips along tree edges:
    /// on growth, to every tree neighbor except the sender (and to the
    /// sender too if it is missing something); without growth, back to the
    /// sender only if it is missing something. Returns whether anything
    /// new was learned.
    fn absorb(
        &mut self,
        from: usize,
        incoming: &FragmentMatrix,
        sender_knows: &FragmentMatrix,
        out: &mut Vec<Message>,
        wrap: fn(FragmentMatrix) -> Payload,
    ) -> bool {
        let grew = self.fragment.union_with(incoming);
        let sender_stale = self.fragment != *sender_knows;
        if grew {
            self.refresh_after_growth();
            let targets: Vec<usize> = self.fragment.neighbors(self.view.id).filter(|&u| u != from).collect();
            for u in targets {
                out.push(self.msg(u, wrap(self.fragment.clone())));
            }
        }
        if sender_stale {
            out.push(self.msg(from, wrap(self.fragment.clone())));
        }
        grew
    }

    /// Seeds the initial round: connect along the smallest-key incident
    /// edge. In lexicographic mode an inter-subgroup edge is never taken
    /// here; such a node stays a singleton fragment until its subgroup
    /// question is settled by the processing rounds.
    pub fn start_initial(&mut self) -> Vec<Message> {
        if self.view.n == 1 {
            self.phase = Phase::Done;
            self.initial_finished = true;
            return Vec::new();
        }
        let Some(&(u, key)) = self.view.incident.iter().min_by_key(|&&(_, k)| k) else {
            return Vec::new();
        };
        if key.class != 0 {
            return Vec::new();
        }
        self.fragment.insert(self.view.id, u);
        self.accepted.push(key.edge());
        self.leader_id = self.view.id.min(u);
        alloc::vec![self.msg(u, Payload::Init { fragment: self.fragment.clone() })]
    }

    /// Marks a node whose fragment spans the team as finished.
    pub fn finish(&mut self) {
        if self.fragment.spans_from(self.view.id) {
            self.initial_finished = true;
            self.phase = Phase::Done;
        }
    }

    /// Handles one delivered message.
    pub fn handle(&mut self, msg: Message) -> Result<Vec<Message>, ProtocolError> {
        if msg.to != self.view.id {
            return Err(ProtocolError::Misrouted { node: self.view.id, to: msg.to });
        }
        if !self.view.is_neighbor(msg.from) {
            return Err(ProtocolError::NotNeighbor { node: self.view.id, from: msg.from });
        }
        if self.phase == Phase::Initializing {
            self.initial_round(msg)
        } else {
            self.process_round(msg)
        }
    }

    /// Initial round: merge fragment adjacency from `Init` messages and
    /// keep gossiping until no message carries new information.
    pub fn initial_round(&mut self, msg: Message) -> Result<Vec<Message>, ProtocolError> {
        let from = msg.from;
        let Payload::Init { fragment } = msg.payload else {
            return Err(self.unexpected(from, msg.payload.kind()));
        };
        let mut out = Vec::new();
        let grew = self.absorb(from, &fragment, &fragment, &mut out, |f| Payload::Init { fragment: f });
        if !grew {
            self.initial_finished = true;
        }
        Ok(out)
    }

    fn unexpected(&self, from: usize, kind: MessageKind) -> ProtocolError {
        ProtocolError::Unexpected { node: self.view.id, from, kind, phase: self.phase }
    }

    /// Processing rounds: candidate discovery, convergecast to the leader,
    /// connect commands, and fragment merges.
    pub fn process_round(&mut self, msg: Message) -> Result<Vec<Message>, ProtocolError> {
        let from = msg.from;
        let mut out = Vec::new();
        match msg.payload {
            Payload::Init { .. } => return Err(self.unexpected(from, MessageKind::Init)),
            Payload::GetInfo => {
                out.push(self.msg(
                    from,
                    Payload::InfoReply { leader: self.leader_id, fragment: self.fragment.clone() },
                ));
            }
            Payload::InfoReply { leader, fragment } => {
                let waiting_on = self.own_candidate.map(|c| c.far);
                if self.phase != Phase::AwaitingInfo || waiting_on != Some(from) {
                    return Err(self.unexpected(from, MessageKind::InfoReply));
                }
                let mut cand = self.own_candidate.expect("awaiting info implies a candidate");
                cand.far_leader = leader;
                if cand.key.class != 0 {
                    let far_members = fragment.component_of(from);
                    let far_ok = self.view.subgroup_complete(self.view.subgroups[from], &far_members);
                    let near_ok = self.view.subgroup_complete(self.view.subgroups[self.view.id], &self.members);
                    cand.blocked = !(far_ok && near_ok);
                }
                self.own_candidate = Some(cand);
                self.own_resolved = true;
                self.phase = Phase::Idle;
                self.try_report(&mut out)?;
            }
            Payload::Report { best, reporters } => {
                if !self.children.contains(&from) || self.mwoe_cache.contains_key(&from) {
                    return Err(ProtocolError::ReportOutsideFragment { node: self.view.id, from });
                }
                self.mwoe_cache.insert(from, (best, reporters));
                self.try_report(&mut out)?;
            }
            Payload::ConnectCmd { edge } => {
                if self.parent != Some(from) {
                    return Err(self.unexpected(from, MessageKind::ConnectCmd));
                }
                self.route_connect(edge, &mut out)?;
            }
            Payload::Connect { edge, leader: _, fragment } => {
                let (i, j) = edge;
                let expected = if from < self.view.id { (from, self.view.id) } else { (self.view.id, from) };
                if (i, j) != expected {
                    return Err(self.unexpected(from, MessageKind::Connect));
                }
                if !self.fragment.contains(i, j) {
                    self.accepted.push(edge);
                }
                let mut grown = fragment.clone();
                grown.insert(i, j);
                self.absorb(from, &grown, &fragment, &mut out, |f| Payload::Update { fragment: f });
            }
            Payload::Update { fragment } => {
                self.absorb(from, &fragment, &fragment, &mut out, |f| Payload::Update { fragment: f });
            }
        }
        Ok(out)
    }

    fn route_connect(&mut self, edge: (usize, usize), out: &mut Vec<Message>) -> Result<(), ProtocolError> {
        if let Some(c) = self.own_candidate.filter(|c| c.edge() == edge) {
            let leader = self.leader_id;
            out.push(self.msg(c.far, Payload::Connect { edge, leader, fragment: self.fragment.clone() }));
            return Ok(());
        }
        let via = self
            .mwoe_cache
            .iter()
            .find(|(_, (best, _))| best.map(|b| b.edge()) == Some(edge))
            .map(|(&child, _)| child);
        match via {
            Some(child) => {
                out.push(self.msg(child, Payload::ConnectCmd { edge }));
                Ok(())
            }
            None => Err(ProtocolError::ConnectCmdNotMwoe { node: self.view.id, edge }),
        }
    }

    fn try_report(&mut self, out: &mut Vec<Message>) -> Result<(), ProtocolError> {
        if !self.own_resolved || self.phase == Phase::Reported {
            return Ok(());
        }
        if self.children.iter().any(|c| !self.mwoe_cache.contains_key(c)) {
            return Ok(());
        }
        let reporters = 1 + self.mwoe_cache.values().map(|&(_, r)| r).sum::<usize>();
        let best = self
            .mwoe_cache
            .values()
            .filter_map(|&(b, _)| b)
            .chain(self.own_candidate)
            .min_by_key(|c| c.key);
        self.phase = Phase::Reported;
        match self.parent {
            Some(p) => out.push(self.msg(p, Payload::Report { best, reporters })),
            None => {
                if reporters != self.fragment_size {
                    return Err(ProtocolError::InconsistentReport {
                        leader: self.view.id,
                        expected: self.fragment_size,
                        got: reporters,
                    });
                }
                if let Some(c) = best.filter(|c| !c.blocked) {
                    self.route_connect(c.edge(), out)?;
                }
            }
        }
        Ok(())
    }

    /// Starts a new round after global quiescence. Nodes whose fragment
    /// spans the team are done; every other node snapshots its fragment
    /// tree, finds its smallest-key outgoing edge and asks the far
    /// endpoint for its fragment information.
    pub fn reset_round(&mut self) -> Vec<Message> {
        self.round += 1;
        self.initial_finished = true;
        self.accepted.clear();
        let id = self.view.id;
        if self.fragment.spans_from(id) {
            self.phase = Phase::Done;
            return Vec::new();
        }
        let members = self.fragment.component_of(id);
        let leader = members[0];
        self.leader_id = leader;
        let parents = self.fragment.bfs_parents(leader);
        self.parent = if id == leader { None } else { parents[id] };
        self.children = self.fragment.neighbors(id).filter(|&u| Some(u) != self.parent).collect();
        self.fragment_size = members.len();
        self.mwoe_cache.clear();
        self.own_resolved = false;
        self.own_candidate = self
            .view
            .incident
            .iter()
            .filter(|(u, _)| members.binary_search(u).is_err())
            .min_by_key(|&&(_, k)| k)
            .map(|&(u, key)| Candidate { key, owner: id, far: u, far_leader: u, blocked: false });
        self.members = members;
        let mut out = Vec::new();
        match self.own_candidate {
            Some(c) => {
                self.phase = Phase::AwaitingInfo;
                out.push(self.msg(c.far, Payload::GetInfo));
            }
            None => {
                self.own_resolved = true;
                self.phase = Phase::Idle;
                // Cannot fail: no reports have been received yet.
                let _ = self.try_report(&mut out);
            }
        }
        out
    }
}
