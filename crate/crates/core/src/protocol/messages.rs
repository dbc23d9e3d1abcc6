use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::graph::EdgeKey;

/// Symmetric `n × n` boolean adjacency of a fragment tree, stored as
/// one bitset row per vertex.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FragmentMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl FragmentMatrix {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Self { n, words, bits: vec![0; n * words] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn set(&mut self, r: usize, c: usize) {
        self.bits[r * self.words + c / 64] |= 1 << (c % 64);
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        self.set(i, j);
        self.set(j, i);
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] & (1 << (j % 64)) != 0
    }

    /// ORs `other` into `self`; true if anything new was learned.
    pub fn union_with(&mut self, other: &FragmentMatrix) -> bool {
        debug_assert_eq!(self.n, other.n);
        let mut changed = false;
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            let merged = *a | *b;
            changed |= merged != *a;
            *a = merged;
        }
        changed
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let row = &self.bits[v * self.words..(v + 1) * self.words];
        row.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            core::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + b)
            })
        })
    }

    /// Canonical `(i, j)`, `i < j`, edge list in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| self.neighbors(i).filter(move |&j| j > i).map(move |j| (i, j)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum::<usize>() / 2
    }

    /// Breadth-first parent pointers from `root` over the stored edges;
    /// `parent[root] == Some(root)`, unreached vertices are `None`.
    pub fn bfs_parents(&self, root: usize) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.n];
        parent[root] = Some(root);
        let mut queue = alloc::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for u in self.neighbors(v) {
                if parent[u].is_none() {
                    parent[u] = Some(v);
                    queue.push_back(u);
                }
            }
        }
        parent
    }

    /// Vertices connected to `v` (including `v`), ascending.
    pub fn component_of(&self, v: usize) -> Vec<usize> {
        self.bfs_parents(v)
            .iter()
            .enumerate()
            .filter_map(|(u, p)| p.map(|_| u))
            .collect()
    }

    /// True when `v`'s component covers all `n` vertices (`isConnected(A)`).
    pub fn spans_from(&self, v: usize) -> bool {
        self.bfs_parents(v).iter().all(Option::is_some)
    }
}

impl fmt::Debug for FragmentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FragmentMatrix").field("n", &self.n).field("edges", &self.edges()).finish()
    }
}

/// A fragment's candidate minimum-weight outgoing edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub key: EdgeKey,
    /// Endpoint inside the reporting fragment.
    pub owner: usize,
    /// Endpoint in the neighboring fragment.
    pub far: usize,
    /// Leader of the neighboring fragment, as reported by `far`.
    pub far_leader: usize,
    /// The edge crosses subgroups while one side's subgroup is still split
    /// over several fragments; the fragment must wait a round.
    pub blocked: bool,
}

impl Candidate {
    pub fn edge(&self) -> (usize, usize) {
        self.key.edge()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    Init,
    GetInfo,
    InfoReply,
    Report,
    ConnectCmd,
    Connect,
    Update,
}

impl MessageKind {
    pub const ALL: [MessageKind; 7] = [
        MessageKind::Init,
        MessageKind::GetInfo,
        MessageKind::InfoReply,
        MessageKind::Report,
        MessageKind::ConnectCmd,
        MessageKind::Connect,
        MessageKind::Update,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Init => "init",
            MessageKind::GetInfo => "get_info",
            MessageKind::InfoReply => "info_reply",
            MessageKind::Report => "report",
            MessageKind::ConnectCmd => "connect_cmd",
            MessageKind::Connect => "connect",
            MessageKind::Update => "update",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// Initial-round fragment adjacency.
    Init { fragment: FragmentMatrix },
    GetInfo,
    InfoReply { leader: usize, fragment: FragmentMatrix },
    /// Best candidate of the sender's subtree and how many nodes it covers.
    Report { best: Option<Candidate>, reporters: usize },
    /// Leader's instruction, routed down the fragment tree, to connect
    /// along `edge`.
    ConnectCmd { edge: (usize, usize) },
    Connect { edge: (usize, usize), leader: usize, fragment: FragmentMatrix },
    Update { fragment: FragmentMatrix },
}

impl Payload {
    pub fn kind(&self) -> MessageKind {
        match self {
            Payload::Init { .. } => MessageKind::Init,
            Payload::GetInfo => MessageKind::GetInfo,
            Payload::InfoReply { .. } => MessageKind::InfoReply,
            Payload::Report { .. } => MessageKind::Report,
            Payload::ConnectCmd { .. } => MessageKind::ConnectCmd,
            Payload::Connect { .. } => MessageKind::Connect,
            Payload::Update { .. } => MessageKind::Update,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub from: usize,
    pub to: usize,
    pub payload: Payload,
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        self.payload.kind()
    }
}
