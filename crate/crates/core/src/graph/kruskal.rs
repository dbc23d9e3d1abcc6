use alloc::vec::Vec;

use super::{edges_induced_connected, CommGraph, EdgeKey, GraphError, SpanningTreeEdges};

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: alloc::vec![1; n],
        }
    }

    pub fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn set_size(&mut self, v: usize) -> usize {
        let r = self.find(v);
        self.size[r]
    }
}

/// Kruskal's algorithm over an arbitrary key per edge (smaller preferred).
/// Returns the chosen edge pairs in acceptance order, or `None` if the
/// edges do not connect all `n` vertices.
pub fn kruskal_by_key(n: usize, keyed: impl IntoIterator<Item = EdgeKey>) -> Option<Vec<(usize, usize)>> {
    let mut keys: Vec<EdgeKey> = keyed.into_iter().collect();
    keys.sort_unstable();
    let mut dsu = DisjointSet::new(n);
    let mut chosen = Vec::with_capacity(n.saturating_sub(1));
    for k in keys {
        let (i, j) = k.edge();
        if dsu.union(i, j) {
            chosen.push((i, j));
            if chosen.len() + 1 == n {
                break;
            }
        }
    }
    (chosen.len() + 1 == n || n == 0).then_some(chosen)
}

/// Centralized MCCST: the minimum spanning tree under the graph's
/// comparator keys.
///
/// Fails if the graph or any subgroup's intra-subgroup subgraph is
/// disconnected, since no spanning tree could then keep every subgroup
/// connected.
pub fn kruskal_mccst(graph: &CommGraph) -> Result<SpanningTreeEdges, GraphError> {
    let pairs = graph.pairs();
    if !super::edges_connected(graph.n(), &pairs) {
        return Err(GraphError::Disconnected);
    }
    for m in 0..graph.subgroup_count() {
        if !edges_induced_connected(graph.subgroups(), &pairs, m) {
            return Err(GraphError::SubgroupDisconnected(m));
        }
    }
    let chosen = kruskal_by_key(graph.n(), graph.edges().iter().map(|e| e.key)).ok_or(GraphError::Disconnected)?;
    SpanningTreeEdges::new(graph.n(), chosen)
}
