//! Proximity communication graphs, barrier functions, edge weighting and
//! spanning tree selection.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::model::{LambdaMode, RobotState, SubgroupId, WorldConfig};
use crate::Vec2;

mod kruskal;
pub mod oracle;
pub mod random;
mod spectral;

pub use kruskal::{kruskal_by_key, kruskal_mccst, DisjointSet};
pub use oracle::brute_force_constrained_mst;
pub use spectral::{algebraic_connectivity, laplacian_eigenvalues, symmetric_eigenvalues};

/// Safety barrier: non-negative iff the pair is at least `safe_radius` apart.
pub fn h_safety(xi: Vec2, xj: Vec2, safe_radius: f64) -> f64 {
    (xi - xj).norm_sq() - safe_radius * safe_radius
}

/// Connectivity barrier: non-negative iff the pair is within `comm_radius`.
pub fn h_connectivity(xi: Vec2, xj: Vec2, comm_radius: f64) -> f64 {
    comm_radius * comm_radius - (xi - xj).norm_sq()
}

/// Weight of a link under the nominal controls: the connectivity barrier
/// condition `ḣ + γh` evaluated at `û`. Larger means the nominal controls
/// strain the link less.
pub fn edge_weight(xi: Vec2, xj: Vec2, u_hat_i: Vec2, u_hat_j: Vec2, gamma: f64, comm_radius: f64) -> f64 {
    let h_dot = -2.0 * (xi - xj).dot(u_hat_i - u_hat_j);
    h_dot + gamma * h_connectivity(xi, xj, comm_radius)
}

/// All pairs `(i, j)`, `i < j`, within communication range.
pub fn proximity_pairs(positions: &[Vec2], comm_radius: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            if h_connectivity(positions[i], positions[j], comm_radius) >= 0.0 {
                out.push((i, j));
            }
        }
    }
    out
}

fn bfs_reaches_all(n: usize, edges: &[(usize, usize)], members: &[bool]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        if members[i] && members[j] {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let Some(start) = members.iter().position(|&m| m) else {
        return true;
    };
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    (0..n).all(|v| !members[v] || seen[v])
}

/// Breadth-first connectivity of an edge list over `n` vertices.
pub fn edges_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    bfs_reaches_all(n, edges, &vec![true; n])
}

/// Connectivity of the subgraph induced by the vertices labelled `subgroup`.
/// An empty subgroup counts as connected.
pub fn edges_induced_connected(labels: &[SubgroupId], edges: &[(usize, usize)], subgroup: SubgroupId) -> bool {
    let members: Vec<bool> = labels.iter().map(|&s| s == subgroup).collect();
    bfs_reaches_all(labels.len(), edges, &members)
}

/// Total order used to pick spanning tree edges; smaller is preferred.
///
/// `class` is 0 for every edge except inter-subgroup edges in
/// lexicographic mode, which get 1. `cost` is `-w'`. The canonical pair
/// `(i, j)` breaks the remaining ties so every key is unique.
#[derive(Debug, Clone, Copy)]
pub struct EdgeKey {
    pub class: u8,
    pub cost: f64,
    pub i: u32,
    pub j: u32,
}

impl EdgeKey {
    pub fn edge(&self) -> (usize, usize) {
        (self.i as usize, self.j as usize)
    }
}

impl Ord for EdgeKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.class
            .cmp(&other.class)
            .then_with(|| self.cost.total_cmp(&other.cost))
            .then_with(|| self.i.cmp(&other.i))
            .then_with(|| self.j.cmp(&other.j))
    }
}

impl PartialOrd for EdgeKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for EdgeKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for EdgeKey {}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    /// `w`: barrier condition at nominal controls.
    pub weight: f64,
    /// `w'`: weight after subgroup inflation (equals `weight` on
    /// inter-subgroup edges and in lexicographic mode).
    pub inflated_weight: f64,
    pub intra: bool,
    pub key: EdgeKey,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum GraphError {
    #[error("communication graph is disconnected")]
    Disconnected,
    #[error("subgroup {0} induced graph disconnected")]
    SubgroupDisconnected(SubgroupId),
    #[error("no spanning tree keeps every subgroup connected")]
    Infeasible,
    #[error("brute-force enumeration supports at most {max} vertices, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("explicit lambda must exceed 1, got {0}")]
    Lambda(f64),
    #[error("edge ({0},{1}) is not a valid edge of this graph")]
    BadEdge(usize, usize),
    #[error("edge set is not a spanning tree")]
    NotSpanningTree,
}

/// Proximity graph snapshot with per-edge weights and comparator keys.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    n: usize,
    subgroups: Vec<SubgroupId>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl CommGraph {
    /// Builds a graph from explicit weighted edges. Pairs are
    /// canonicalized to `i < j`; keys follow lexicographic mode.
    pub fn from_weighted_edges(
        subgroups: Vec<SubgroupId>,
        weighted: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, GraphError> {
        let n = subgroups.len();
        let mut edges: Vec<Edge> = Vec::new();
        for (a, b, w) in weighted {
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if i == j || j >= n {
                return Err(GraphError::BadEdge(a, b));
            }
            let intra = subgroups[i] == subgroups[j];
            edges.push(Edge {
                i,
                j,
                weight: w,
                inflated_weight: w,
                intra,
                key: lexicographic_key(i, j, w, intra),
            });
        }
        edges.sort_by_key(|e| (e.i, e.j));
        if let Some(d) = edges.windows(2).find(|p| (p[0].i, p[0].j) == (p[1].i, p[1].j)) {
            return Err(GraphError::BadEdge(d[0].i, d[0].j));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.i].push((e.j, k));
            adjacency[e.j].push((e.i, k));
        }
        Ok(Self { n, subgroups, edges, adjacency })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn subgroups(&self) -> &[SubgroupId] {
        &self.subgroups
    }

    pub fn subgroup_count(&self) -> usize {
        self.subgroups.iter().map(|s| s + 1).max().unwrap_or(0)
    }

    /// `(neighbor, edge index)` pairs incident to `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn edge(&self, i: usize, j: usize) -> Option<&Edge> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.adjacency
            .get(i)?
            .iter()
            .find(|&&(u, _)| u == j)
            .map(|&(_, k)| &self.edges[k])
    }

    /// Replaces every comparator key, e.g. to run the constructions under
    /// a custom ordering.
    pub fn with_keys(mut self, key: impl Fn(&Edge) -> EdgeKey) -> Self {
        for e in &mut self.edges {
            e.key = key(e);
        }
        self
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.i, e.j)).collect()
    }
}

fn lexicographic_key(i: usize, j: usize, w: f64, intra: bool) -> EdgeKey {
    EdgeKey {
        class: u8::from(!intra),
        cost: -w,
        i: i as u32,
        j: j as u32,
    }
}

/// Proximity graph of the current state, weighted under the nominal
/// controls `u_hat` and keyed for lexicographic mode.
pub fn build_comm_graph(robots: &[RobotState], config: &WorldConfig, u_hat: &[Vec2]) -> CommGraph {
    assert_eq!(robots.len(), u_hat.len(), "one nominal control per robot");
    let positions: Vec<Vec2> = robots.iter().map(|r| r.position).collect();
    let weighted = proximity_pairs(&positions, config.comm_radius).into_iter().map(|(i, j)| {
        let w = edge_weight(positions[i], positions[j], u_hat[i], u_hat[j], config.gamma, config.comm_radius);
        (i, j, w)
    });
    CommGraph::from_weighted_edges(robots.iter().map(|r| r.subgroup).collect(), weighted)
        .expect("proximity pairs are canonical and distinct")
}

/// Re-keys every edge for the given inflation mode.
///
/// Explicit mode scales intra-subgroup weights by `λ` and orders by
/// `-w'`; lexicographic mode orders intra-subgroup edges before all
/// inter-subgroup edges and then by `-w`.
pub fn inflate_weights(mut graph: CommGraph, mode: LambdaMode) -> Result<CommGraph, GraphError> {
    for e in &mut graph.edges {
        match mode {
            LambdaMode::Lexicographic => {
                e.inflated_weight = e.weight;
                e.key = lexicographic_key(e.i, e.j, e.weight, e.intra);
            }
            LambdaMode::Explicit(lambda) => {
                if !(lambda > 1.0) {
                    return Err(GraphError::Lambda(lambda));
                }
                e.inflated_weight = if e.intra { lambda * e.weight } else { e.weight };
                e.key = EdgeKey {
                    class: 0,
                    cost: -e.inflated_weight,
                    i: e.i as u32,
                    j: e.j as u32,
                };
            }
        }
    }
    Ok(graph)
}

pub fn is_connected(graph: &CommGraph) -> bool {
    edges_connected(graph.n, &graph.pairs())
}

pub fn induced_subgraph_connected(graph: &CommGraph, subgroup: SubgroupId) -> bool {
    edges_induced_connected(&graph.subgroups, &graph.pairs(), subgroup)
}

/// A spanning tree as a canonical (sorted, `i < j`) edge list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpanningTreeEdges {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl SpanningTreeEdges {
    /// Validates that `edges` form a spanning tree over `n` vertices.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut edges: Vec<(usize, usize)> = edges
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        edges.sort_unstable();
        if n == 0 || edges.len() != n - 1 {
            return Err(GraphError::NotSpanningTree);
        }
        let mut dsu = DisjointSet::new(n);
        for &(i, j) in &edges {
            if i == j || j >= n || !dsu.union(i, j) {
                return Err(GraphError::NotSpanningTree);
            }
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let e = if i < j { (i, j) } else { (j, i) };
        self.edges.binary_search(&e).is_ok()
    }

    /// True when every subgroup's induced subtree is connected.
    pub fn respects_subgroups(&self, labels: &[SubgroupId]) -> bool {
        let m = labels.iter().map(|s| s + 1).max().unwrap_or(0);
        (0..m).all(|s| edges_induced_connected(labels, &self.edges, s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WorldConfig;
    use proptest::prelude::*;

    fn robots_at(points: &[(f64, f64)], subgroups: &[usize]) -> Vec<RobotState> {
        points
            .iter()
            .zip(subgroups)
            .enumerate()
            .map(|(id, (&(x, y), &sg))| RobotState {
                id,
                position: Vec2::new(x, y),
                heading: 0.0,
                subgroup: sg,
                speed_limit: 1.0,
            })
            .collect()
    }

    #[test]
    fn h_safety_examples() {
        let rs = 0.1;
        assert_eq!(h_safety(Vec2::ZERO, Vec2::new(rs, 0.0), rs), 0.0);
        assert_eq!(h_safety(Vec2::ZERO, Vec2::ZERO, rs), -rs * rs);
        assert!((h_safety(Vec2::ZERO, Vec2::new(0.9, 0.0), 0.1) - 0.80).abs() < 1e-12);
    }

    #[test]
    fn h_connectivity_examples() {
        assert_eq!(h_connectivity(Vec2::ZERO, Vec2::new(1.0, 0.0), 1.0), 0.0);
        assert_eq!(h_connectivity(Vec2::ZERO, Vec2::ZERO, 1.0), 1.0);
        assert!((h_connectivity(Vec2::ZERO, Vec2::new(0.9, 0.0), 1.0) - 0.19).abs() < 1e-12);
    }

    #[test]
    fn edge_weight_examples() {
        let xi = Vec2::ZERO;
        let xj = Vec2::new(0.9, 0.0);
        let w0 = edge_weight(xi, xj, Vec2::ZERO, Vec2::ZERO, 2.0, 1.0);
        assert!((w0 - 2.0 * (1.0 - 0.81)).abs() < 1e-12);
        let apart = edge_weight(xi, xj, Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), 1.0, 1.0);
        assert!((apart - -3.41).abs() < 1e-12);
        let toward = edge_weight(xi, xj, Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), 1.0, 1.0);
        assert!((toward - 3.79).abs() < 1e-12);
    }

    #[test]
    fn build_collinear_and_coincident() {
        let cfg = WorldConfig::default();
        let robots = robots_at(&[(0.0, 0.0), (0.9, 0.0), (1.8, 0.0)], &[0, 0, 0]);
        let g = build_comm_graph(&robots, &cfg, &[Vec2::ZERO; 3]);
        assert_eq!(g.pairs(), vec![(0, 1), (1, 2)]);

        let robots = robots_at(&[(0.3, 0.3); 5], &[0, 1, 0, 1, 0]);
        let g = build_comm_graph(&robots, &cfg, &[Vec2::ZERO; 5]);
        assert_eq!(g.edges().len(), 10);
        assert!(g.edge(0, 2).unwrap().intra);
        assert!(!g.edge(1, 2).unwrap().intra);
    }

    #[test]
    fn lexicographic_prefers_intra() {
        let g = CommGraph::from_weighted_edges(vec![0, 0, 1], [(0, 1, 2.0), (1, 2, 100.0)]).unwrap();
        let g = inflate_weights(g, LambdaMode::Lexicographic).unwrap();
        let intra = g.edge(0, 1).unwrap().key;
        let inter = g.edge(1, 2).unwrap().key;
        assert!(intra < inter);
    }

    #[test]
    fn explicit_inflation() {
        let g = CommGraph::from_weighted_edges(vec![0, 0, 1], [(0, 1, 2.0), (1, 2, 100.0)]).unwrap();
        let g = inflate_weights(g, LambdaMode::Explicit(1000.0)).unwrap();
        assert_eq!(g.edge(0, 1).unwrap().inflated_weight, 2000.0);
        assert_eq!(g.edge(1, 2).unwrap().inflated_weight, 100.0);
        let g2 = CommGraph::from_weighted_edges(vec![0, 0], [(0, 1, 1.0)]).unwrap();
        assert_eq!(inflate_weights(g2, LambdaMode::Explicit(1.0)), Err(GraphError::Lambda(1.0)));
    }

    #[test]
    fn all_inter_orders_by_negative_weight() {
        let g = CommGraph::from_weighted_edges(
            vec![0, 1, 2, 3],
            [(0, 1, 3.0), (1, 2, -1.0), (2, 3, 7.0), (0, 3, 0.5)],
        )
        .unwrap();
        for mode in [LambdaMode::Lexicographic, LambdaMode::Explicit(50.0)] {
            let g = inflate_weights(g.clone(), mode).unwrap();
            let mut by_key: Vec<_> = g.edges().iter().collect();
            by_key.sort_by_key(|e| e.key);
            let order: Vec<f64> = by_key.iter().map(|e| e.weight).collect();
            assert_eq!(order, vec![7.0, 3.0, 0.5, -1.0]);
        }
    }

    #[test]
    fn duplicate_and_bad_edges_rejected() {
        assert!(CommGraph::from_weighted_edges(vec![0, 0], [(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        assert!(CommGraph::from_weighted_edges(vec![0, 0], [(0, 0, 1.0)]).is_err());
        assert!(CommGraph::from_weighted_edges(vec![0, 0], [(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn connectivity_checks() {
        let path = CommGraph::from_weighted_edges(vec![0, 0, 1], [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert!(is_connected(&path));
        assert!(induced_subgraph_connected(&path, 0));
        assert!(induced_subgraph_connected(&path, 1));
        let empty = CommGraph::from_weighted_edges(vec![0, 0], []).unwrap();
        assert!(!is_connected(&empty));
        let split = CommGraph::from_weighted_edges(vec![0, 1, 0], [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert!(is_connected(&split));
        assert!(!induced_subgraph_connected(&split, 0));
    }

    #[test]
    fn spanning_tree_validation() {
        assert!(SpanningTreeEdges::new(3, [(1, 0), (2, 1)]).is_ok());
        assert!(SpanningTreeEdges::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(SpanningTreeEdges::new(4, [(0, 1), (1, 2), (0, 2)]).is_err());
        assert_eq!(SpanningTreeEdges::new(1, []).unwrap().len(), 0);
    }

    fn arb_point() -> impl Strategy<Value = Vec2> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| Vec2::new(x, y))
    }

    proptest! {
        #[test]
        fn barrier_sum_identity(a in arb_point(), b in arb_point(), rs in 0.01..0.5f64, extra in 0.01..2.0f64) {
            let rc = rs + extra;
            let sum = h_safety(a, b, rs) + h_connectivity(a, b, rc);
            let expect = rc * rc - rs * rs;
            prop_assert!((sum - expect).abs() <= 1e-12 * (1.0 + (a - b).norm_sq()));
        }

        #[test]
        fn edge_weight_symmetric(a in arb_point(), b in arb_point(), ua in arb_point(), ub in arb_point(), g in 0.1..5.0f64) {
            let w1 = edge_weight(a, b, ua, ub, g, 1.0);
            let w2 = edge_weight(b, a, ub, ua, g, 1.0);
            prop_assert_eq!(w1, w2);
        }
    }
}
