//! Random connected geometric instances with connected subgroups.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use super::{edges_connected, proximity_pairs, CommGraph};
use crate::Vec2;

/// Uniform sample in `[0, 1)`.
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit_f64(rng)
}

pub fn index(rng: &mut impl RngCore, len: usize) -> usize {
    (rng.next_u64() % len as u64) as usize
}

/// Splits a connected graph into `k` regions by multi-source BFS from
/// distinct random seeds; each region induces a connected subgraph.
pub fn bfs_partition(rng: &mut impl RngCore, n: usize, pairs: &[(usize, usize)], k: usize) -> Vec<usize> {
    let k = k.clamp(1, n.max(1));
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in pairs {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut label = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut seeds: Vec<usize> = Vec::with_capacity(k);
    while seeds.len() < k {
        let s = index(rng, n);
        if !seeds.contains(&s) {
            seeds.push(s);
        }
    }
    for (sg, &s) in seeds.iter().enumerate() {
        label[s] = sg;
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if label[u] == usize::MAX {
                label[u] = label[v];
                queue.push_back(u);
            }
        }
    }
    label
}

/// A connected random geometric graph on `n` vertices (communication
/// radius 1, density chosen so the expected degree stays moderate), with
/// `subgroups` BFS-grown subgroups and i.i.d. uniform weights in
/// `[-weight_span, weight_span]`.
pub fn random_geometric_instance(rng: &mut impl RngCore, n: usize, subgroups: usize, weight_span: f64) -> CommGraph {
    let side = libm::sqrt(n as f64) * 0.7;
    loop {
        let points: Vec<Vec2> = (0..n)
            .map(|_| Vec2::new(uniform(rng, 0.0, side), uniform(rng, 0.0, side)))
            .collect();
        let pairs = proximity_pairs(&points, 1.0);
        if !edges_connected(n, &pairs) {
            continue;
        }
        let labels = bfs_partition(rng, n, &pairs, subgroups);
        let weighted: Vec<(usize, usize, f64)> = pairs
            .iter()
            .map(|&(i, j)| (i, j, uniform(rng, -weight_span, weight_span)))
            .collect();
        return CommGraph::from_weighted_edges(labels, weighted).expect("canonical pairs");
    }
}
