//! Exhaustive constrained spanning tree search, used to check the
//! Kruskal and distributed constructions on small graphs.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{CommGraph, GraphError, SpanningTreeEdges};
use crate::model::SubgroupId;

pub const BRUTE_FORCE_MAX_N: usize = 9;

/// Total weight, tie-break profile and chosen edge indices.
type Best = (f64, Vec<(bool, f64, usize, usize)>, Vec<usize>);

struct Search<'a> {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    labels: &'a [SubgroupId],
    chosen: Vec<usize>,
    best: Option<Best>,
}

fn root(parent: &[usize], mut v: usize) -> usize {
    while parent[v] != v {
        v = parent[v];
    }
    v
}

impl Search<'_> {
    fn run(&mut self, k: usize, parent: &mut Vec<usize>) {
        let need = self.n - 1 - self.chosen.len();
        if need == 0 {
            self.consider();
            return;
        }
        if self.edges.len() - k < need {
            return;
        }
        let (i, j, _) = self.edges[k];
        let (ri, rj) = (root(parent, i), root(parent, j));
        if ri != rj {
            let saved = parent.clone();
            parent[ri] = rj;
            self.chosen.push(k);
            self.run(k + 1, parent);
            self.chosen.pop();
            *parent = saved;
        }
        self.run(k + 1, parent);
    }

    fn subgroups_connected(&self) -> bool {
        let m = self.labels.iter().map(|s| s + 1).max().unwrap_or(0);
        (0..m).all(|sg| {
            let members: Vec<usize> = (0..self.n).filter(|&v| self.labels[v] == sg).collect();
            let Some(&start) = members.first() else {
                return true;
            };
            let mut reached = vec![false; self.n];
            reached[start] = true;
            let mut changed = true;
            while changed {
                changed = false;
                for &k in &self.chosen {
                    let (a, b, _) = self.edges[k];
                    if self.labels[a] == sg && self.labels[b] == sg && reached[a] != reached[b] {
                        reached[a] = true;
                        reached[b] = true;
                        changed = true;
                    }
                }
            }
            members.iter().all(|&v| reached[v])
        })
    }

    fn consider(&mut self) {
        if !self.subgroups_connected() {
            return;
        }
        // Sort by (inter-subgroup, -w, i, j); sum in that order so equal
        // multisets of weights give bit-identical totals.
        let mut profile: Vec<(bool, f64, usize, usize)> = self
            .chosen
            .iter()
            .map(|&k| {
                let (i, j, w) = self.edges[k];
                (self.labels[i] != self.labels[j], -w, i, j)
            })
            .collect();
        profile.sort_by(cmp_profile_entry);
        let total: f64 = profile.iter().fold(0.0, |acc, e| acc - e.1);
        let better = match &self.best {
            None => true,
            Some((best_total, best_profile, _)) => match total.total_cmp(best_total) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => cmp_profiles(&profile, best_profile) == Ordering::Less,
            },
        };
        if better {
            self.best = Some((total, profile, self.chosen.clone()));
        }
    }
}

fn cmp_profile_entry(a: &(bool, f64, usize, usize), b: &(bool, f64, usize, usize)) -> Ordering {
    a.0.cmp(&b.0)
        .then_with(|| a.1.total_cmp(&b.1))
        .then_with(|| a.2.cmp(&b.2))
        .then_with(|| a.3.cmp(&b.3))
}

fn cmp_profiles(a: &[(bool, f64, usize, usize)], b: &[(bool, f64, usize, usize)]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = cmp_profile_entry(x, y);
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Enumerates every spanning tree of `graph` (at most
/// [`BRUTE_FORCE_MAX_N`] vertices), keeps those whose subgroup-induced
/// subtrees are connected, and returns the one with the largest total
/// raw weight `Σw`. Ties go to the tree whose edges, sorted
/// intra-subgroup first and then by descending weight and index pair,
/// compare smallest.
pub fn brute_force_constrained_mst(graph: &CommGraph, subgroups: &[SubgroupId]) -> Result<SpanningTreeEdges, GraphError> {
    let n = graph.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(GraphError::TooLarge { n, max: BRUTE_FORCE_MAX_N });
    }
    assert_eq!(subgroups.len(), n, "one subgroup label per vertex");
    if n <= 1 {
        return SpanningTreeEdges::new(n.max(1), []);
    }
    let mut search = Search {
        n,
        edges: graph.edges().iter().map(|e| (e.i, e.j, e.weight)).collect(),
        labels: subgroups,
        chosen: Vec::new(),
        best: None,
    };
    let mut parent: Vec<usize> = (0..n).collect();
    search.run(0, &mut parent);
    let (_, _, chosen) = search.best.ok_or(GraphError::Infeasible)?;
    let edges = chosen.iter().map(|&k| (search.edges[k].0, search.edges[k].1));
    SpanningTreeEdges::new(n, edges)
}
