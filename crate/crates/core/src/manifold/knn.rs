use std::collections::BTreeMap;

use rayon::prelude::*;

use super::FeatureMatrix;
use crate::error::{Error, Result};
use crate::matrix::{euclidean, squared_euclidean};

/// Symmetric weighted k-nearest-neighbor graph. Adjacency lists are sorted
/// by neighbor id; weights are Euclidean feature distances.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub n: usize,
    pub k: usize,
    pub edges: Vec<Vec<(usize, f64)>>,
}

/// The `k` nearest rows to row `i`, ties broken by lower id.
fn nearest(features: &FeatureMatrix, i: usize, k: usize) -> Vec<usize> {
    let xi = features.row(i);
    let mut cand: Vec<(f64, usize)> = (0..features.len())
        .filter(|&j| j != i)
        .map(|j| (squared_euclidean(xi, features.row(j)), j))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k, cmp);
        cand.truncate(k);
    }
    cand.sort_by(cmp);
    cand.into_iter().map(|(_, j)| j).collect()
}

/// kNN graph over feature rows, symmetrized by union.
pub fn build_knn_graph(features: &FeatureMatrix, k: usize) -> Result<NeighborGraph> {
    let n = features.len();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    let outgoing: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| nearest(features, i, k))
        .collect();

    let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for (i, nbrs) in outgoing.iter().enumerate() {
        for &j in nbrs {
            let (a, b) = (i.min(j), i.max(j));
            let w = euclidean(features.row(a), features.row(b));
            adj[i].insert(j, w);
            adj[j].insert(i, w);
        }
    }
    Ok(NeighborGraph {
        n,
        k,
        edges: adj.into_iter().map(|m| m.into_iter().collect()).collect(),
    })
}

impl NeighborGraph {
    pub fn degree(&self, i: usize) -> usize {
        self.edges[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Connected-component id per node, numbered by smallest member.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.edges[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Component sizes, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        let comp = self.components();
        let count = comp.iter().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; count];
        for c in comp {
            sizes[c] += 1;
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    pub fn is_connected(&self) -> bool {
        self.component_sizes().len() <= 1
    }

    fn insert_edge(&mut self, i: usize, j: usize, w: f64) {
        for (a, b) in [(i, j), (j, i)] {
            match self.edges[a].binary_search_by(|e| e.0.cmp(&b)) {
                Ok(pos) => self.edges[a][pos].1 = w,
                Err(pos) => self.edges[a].insert(pos, (b, w)),
            }
        }
    }

    /// Join every pair of components with its shortest inter-component
    /// Euclidean edge. No-op on a connected graph.
    pub fn bridge_components(&mut self, features: &FeatureMatrix) {
        let comp = self.components();
        let count = comp.iter().max().map_or(0, |m| m + 1);
        if count <= 1 {
            return;
        }
        // best[(a, b)] = (squared distance, i, j) with comp[i] = a < b = comp[j]
        let per_row: Vec<BTreeMap<(usize, usize), (f64, usize, usize)>> = (0..self.n)
            .into_par_iter()
            .map(|i| {
                let mut best: BTreeMap<(usize, usize), (f64, usize, usize)> = BTreeMap::new();
                let xi = features.row(i);
                for j in i + 1..self.n {
                    if comp[i] == comp[j] {
                        continue;
                    }
                    let d = squared_euclidean(xi, features.row(j));
                    let key = (comp[i].min(comp[j]), comp[i].max(comp[j]));
                    let e = best.entry(key).or_insert((d, i, j));
                    if d < e.0 {
                        *e = (d, i, j);
                    }
                }
                best
            })
            .collect();
        let mut best: BTreeMap<(usize, usize), (f64, usize, usize)> = BTreeMap::new();
        for row in per_row {
            for (key, cand) in row {
                let e = best.entry(key).or_insert(cand);
                if (cand.0, cand.1, cand.2) < (e.0, e.1, e.2) {
                    *e = cand;
                }
            }
        }
        for (_, (_, i, j)) in best {
            let w = euclidean(features.row(i), features.row(j));
            self.insert_edge(i, j, w);
        }
    }

    /// Subgraph induced by `nodes` (given in ascending order), renumbered 0..len.
    pub fn induced(&self, nodes: &[usize]) -> NeighborGraph {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in nodes.iter().enumerate() {
            map[old] = new;
        }
        let edges = nodes
            .iter()
            .map(|&old| {
                self.edges[old]
                    .iter()
                    .filter(|(v, _)| map[*v] != usize::MAX)
                    .map(|&(v, w)| (map[v], w))
                    .collect()
            })
            .collect();
        NeighborGraph {
            n: nodes.len(),
            k: self.k,
            edges,
        }
    }

    /// Members of the largest component (lowest component id on ties), ascending.
    pub fn largest_component(&self) -> Vec<usize> {
        let comp = self.components();
        let count = comp.iter().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; count];
        for &c in &comp {
            sizes[c] += 1;
        }
        let best = (0..count).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)));
        match best {
            Some(c) => (0..self.n).filter(|&i| comp[i] == c).collect(),
            None => Vec::new(),
        }
    }
}
