use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::NeighborGraph;
use crate::error::{Error, Result};
use crate::matrix::RowMatrix;

/// Symmetric n×n matrix of nonnegative distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(RowMatrix);

impl DistanceMatrix {
    /// Validates squareness, symmetry (1e-12 relative), nonnegativity and the zero diagonal.
    pub fn new(m: RowMatrix) -> Result<Self> {
        let n = m.rows();
        if m.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "distance matrix must be square, got {}x{}",
                n,
                m.cols()
            )));
        }
        for i in 0..n {
            if m.get(i, i) != 0.0 {
                return Err(Error::InvalidParameter(format!("nonzero diagonal at {i}")));
            }
            for j in i + 1..n {
                let (a, b) = (m.get(i, j), m.get(j, i));
                if !(a >= 0.0) || !(b >= 0.0) || (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "entries ({i},{j}) = {a} and ({j},{i}) = {b} are not a symmetric distance"
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    /// Exact Euclidean distance matrix of the given rows.
    pub fn euclidean(points: &RowMatrix) -> Self {
        let n = points.rows();
        let mut m = RowMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let d = crate::matrix::euclidean(points.row(i), points.row(j));
                m.set(i, j, d);
                m.set(j, i, d);
            }
        }
        Self(m)
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn as_matrix(&self) -> &RowMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> RowMatrix {
        self.0
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then node id
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(graph: &NeighborGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        node: source,
    });
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &graph.edges[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry { dist: nd, node: v });
            }
        }
    }
    dist
}

/// All-pairs shortest paths over the neighbor graph (one Dijkstra per source).
pub fn geodesic_distance_matrix(graph: &NeighborGraph) -> Result<DistanceMatrix> {
    let sizes = graph.component_sizes();
    if sizes.len() > 1 {
        return Err(Error::DisconnectedGraph { sizes });
    }
    let n = graph.n;
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(graph, s)).collect();
    let mut m = RowMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            // forward and reverse sums can differ in the last ulp
            let d = rows[i][j].min(rows[j][i]);
            m.set(i, j, d);
            m.set(j, i, d);
        }
    }
    Ok(DistanceMatrix(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{build_knn_graph, FeatureMatrix};
    use crate::matrix::euclidean;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn floyd_warshall(graph: &NeighborGraph) -> Vec<Vec<f64>> {
        let n = graph.n;
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for i in 0..n {
            d[i][i] = 0.0;
            for &(j, w) in &graph.edges[i] {
                d[i][j] = d[i][j].min(w);
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d
    }

    fn random_points(n: usize, dim: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(0.0..10.0)).collect())
            .collect();
        FeatureMatrix::from_points(RowMatrix::from_rows(&rows).unwrap()).unwrap()
    }

    #[test]
    fn collinear_chain() {
        let rows = [[0.0], [1.0], [3.0], [7.0]];
        let f = FeatureMatrix::from_points(RowMatrix::from_rows(&rows).unwrap()).unwrap();
        let gd = geodesic_distance_matrix(&build_knn_graph(&f, 1).unwrap()).unwrap();
        assert_eq!(gd.get(0, 3), 7.0);
        assert_eq!(gd.get(3, 0), 7.0);
    }

    #[test]
    fn disconnected_reports_components() {
        let rows = [[0.0], [1.0], [10.0], [11.0], [12.0]];
        let f = FeatureMatrix::from_points(RowMatrix::from_rows(&rows).unwrap()).unwrap();
        let err = geodesic_distance_matrix(&build_knn_graph(&f, 1).unwrap()).unwrap_err();
        assert_eq!(err, Error::DisconnectedGraph { sizes: vec![3, 2] });
    }

    #[test]
    fn matches_floyd_warshall_and_is_metric() {
        for seed in 0..5 {
            let f = random_points(120, 3, seed);
            let g = build_knn_graph(&f, 6).unwrap();
            if !g.is_connected() {
                continue;
            }
            let gd = geodesic_distance_matrix(&g).unwrap();
            let fw = floyd_warshall(&g);
            let n = g.n;
            for i in 0..n {
                assert_eq!(gd.get(i, i), 0.0);
                for j in 0..n {
                    assert!((gd.get(i, j) - fw[i][j]).abs() < 1e-9);
                    assert_eq!(gd.get(i, j), gd.get(j, i));
                    assert!(gd.get(i, j) >= euclidean(f.row(i), f.row(j)) - 1e-12);
                }
            }
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        assert!(gd.get(i, j) <= gd.get(i, k) + gd.get(k, j) + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn distance_matrix_validation() {
        let bad = RowMatrix::from_rows(&[[0.0, 1.0], [2.0, 0.0]]).unwrap();
        assert!(DistanceMatrix::new(bad).is_err());
        let diag = RowMatrix::from_rows(&[[1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(DistanceMatrix::new(diag).is_err());
        let ok = RowMatrix::from_rows(&[[0.0, 5.0], [5.0, 0.0]]).unwrap();
        assert_eq!(DistanceMatrix::new(ok).unwrap().get(0, 1), 5.0);
    }
}
