use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{
    build_knn_graph, check_target_dim, Embedding, EmbeddingParams, FeatureMatrix, Method,
    NeighborGraph,
};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Order};
use crate::matrix::RowMatrix;

/// Tikhonov factor applied to each local Gram matrix, relative to its trace.
pub const LLE_REGULARIZATION: f64 = 1e-3;

/// Sparse reconstruction weights: row `i` lists `(neighbor, weight)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct LleWeights {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl LleWeights {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|(_, w)| w).sum()
    }

    /// ‖xᵢ − Σⱼ Wᵢⱼ xⱼ‖ for every row.
    pub fn residuals(&self, features: &FeatureMatrix) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let mut r = features.row(i).to_vec();
                for &(j, w) in &self.rows[i] {
                    for (acc, x) in r.iter_mut().zip(features.row(j)) {
                        *acc -= w * x;
                    }
                }
                r.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect()
    }
}

fn local_weights(
    features: &FeatureMatrix,
    i: usize,
    nbrs: &[(usize, f64)],
    regularization: f64,
) -> Result<Vec<(usize, f64)>> {
    let k = nbrs.len();
    if k == 0 {
        return Err(Error::InvalidParameter(format!(
            "node {i} has no neighbors"
        )));
    }
    let xi = features.row(i);
    let diffs: Vec<Vec<f64>> = nbrs
        .iter()
        .map(|&(j, _)| features.row(j).iter().zip(xi).map(|(a, b)| a - b).collect())
        .collect();
    let mut gram = DMatrix::from_fn(k, k, |a, b| {
        diffs[a]
            .iter()
            .zip(&diffs[b])
            .map(|(x, y)| x * y)
            .sum::<f64>()
    });
    let trace = gram.trace();
    let reg = if trace > 0.0 {
        regularization * trace
    } else {
        regularization
    };
    for a in 0..k {
        gram[(a, a)] += reg;
    }
    let ones = DVector::from_element(k, 1.0);
    let w = gram
        .clone()
        .cholesky()
        .map(|c| c.solve(&ones))
        .or_else(|| gram.lu().solve(&ones))
        .ok_or_else(|| {
            Error::InvalidParameter(format!("singular local Gram matrix at node {i}"))
        })?;
    let total: f64 = w.iter().sum();
    Ok(nbrs
        .iter()
        .zip(w.iter())
        .map(|(&(j, _), &wj)| (j, wj / total))
        .collect())
}

/// Reconstruction weights of each row from its graph neighbors, constrained to
/// sum to one, with the default regularization.
pub fn lle_weights(features: &FeatureMatrix, graph: &NeighborGraph) -> Result<LleWeights> {
    lle_weights_regularized(features, graph, LLE_REGULARIZATION)
}

/// As [`lle_weights`] with `regularization · trace(G)` added to each local
/// Gram matrix `G`. The reconstruction residual on exactly locally-linear
/// data grows linearly with the factor.
pub fn lle_weights_regularized(
    features: &FeatureMatrix,
    graph: &NeighborGraph,
    regularization: f64,
) -> Result<LleWeights> {
    if !(regularization > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "regularization must be positive, got {regularization}"
        )));
    }
    if graph.n != features.len() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes, features have {} rows",
            graph.n,
            features.len()
        )));
    }
    let rows = (0..graph.n)
        .into_par_iter()
        .map(|i| local_weights(features, i, &graph.edges[i], regularization))
        .collect::<Result<Vec<_>>>()?;
    Ok(LleWeights { rows })
}

/// Dense `M = (I − W)ᵀ(I − W)`.
pub fn lle_cost_matrix(weights: &LleWeights) -> DMatrix<f64> {
    let n = weights.n();
    let mut m = DMatrix::<f64>::identity(n, n);
    for (i, row) in weights.rows.iter().enumerate() {
        for &(j, w) in row {
            m[(i, j)] -= w;
            m[(j, i)] -= w;
        }
        for &(a, wa) in row {
            for &(b, wb) in row {
                m[(a, b)] += wa * wb;
            }
        }
    }
    m
}

pub fn lle_embed(features: &FeatureMatrix, k: usize, d: usize) -> Result<Embedding> {
    let graph = build_knn_graph(features, k)?;
    lle_from_graph(features, &graph, d)
}

/// LLE using a prebuilt neighbor graph. Coordinates are the eigenvectors of
/// `M` for the 2nd..(d+1)th smallest eigenvalues, scaled by √n.
///
/// A disconnected graph is rejected: each component adds a null vector to
/// `M`, so the bottom eigenvectors would be arbitrary mixtures of them.
pub fn lle_from_graph(
    features: &FeatureMatrix,
    graph: &NeighborGraph,
    d: usize,
) -> Result<Embedding> {
    let n = features.len();
    check_target_dim(d, n, n.saturating_sub(1))?;
    let sizes = graph.component_sizes();
    if sizes.len() > 1 {
        return Err(Error::DisconnectedGraph { sizes });
    }
    let weights = lle_weights(features, graph)?;
    let m = lle_cost_matrix(&weights);
    let eig = symmetric_eigen(&m, Order::Ascending);

    let scale = (n as f64).sqrt();
    let mut coords = RowMatrix::zeros(n, d);
    for c in 0..d {
        for i in 0..n {
            coords.set(i, c, eig.vectors[(i, c + 1)] * scale);
        }
    }
    Ok(Embedding {
        coords,
        method: Method::Lle,
        params: EmbeddingParams {
            neighbors: Some(graph.k),
            sigma: None,
            dim: d,
            diffusion_time: None,
            seed: None,
        },
        eigen_spectrum: eig.values[1..=d].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn features(rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::from_points(RowMatrix::from_rows(rows).unwrap()).unwrap()
    }

    fn random_features(n: usize, dim: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        features(
            &(0..n)
                .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn midpoint_of_two_neighbors() {
        let f = features(&[vec![0.0], vec![-1.0], vec![1.0]]);
        let graph = NeighborGraph {
            n: 3,
            k: 2,
            edges: vec![vec![(1, 1.0), (2, 1.0)], vec![(0, 1.0)], vec![(0, 1.0)]],
        };
        let w = lle_weights(&f, &graph).unwrap();
        assert!((w.rows[0][0].1 - 0.5).abs() < 1e-6);
        assert!((w.rows[0][1].1 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn rows_sum_to_one_and_translation_invariant() {
        let f = random_features(80, 4, 2);
        let g = build_knn_graph(&f, 7).unwrap();
        let w = lle_weights(&f, &g).unwrap();
        for i in 0..w.n() {
            assert!((w.row_sum(i) - 1.0).abs() < 1e-10);
        }
        let shifted: Vec<Vec<f64>> = (0..f.len())
            .map(|i| f.row(i).iter().map(|v| v + 17.5).collect())
            .collect();
        let fs = features(&shifted);
        let ws = lle_weights(&fs, &g).unwrap();
        for (a, b) in w.rows.iter().zip(&ws.rows) {
            for ((ja, wa), (jb, wb)) in a.iter().zip(b) {
                assert_eq!(ja, jb);
                assert!((wa - wb).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn affine_subspace_reconstructed() {
        // points on a 2-D affine plane inside R^5
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let origin = [1.0, -2.0, 0.5, 3.0, 0.0];
        let u = [0.3, 0.1, -0.5, 0.2, 0.7];
        let v = [-0.4, 0.6, 0.2, 0.1, 0.3];
        let rows: Vec<Vec<f64>> = (0..150)
            .map(|_| {
                let (a, b): (f64, f64) = (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
                (0..5).map(|c| origin[c] + a * u[c] + b * v[c]).collect()
            })
            .collect();
        let f = features(&rows);
        let g = build_knn_graph(&f, 5).unwrap();
        // with the default 1e-3 factor hull points extrapolate poorly
        // (residual ~0.1), so exactness is checked in the small-factor limit
        let w = lle_weights_regularized(&f, &g, 1e-10).unwrap();
        for r in w.residuals(&f) {
            assert!(r < 1e-6, "residual {r}");
        }
    }

    #[test]
    fn cost_matrix_null_vector_is_constant() {
        let f = random_features(60, 3, 4);
        let g = build_knn_graph(&f, 6).unwrap();
        let m = lle_cost_matrix(&lle_weights(&f, &g).unwrap());
        let eig = symmetric_eigen(&m, Order::Ascending);
        assert!(eig.values[0].abs() < 1e-8);
        let v = eig.vector(0);
        let c = 1.0 / (60f64).sqrt();
        for x in v {
            assert!((x - c).abs() < 1e-6);
        }
    }

    #[test]
    fn collinear_order_preserved() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let f = features(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>());
        let e = lle_embed(&f, 2, 1).unwrap();
        let c = e.coords.column(0);
        let increasing = c.windows(2).all(|w| w[1] > w[0]);
        let decreasing = c.windows(2).all(|w| w[1] < w[0]);
        assert!(increasing || decreasing, "{c:?}");
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let f = features(&[
            vec![0.0],
            vec![1.0],
            vec![2.0],
            vec![50.0],
            vec![51.0],
            vec![52.0],
        ]);
        assert!(matches!(
            lle_embed(&f, 2, 1),
            Err(Error::DisconnectedGraph { .. })
        ));
    }

    #[test]
    fn rigid_motion_invariance() {
        let f = random_features(70, 2, 12);
        let (s, co) = (0.6f64.sin(), 0.6f64.cos());
        let moved: Vec<Vec<f64>> = (0..f.len())
            .map(|i| {
                let p = f.row(i);
                vec![co * p[0] - s * p[1] + 4.0, s * p[0] + co * p[1] - 1.5]
            })
            .collect();
        let a = lle_embed(&f, 8, 2).unwrap();
        let b = lle_embed(&features(&moved), 8, 2).unwrap();
        for c in 0..2 {
            let (ca, cb) = (a.coords.column(c), b.coords.column(c));
            let sign = if ca.iter().zip(&cb).map(|(x, y)| x * y).sum::<f64>() < 0.0 {
                -1.0
            } else {
                1.0
            };
            for (x, y) in ca.iter().zip(&cb) {
                assert!((x - sign * y).abs() < 1e-8, "{x} vs {y}");
            }
        }
    }
}
