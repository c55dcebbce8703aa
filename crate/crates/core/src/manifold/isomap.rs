use super::{
    build_knn_graph, classical_mds, geodesic_distance_matrix, Embedding, EmbeddingParams,
    FeatureMatrix, Method, NeighborGraph,
};
use crate::error::Result;

/// Isomap: kNN graph, geodesic distances, then classical MDS.
pub fn isomap_embed(features: &FeatureMatrix, k: usize, d: usize) -> Result<Embedding> {
    let graph = build_knn_graph(features, k)?;
    isomap_from_graph(&graph, d)
}

/// Isomap on a prebuilt (possibly bridged) neighbor graph.
pub fn isomap_from_graph(graph: &NeighborGraph, d: usize) -> Result<Embedding> {
    let gd = geodesic_distance_matrix(graph)?;
    let (coords, eigen_spectrum) = classical_mds(&gd, d)?;
    Ok(Embedding {
        coords,
        method: Method::Isomap,
        params: EmbeddingParams {
            neighbors: Some(graph.k),
            sigma: None,
            dim: d,
            diffusion_time: None,
            seed: None,
        },
        eigen_spectrum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{euclidean, RowMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn features(rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::from_points(RowMatrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn flat_line_is_recovered() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let f = features(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>());
        let e = isomap_embed(&f, 2, 1).unwrap();
        let c = e.coords.column(0);
        let sign = (c[4] - c[0]).signum();
        let offset = c[0] * sign;
        for (x, y) in xs.iter().zip(&c) {
            assert!((y * sign - offset - x).abs() < 1e-9);
        }
    }

    #[test]
    fn equilateral_triangle() {
        let s = 3.0f64;
        let f = features(&[
            vec![0.0, 0.0, 1.0],
            vec![s, 0.0, 1.0],
            vec![s / 2.0, s * 3f64.sqrt() / 2.0, 1.0],
        ]);
        let e = isomap_embed(&f, 2, 2).unwrap();
        for i in 0..3 {
            for j in i + 1..3 {
                assert!((euclidean(e.row(i), e.row(j)) - s).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn swiss_roll_preserves_geodesics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..1000)
            .map(|_| {
                let t = 1.5 * std::f64::consts::PI * (1.0 + 2.0 * rng.random::<f64>());
                let h = 21.0 * rng.random::<f64>();
                vec![t * t.cos(), h, t * t.sin()]
            })
            .collect();
        let f = features(&rows);
        let graph = build_knn_graph(&f, 12).unwrap();
        let gd = geodesic_distance_matrix(&graph).unwrap();
        let e = isomap_from_graph(&graph, 2).unwrap();

        let (mut sx, mut sy, mut sxx, mut syy, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..1000 {
            for j in i + 1..1000 {
                let x = gd.get(i, j);
                let y = euclidean(e.row(i), e.row(j));
                sx += x;
                sy += y;
                sxx += x * x;
                syy += y * y;
                sxy += x * y;
                n += 1.0;
            }
        }
        let r = (sxy - sx * sy / n) / ((sxx - sx * sx / n).sqrt() * (syy - sy * sy / n).sqrt());
        assert!(r > 0.99, "correlation {r}");
        assert_eq!(e.eigen_spectrum.len(), 2);
        assert!(e.eigen_spectrum[0] >= e.eigen_spectrum[1]);
    }
}
