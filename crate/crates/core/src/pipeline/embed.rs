use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::subsample_landmarks;
use crate::error::{Error, Result};
use crate::manifold::{
    build_knn_graph, diffusion_map_embed, isomap_from_graph, lle_from_graph, out_of_sample_extend,
    Embedding, FeatureMatrix, Method, NeighborGraph,
};
use crate::matrix::{squared_euclidean, RowMatrix};

/// What to do when the landmark kNN graph falls apart into components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphPolicy {
    /// Join every pair of components by their shortest feature-space edge.
    Bridge,
    /// Embed only the largest component; other voxels become background.
    LargestComponent,
    /// Fail with `DisconnectedGraph`.
    Strict,
}

impl fmt::Display for GraphPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphPolicy::Bridge => "bridge",
            GraphPolicy::LargestComponent => "largest",
            GraphPolicy::Strict => "error",
        })
    }
}

impl FromStr for GraphPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bridge" => Ok(GraphPolicy::Bridge),
            "largest" | "largest-component" => Ok(GraphPolicy::LargestComponent),
            "error" | "strict" => Ok(GraphPolicy::Strict),
            other => Err(Error::InvalidParameter(format!(
                "disconnected-graph policy must be bridge, largest or error, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedConfig {
    pub method: Method,
    pub k: usize,
    pub sigma: f64,
    pub dim: usize,
    pub t: u32,
    pub landmarks: usize,
    /// Landmarks averaged when placing a non-landmark voxel.
    pub extension_k: usize,
    pub seed: u64,
    pub graph_policy: GraphPolicy,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            method: Method::Isomap,
            k: 40,
            sigma: 80.0,
            dim: 3,
            t: 1,
            landmarks: super::DEFAULT_LANDMARKS,
            extension_k: 8,
            seed: 1,
            graph_policy: GraphPolicy::Bridge,
        }
    }
}

/// An embedding of every feature row, plus which rows were landmarks and
/// which rows could be placed at all.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineEmbedding {
    /// One row per feature row; rows with `active[i] == false` are zero.
    pub embedding: Embedding,
    /// Feature rows embedded directly, ascending.
    pub landmark_indices: Vec<usize>,
    pub active: Vec<bool>,
}

impl PipelineEmbedding {
    /// Landmark rows that took part in the embedding.
    pub fn active_landmarks(&self) -> Vec<usize> {
        self.landmark_indices
            .iter()
            .copied()
            .filter(|&i| self.active[i])
            .collect()
    }
}

fn embed_landmarks(
    landmarks: &FeatureMatrix,
    config: &EmbedConfig,
) -> Result<(Embedding, Vec<usize>)> {
    let all: Vec<usize> = (0..landmarks.len()).collect();
    if config.method == Method::DiffusionMap {
        let e = diffusion_map_embed(landmarks, config.sigma, config.dim, config.t)?;
        return Ok((e, all));
    }
    let mut graph = build_knn_graph(landmarks, config.k)?;
    let (graph, kept): (NeighborGraph, Vec<usize>) = if graph.is_connected() {
        (graph, all)
    } else {
        match config.graph_policy {
            GraphPolicy::Strict => {
                return Err(Error::DisconnectedGraph {
                    sizes: graph.component_sizes(),
                })
            }
            GraphPolicy::Bridge => {
                graph.bridge_components(landmarks);
                (graph, all)
            }
            GraphPolicy::LargestComponent => {
                let nodes = graph.largest_component();
                (graph.induced(&nodes), nodes)
            }
        }
    };
    let sub;
    let feats = if kept.len() == landmarks.len() {
        landmarks
    } else {
        sub = landmarks.select_rows(&kept);
        &sub
    };
    let mut e = match config.method {
        Method::Isomap => isomap_from_graph(&graph, config.dim)?,
        Method::Lle => lle_from_graph(feats, &graph, config.dim)?,
        Method::DiffusionMap => unreachable!(),
    };
    e.params.neighbors = Some(config.k);
    Ok((e, kept))
}

/// Embed a landmark subsample with the chosen method, then place the
/// remaining rows by out-of-sample extension.
pub fn run_embedding(features: &FeatureMatrix, config: &EmbedConfig) -> Result<PipelineEmbedding> {
    let n = features.len();
    let (landmarks, landmark_indices) =
        subsample_landmarks(features, config.landmarks, config.seed)?;
    let (landmark_embedding, kept) = embed_landmarks(&landmarks, config)?;
    let mut params = landmark_embedding.params;
    params.seed = Some(config.seed);

    let d = landmark_embedding.dim();
    let mut coords = RowMatrix::zeros(n, d);
    let mut active = vec![false; n];
    let kept_rows: Vec<usize> = kept.iter().map(|&j| landmark_indices[j]).collect();
    for (e_row, &row) in kept_rows.iter().enumerate() {
        coords
            .row_mut(row)
            .copy_from_slice(landmark_embedding.row(e_row));
        active[row] = true;
    }

    let mut is_landmark = vec![false; n];
    for &i in &landmark_indices {
        is_landmark[i] = true;
    }
    let mut queries: Vec<usize> = (0..n).filter(|&i| !is_landmark[i]).collect();
    if config.graph_policy == GraphPolicy::LargestComponent && kept.len() < landmarks.len() {
        // a voxel whose nearest landmark was dropped belongs to a dropped component
        let nearest = nearest_rows(&landmarks, features, &queries);
        let mut in_kept = vec![false; landmarks.len()];
        for &j in &kept {
            in_kept[j] = true;
        }
        queries = queries
            .into_iter()
            .zip(nearest)
            .filter(|&(_, j)| in_kept[j])
            .map(|(q, _)| q)
            .collect();
    }
    if !queries.is_empty() {
        let kept_features = features.select_rows(&kept_rows);
        let query_features = features.select_rows(&queries);
        let k = config.extension_k.clamp(1, kept_rows.len());
        let placed = out_of_sample_extend(&kept_features, &landmark_embedding, &query_features, k)?;
        for (e_row, &row) in queries.iter().enumerate() {
            coords.row_mut(row).copy_from_slice(placed.row(e_row));
            active[row] = true;
        }
    }

    Ok(PipelineEmbedding {
        embedding: Embedding {
            coords,
            method: landmark_embedding.method,
            params,
            eigen_spectrum: landmark_embedding.eigen_spectrum,
        },
        landmark_indices,
        active,
    })
}

/// For each query row of `features`, the index of the nearest row of
/// `reference` (ties to the lower index).
pub fn nearest_rows(
    reference: &FeatureMatrix,
    features: &FeatureMatrix,
    queries: &[usize],
) -> Vec<usize> {
    queries
        .par_iter()
        .map(|&q| {
            let x = features.row(q);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for j in 0..reference.len() {
                let d = squared_euclidean(x, reference.row(j));
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::isomap_embed;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(seed: u64, per: usize, centers: &[[f64; 2]]) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for c in centers {
            for _ in 0..per {
                rows.push([
                    c[0] + rng.random::<f64>() * 0.5,
                    c[1] + rng.random::<f64>() * 0.5,
                ]);
            }
        }
        FeatureMatrix::from_points(RowMatrix::from_rows(&rows).unwrap()).unwrap()
    }

    #[test]
    fn no_subsampling_matches_direct_call() {
        let f = blobs(1, 40, &[[0.0, 0.0]]);
        let config = EmbedConfig {
            k: 8,
            dim: 2,
            ..EmbedConfig::default()
        };
        let out = run_embedding(&f, &config).unwrap();
        let direct = isomap_embed(&f, 8, 2).unwrap();
        assert_eq!(out.embedding.coords, direct.coords);
        assert!(out.active.iter().all(|&a| a));
    }

    #[test]
    fn policies_on_disconnected_graph() {
        let f = blobs(2, 30, &[[0.0, 0.0], [50.0, 0.0]]);
        let base = EmbedConfig {
            k: 5,
            dim: 2,
            ..EmbedConfig::default()
        };
        let strict = EmbedConfig {
            graph_policy: GraphPolicy::Strict,
            ..base
        };
        assert_eq!(
            run_embedding(&f, &strict).unwrap_err(),
            Error::DisconnectedGraph {
                sizes: vec![30, 30]
            }
        );
        let bridged = run_embedding(&f, &base).unwrap();
        assert!(bridged.active.iter().all(|&a| a));
        let largest = EmbedConfig {
            graph_policy: GraphPolicy::LargestComponent,
            landmarks: 40,
            ..base
        };
        let out = run_embedding(&f, &largest).unwrap();
        let active = out.active.iter().filter(|&&a| a).count();
        assert!(active == 30, "{active} active rows");
    }

    #[test]
    fn every_row_gets_coordinates() {
        let f = blobs(3, 100, &[[0.0, 0.0], [3.0, 3.0]]);
        for method in [Method::Isomap, Method::Lle, Method::DiffusionMap] {
            let config = EmbedConfig {
                method,
                k: 10,
                sigma: 2.0,
                landmarks: 60,
                ..EmbedConfig::default()
            };
            let out = run_embedding(&f, &config).unwrap();
            assert_eq!(out.embedding.len(), 200);
            assert_eq!(out.landmark_indices.len(), 60);
            assert!(out.active.iter().all(|&a| a));
            assert_eq!(out, run_embedding(&f, &config).unwrap());
        }
    }
}
