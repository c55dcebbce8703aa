use rayon::prelude::*;

use super::{Embedding, FeatureMatrix};
use crate::error::{Error, Result};
use crate::matrix::{squared_euclidean, RowMatrix};

/// Place query points in an existing landmark embedding by inverse-distance
/// weighting of their `k` nearest landmarks in feature space. A query that
/// coincides with a landmark takes that landmark's coordinates exactly.
pub fn out_of_sample_extend(
    landmark_features: &FeatureMatrix,
    landmark_embedding: &Embedding,
    query_features: &FeatureMatrix,
    k: usize,
) -> Result<Embedding> {
    let m = landmark_features.len();
    if m == 0 || landmark_embedding.is_empty() {
        return Err(Error::EmptyLandmarks);
    }
    if landmark_embedding.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} landmark rows but {} embedding rows",
            m,
            landmark_embedding.len()
        )));
    }
    if query_features.dim() != landmark_features.dim() {
        return Err(Error::DimensionMismatch(format!(
            "query features have {} channels, landmarks have {}",
            query_features.dim(),
            landmark_features.dim()
        )));
    }
    if k == 0 || k > m {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be in [1, {m}] landmarks"
        )));
    }
    let d = landmark_embedding.dim();

    let rows: Vec<Vec<f64>> = (0..query_features.len())
        .into_par_iter()
        .map(|q| {
            let xq = query_features.row(q);
            let mut cand: Vec<(f64, usize)> = (0..m)
                .map(|j| (squared_euclidean(xq, landmark_features.row(j)), j))
                .collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < m {
                cand.select_nth_unstable_by(k - 1, cmp);
                cand.truncate(k);
            }
            cand.sort_by(cmp);
            if cand[0].0 == 0.0 {
                return landmark_embedding.row(cand[0].1).to_vec();
            }
            let weights: Vec<f64> = cand.iter().map(|(d2, _)| 1.0 / d2.sqrt()).collect();
            let total: f64 = weights.iter().sum();
            let mut out = vec![0.0; d];
            for ((_, j), w) in cand.iter().zip(&weights) {
                for (o, y) in out.iter_mut().zip(landmark_embedding.row(*j)) {
                    *o += w / total * y;
                }
            }
            out
        })
        .collect();

    let mut coords = RowMatrix::zeros(rows.len(), d);
    for (i, r) in rows.iter().enumerate() {
        coords.row_mut(i).copy_from_slice(r);
    }
    Ok(Embedding {
        coords,
        method: landmark_embedding.method,
        params: landmark_embedding.params,
        eigen_spectrum: landmark_embedding.eigen_spectrum.clone(),
    })
}
