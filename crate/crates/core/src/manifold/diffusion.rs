use nalgebra::DMatrix;

use super::{check_target_dim, Embedding, EmbeddingParams, FeatureMatrix, Method};
use crate::error::{Error, Result};
use crate::linalg::{orient, symmetric_eigen, Order};
use crate::matrix::{squared_euclidean, RowMatrix};

fn kernel(features: &FeatureMatrix, sigma: f64) -> Result<DMatrix<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::SigmaNonPositive(sigma));
    }
    let n = features.len();
    let s2 = sigma * sigma;
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in i + 1..n {
            let v = (-squared_euclidean(features.row(i), features.row(j)) / s2).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Row-stochastic Markov matrix `P = D⁻¹K` of the Gaussian kernel
/// `K = exp(−‖xᵢ − xⱼ‖² / σ²)`.
pub fn transition_matrix(features: &FeatureMatrix, sigma: f64) -> Result<DMatrix<f64>> {
    let mut k = kernel(features, sigma)?;
    for i in 0..k.nrows() {
        let s: f64 = k.row(i).sum();
        k.row_mut(i).iter_mut().for_each(|v| *v /= s);
    }
    Ok(k)
}

/// Diffusion-map coordinates `λₘᵗ ψₘ`, m = 1..d, skipping the trivial pair.
///
/// The right eigenvectors of `P` are obtained from the symmetric conjugate
/// `A = D^{-1/2} K D^{-1/2}` (`ψ = D^{-1/2} φ`), then scaled to unit norm.
pub fn diffusion_map_embed(
    features: &FeatureMatrix,
    sigma: f64,
    d: usize,
    t: u32,
) -> Result<Embedding> {
    let n = features.len();
    if t == 0 {
        return Err(Error::InvalidParameter(
            "diffusion time must be >= 1".into(),
        ));
    }
    check_target_dim(d, n, n.saturating_sub(1))?;
    let k = kernel(features, sigma)?;
    let inv_sqrt_deg: Vec<f64> = (0..n).map(|i| 1.0 / k.row(i).sum().sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| k[(i, j)] * inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    let eig = symmetric_eigen(&a, Order::Descending);

    let mut coords = RowMatrix::zeros(n, d);
    let mut spectrum = Vec::with_capacity(d);
    for c in 0..d {
        let m = c + 1;
        let lambda = eig.values[m];
        let mut psi: Vec<f64> = (0..n)
            .map(|i| eig.vectors[(i, m)] * inv_sqrt_deg[i])
            .collect();
        let norm = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|v| *v /= norm);
        orient(&mut psi);
        let scale = lambda.powi(t as i32);
        for (i, v) in psi.into_iter().enumerate() {
            coords.set(i, c, scale * v);
        }
        spectrum.push(lambda);
    }
    Ok(Embedding {
        coords,
        method: Method::DiffusionMap,
        params: EmbeddingParams {
            neighbors: None,
            sigma: Some(sigma),
            dim: d,
            diffusion_time: Some(t),
            seed: None,
        },
        eigen_spectrum: spectrum,
    })
}
