use super::{check_target_dim, DistanceMatrix};
use crate::error::Result;
use crate::linalg::{symmetric_eigen, Order};
use crate::matrix::RowMatrix;

/// Classical (Torgerson) MDS.
///
/// Double-centers the squared distances, `B = -1/2 · J D² J`, and returns the
/// top-`d` eigenvectors of `B` scaled by the square roots of their eigenvalues.
/// Negative eigenvalues (non-Euclidean input) are clamped to zero for the
/// scaling; the returned spectrum keeps the raw values.
pub fn classical_mds(dist: &DistanceMatrix, d: usize) -> Result<(RowMatrix, Vec<f64>)> {
    let n = dist.n();
    check_target_dim(d, n, n)?;

    let mut sq = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = dist.get(i, j);
            sq[i * n + j] = v * v;
        }
    }
    let row_mean: Vec<f64> = (0..n)
        .map(|i| sq[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;

    // D² is symmetric, so column means equal row means
    let b = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[i * n + j] - row_mean[i] - row_mean[j] + grand)
    });
    let eig = symmetric_eigen(&b, Order::Descending);

    let mut coords = RowMatrix::zeros(n, d);
    for c in 0..d {
        let scale = eig.values[c].max(0.0).sqrt();
        for i in 0..n {
            coords.set(i, c, eig.vectors[(i, c)] * scale);
        }
    }
    Ok((coords, eig.values[..d].to_vec()))
}
