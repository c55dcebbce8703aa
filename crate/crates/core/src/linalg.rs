//! Dense symmetric eigendecomposition with a reproducible ordering and sign convention.

use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Ascending,
    Descending,
}

/// Eigenpairs of a symmetric matrix. `vectors` columns are unit-norm and
/// aligned with `values`.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPairs {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j).iter().copied().collect()
    }
}

/// Decompose a symmetric matrix. The input is symmetrized as (A + Aᵀ)/2 first
/// so round-off asymmetry cannot leak into the result.
pub fn symmetric_eigen(matrix: &DMatrix<f64>, order: Order) -> EigenPairs {
    assert!(
        matrix.is_square(),
        "eigendecomposition needs a square matrix"
    );
    let n = matrix.nrows();
    let sym = (matrix + matrix.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let (va, vb) = (eig.eigenvalues[a], eig.eigenvalues[b]);
        match order {
            Order::Ascending => va.total_cmp(&vb),
            Order::Descending => vb.total_cmp(&va),
        }
        .then(a.cmp(&b))
    });

    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in idx.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let mut col: Vec<f64> = eig.eigenvectors.column(src).iter().copied().collect();
        orient(&mut col);
        for (i, v) in col.into_iter().enumerate() {
            vectors[(i, dst)] = v;
        }
    }
    EigenPairs { values, vectors }
}

/// Flip a vector so its largest-magnitude entry is positive. The first entry
/// wins among equal magnitudes.
pub fn orient(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = f64::NEG_INFINITY;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Cyclic Jacobi rotations, kept independent of nalgebra's tridiagonal QR.
    fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
        let n = a.nrows();
        let mut m = a.clone();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)] * m[(i, j)])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if m[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                }
            }
        }
        let mut vals: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.random_range(-5.0..5.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn matches_jacobi_oracle_up_to_6x6() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=6 {
            for _ in 0..20 {
                let m = random_symmetric(n, &mut rng);
                let ours = symmetric_eigen(&m, Order::Ascending);
                let oracle = jacobi_eigenvalues(&m);
                for (a, b) in ours.values.iter().zip(&oracle) {
                    assert!((a - b).abs() < 1e-8, "n={n}: {a} vs {b}");
                }
                // A v = λ v for every pair
                for j in 0..n {
                    let v = ours.vectors.column(j);
                    let r = &m * v - v * ours.values[j];
                    assert!(r.norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = symmetric_eigen(&m, Order::Descending);
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let v1 = e.vector(1);
        // largest-magnitude entry tie goes to the first entry
        assert!(v1[0] > 0.0 && v1[1] < 0.0);
    }

    #[test]
    fn orientation_makes_dominant_entry_positive() {
        let mut v = vec![0.1, -0.9, 0.3];
        orient(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
    }
}
