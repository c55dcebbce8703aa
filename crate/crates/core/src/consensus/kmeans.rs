use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{squared_euclidean, RowMatrix};

pub const MAX_LLOYD_ITERATIONS: usize = 300;

/// One K-means clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun {
    pub k: usize,
    pub seed: u64,
    pub labels: Vec<usize>,
    /// Sum of squared distances to the assigned centers.
    pub inertia: f64,
    /// Inertia after every assignment step, initial assignment first.
    pub inertia_trace: Vec<f64>,
}

fn assign(points: &RowMatrix, centers: &RowMatrix) -> (Vec<usize>, f64) {
    let mut labels = Vec::with_capacity(points.rows());
    let mut inertia = 0.0;
    for p in points.iter_rows() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, center) in centers.iter_rows().enumerate() {
            let d = squared_euclidean(p, center);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels.push(best);
        inertia += best_d;
    }
    (labels, inertia)
}

/// Recompute centers as cluster means. Empty clusters take the point that is
/// farthest from its own center, which moves to the empty cluster.
fn update(points: &RowMatrix, labels: &mut [usize], centers: &mut RowMatrix) {
    let (k, dim) = (centers.rows(), centers.cols());
    let mut sums = RowMatrix::zeros(k, dim);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, x) in sums.row_mut(l).iter_mut().zip(points.row(i)) {
            *s += x;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            for (dst, s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                *dst = s * inv;
            }
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &l) in labels.iter().enumerate() {
            if counts[l] < 2 {
                continue;
            }
            let d = squared_euclidean(points.row(i), centers.row(l));
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(i) = far else { break };
        counts[labels[i]] -= 1;
        labels[i] = c;
        counts[c] = 1;
        centers.row_mut(c).copy_from_slice(points.row(i));
    }
}

/// Lloyd's algorithm from a Forgy initialization (k distinct rows drawn
/// uniformly). Runs until the assignment stops changing or
/// [`MAX_LLOYD_ITERATIONS`] is reached; deterministic given `seed`.
pub fn kmeans_run(points: &RowMatrix, k: usize, seed: u64) -> Result<KMeansRun> {
    let n = points.rows();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = rand::seq::index::sample(&mut rng, n, k).into_vec();
    let mut centers = points.select_rows(&init);

    let (mut labels, mut inertia) = assign(points, &centers);
    let mut trace = vec![inertia];
    for _ in 0..MAX_LLOYD_ITERATIONS {
        update(points, &mut labels, &mut centers);
        let (next, next_inertia) = assign(points, &centers);
        debug_assert!(
            next_inertia <= inertia * (1.0 + 1e-12) + 1e-12,
            "inertia increased: {inertia} -> {next_inertia}"
        );
        trace.push(next_inertia);
        inertia = next_inertia;
        let done = next == labels;
        labels = next;
        if done {
            break;
        }
    }
    Ok(KMeansRun {
        k,
        seed,
        labels,
        inertia,
        inertia_trace: trace,
    })
}
