//! Evidence-accumulation consensus clustering.
//!
//! A K-means ensemble (every k in `k1..=k2`, `H` restarts each) votes into a
//! co-association matrix; pairs whose co-clustering frequency exceeds the
//! threshold are merged transitively into the final partition.

mod kmeans;

pub use kmeans::{kmeans_run, KMeansRun, MAX_LLOYD_ITERATIONS};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::RowMatrix;

/// Fraction of ensemble runs in which each pair of points shared a cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct CoassociationMatrix {
    n: usize,
    run_count: usize,
    counts: Vec<u32>,
}

impl CoassociationMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn run_count(&self) -> usize {
        self.run_count
    }

    /// Raw number of runs in which `i` and `j` shared a cluster.
    pub fn count(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.n + j]
    }

    /// Normalized similarity in [0, 1].
    pub fn get(&self, i: usize, j: usize) -> f64 {
        f64::from(self.count(i, j)) / self.run_count as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusResult {
    /// Contiguous ids, numbered by first appearance.
    pub labels: Vec<usize>,
    pub cluster_count: usize,
    pub threshold: f64,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusParams {
    pub k1: usize,
    pub k2: usize,
    pub repetitions: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for ConsensusParams {
    fn default() -> Self {
        Self {
            k1: 3,
            k2: 13,
            repetitions: 10,
            threshold: 0.75,
            seed: 1,
        }
    }
}

pub fn accumulate_coassociation(runs: &[KMeansRun]) -> Result<CoassociationMatrix> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InvalidParameter("co-association needs at least one run".into()))?;
    let n = first.labels.len();
    if let Some(bad) = runs.iter().find(|r| r.labels.len() != n) {
        return Err(Error::MismatchedRunSizes {
            expected: n,
            found: bad.labels.len(),
        });
    }
    let r = runs.len();
    // point-major copy so each row scan touches contiguous memory
    let mut by_point = vec![0usize; n * r];
    for (ri, run) in runs.iter().enumerate() {
        for (i, &l) in run.labels.iter().enumerate() {
            by_point[i * r + ri] = l;
        }
    }
    let counts: Vec<u32> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let li = &by_point[i * r..(i + 1) * r];
            let by_point = &by_point;
            (0..n).map(move |j| {
                let lj = &by_point[j * r..(j + 1) * r];
                li.iter().zip(lj).filter(|(a, b)| a == b).count() as u32
            })
        })
        .collect();
    Ok(CoassociationMatrix {
        n,
        run_count: r,
        counts,
    })
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Connected components of the graph `{(i, j) : sim(i, j) > t}`.
pub fn consensus_merge(sim: &CoassociationMatrix, t: f64) -> ConsensusResult {
    let n = sim.n();
    let mut ds = DisjointSet::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if sim.get(i, j) > t {
                ds.union(i, j);
            }
        }
    }
    let mut relabel = vec![usize::MAX; n];
    let mut labels = Vec::with_capacity(n);
    let mut sizes: Vec<usize> = Vec::new();
    for i in 0..n {
        let root = ds.find(i);
        if relabel[root] == usize::MAX {
            relabel[root] = sizes.len();
            sizes.push(0);
        }
        labels.push(relabel[root]);
        sizes[relabel[root]] += 1;
    }
    ConsensusResult {
        labels,
        cluster_count: sizes.len(),
        threshold: t,
        sizes,
    }
}

/// Seed for repetition `rep` at cluster count `k`, independent of execution order.
pub fn sub_seed(master: u64, k: usize, rep: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ k as u64) ^ rep as u64)
}

/// The full K-means ensemble, ordered by (k, repetition). Cluster counts
/// above the number of points are clamped to it.
pub fn ensemble_runs(points: &RowMatrix, params: &ConsensusParams) -> Result<Vec<KMeansRun>> {
    let n = points.rows();
    if n == 0 {
        return Err(Error::InvalidParameter("no points to cluster".into()));
    }
    if params.k1 == 0 || params.k1 > params.k2 {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k1 <= k2, got k1 = {}, k2 = {}",
            params.k1, params.k2
        )));
    }
    if params.repetitions == 0 {
        return Err(Error::InvalidParameter("H must be at least 1".into()));
    }
    let (k1, k2) = (params.k1.min(n), params.k2.min(n));
    let jobs: Vec<(usize, usize)> = (k1..=k2)
        .flat_map(|k| (0..params.repetitions).map(move |rep| (k, rep)))
        .collect();
    jobs.into_par_iter()
        .map(|(k, rep)| kmeans_run(points, k, sub_seed(params.seed, k, rep)))
        .collect()
}

pub fn consensus_cluster(points: &RowMatrix, params: &ConsensusParams) -> Result<ConsensusResult> {
    if !(params.threshold > 0.0 && params.threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in (0, 1), got {}",
            params.threshold
        )));
    }
    let runs = ensemble_runs(points, params)?;
    let sim = accumulate_coassociation(&runs)?;
    Ok(consensus_merge(&sim, params.threshold))
}
