//! Nonlinear dimensionality reduction of per-voxel feature vectors:
//! Isomap, locally linear embedding and diffusion maps, plus the shared
//! neighbor-graph and spectral machinery they are built from.

mod diffusion;
mod extend;
mod geodesic;
mod isomap;
mod knn;
mod lle;
mod mds;

pub use diffusion::{diffusion_map_embed, transition_matrix};
pub use extend::out_of_sample_extend;
pub use geodesic::{geodesic_distance_matrix, DistanceMatrix};
pub use isomap::{isomap_embed, isomap_from_graph};
pub use knn::{build_knn_graph, NeighborGraph};
pub use lle::{
    lle_cost_matrix, lle_embed, lle_from_graph, lle_weights, lle_weights_regularized, LleWeights,
    LLE_REGULARIZATION,
};
pub use mds::classical_mds;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::RowMatrix;

/// n×D per-voxel feature vectors with the voxel each row came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: RowMatrix,
    pub voxel_index: Vec<(usize, usize)>,
    pub channel_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        data: RowMatrix,
        voxel_index: Vec<(usize, usize)>,
        channel_names: Vec<String>,
    ) -> Result<Self> {
        if data.rows() == 0 || data.cols() == 0 {
            return Err(Error::InvalidParameter(
                "feature matrix needs at least one row and one column".into(),
            ));
        }
        if voxel_index.len() != data.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} voxel indices for {} rows",
                voxel_index.len(),
                data.rows()
            )));
        }
        if channel_names.len() != data.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} channel names for {} columns",
                channel_names.len(),
                data.cols()
            )));
        }
        if data.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "feature matrix has NaN/Inf entries".into(),
            ));
        }
        Ok(Self {
            data,
            voxel_index,
            channel_names,
        })
    }

    /// Features without voxel provenance: rows are indexed `(i, 0)` and
    /// channels named `c0, c1, ...`.
    pub fn from_points(data: RowMatrix) -> Result<Self> {
        let voxel_index = (0..data.rows()).map(|i| (i, 0)).collect();
        let channel_names = (0..data.cols()).map(|j| format!("c{j}")).collect();
        Self::new(data, voxel_index, channel_names)
    }

    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.data.row(i)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            data: self.data.select_rows(indices),
            voxel_index: indices.iter().map(|&i| self.voxel_index[i]).collect(),
            channel_names: self.channel_names.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Isomap,
    Lle,
    DiffusionMap,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Isomap => "isomap",
            Method::Lle => "lle",
            Method::DiffusionMap => "dfm",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "isomap" => Ok(Method::Isomap),
            "lle" => Ok(Method::Lle),
            "dfm" | "diffusion" | "diffusionmap" | "diffusion_map" => Ok(Method::DiffusionMap),
            other => Err(Error::InvalidParameter(format!(
                "unknown embedding method `{other}`"
            ))),
        }
    }
}

/// Parameters an embedding was produced with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingParams {
    pub neighbors: Option<usize>,
    pub sigma: Option<f64>,
    pub dim: usize,
    pub diffusion_time: Option<u32>,
    pub seed: Option<u64>,
}

/// n×d low-dimensional coordinates, row-aligned with the source features.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: RowMatrix,
    pub method: Method,
    pub params: EmbeddingParams,
    /// Eigenvalues of the retained coordinates, in coordinate order.
    pub eigen_spectrum: Vec<f64>,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.coords.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.coords.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.coords.row(i)
    }
}

pub(crate) fn check_target_dim(d: usize, n: usize, max: usize) -> Result<()> {
    if d == 0 || d > max {
        return Err(Error::InvalidParameter(format!(
            "target dimension {d} must be in [1, {max}] for {n} points"
        )));
    }
    Ok(())
}
