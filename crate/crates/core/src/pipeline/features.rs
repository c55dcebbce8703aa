use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::StudyInput;
use crate::error::{Error, Result};
use crate::manifold::FeatureMatrix;
use crate::matrix::RowMatrix;
use crate::volume::{Mask, ParametricVolume};

/// One row per masked voxel (raster order), one column per study channel.
pub fn stack_features(study: &StudyInput) -> Result<FeatureMatrix> {
    stack_volumes(&study.volumes, &study.effective_mask())
}

/// As [`stack_features`] for any set of volumes on one grid.
pub fn stack_volumes(volumes: &[ParametricVolume], mask: &Mask) -> Result<FeatureMatrix> {
    let first = volumes
        .first()
        .ok_or_else(|| Error::InvalidParameter("no channels to stack".into()))?;
    let (w, h) = (first.width, first.height);
    if let Some(v) = volumes.iter().find(|v| !v.same_grid(first)) {
        return Err(Error::DimensionMismatch(format!(
            "channel `{}` is not on the grid of `{}`",
            v.name, first.name
        )));
    }
    mask.check_dims(w, h)?;
    let n = mask.count();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let d = volumes.len();
    let mut data = Vec::with_capacity(n * d);
    let mut voxel_index = Vec::with_capacity(n);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !mask.values[i] {
                continue;
            }
            voxel_index.push((x, y));
            data.extend(volumes.iter().map(|v| v.values[i]));
        }
    }
    let names = volumes.iter().map(|v| v.name.clone()).collect();
    FeatureMatrix::new(RowMatrix::from_vec(n, d, data)?, voxel_index, names)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Normalization {
    ZScore,
    MinMax,
    None,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::ZScore => "zscore",
            Normalization::MinMax => "minmax",
            Normalization::None => "none",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zscore" => Ok(Normalization::ZScore),
            "minmax" => Ok(Normalization::MinMax),
            "none" => Ok(Normalization::None),
            other => Err(Error::InvalidParameter(format!(
                "normalization must be zscore, minmax or none, got `{other}`"
            ))),
        }
    }
}

/// Per-channel affine map applied by normalization: `(x - offset) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScaling {
    pub name: String,
    pub offset: f64,
    pub scale: f64,
}

pub const SD_FLOOR: f64 = 1e-12;

pub fn normalize_features(
    features: &FeatureMatrix,
    mode: Normalization,
) -> Result<(FeatureMatrix, Vec<ChannelScaling>)> {
    let (n, d) = (features.len(), features.dim());
    if mode == Normalization::None {
        let stats = features
            .channel_names
            .iter()
            .map(|name| ChannelScaling {
                name: name.clone(),
                offset: 0.0,
                scale: 1.0,
            })
            .collect();
        return Ok((features.clone(), stats));
    }
    if mode == Normalization::ZScore && n < 2 {
        return Err(Error::InvalidParameter(
            "z-score normalization needs at least two rows".into(),
        ));
    }
    let mut stats = Vec::with_capacity(d);
    for j in 0..d {
        let col = features.data.column(j);
        let (offset, scale) = match mode {
            Normalization::ZScore => {
                let mean = col.iter().sum::<f64>() / n as f64;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                (mean, var.sqrt())
            }
            Normalization::MinMax => {
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi - lo)
            }
            Normalization::None => unreachable!(),
        };
        stats.push(ChannelScaling {
            name: features.channel_names[j].clone(),
            offset,
            scale,
        });
    }
    let mut data = features.data.clone();
    for i in 0..n {
        for (v, s) in data.row_mut(i).iter_mut().zip(&stats) {
            // a constant channel maps to all zeros
            *v = if s.scale > SD_FLOOR {
                (*v - s.offset) / s.scale
            } else {
                0.0
            };
        }
    }
    let out = FeatureMatrix::new(
        data,
        features.voxel_index.clone(),
        features.channel_names.clone(),
    )?;
    Ok((out, stats))
}

pub const DEFAULT_LANDMARKS: usize = 2000;

/// Uniform sample of `m` rows without replacement, returned in ascending row
/// order. `m >= n` returns every row.
pub fn subsample_landmarks(
    features: &FeatureMatrix,
    m: usize,
    seed: u64,
) -> Result<(FeatureMatrix, Vec<usize>)> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "landmark count must be at least 2, got {m}"
        )));
    }
    let n = features.len();
    if m >= n {
        return Ok((features.clone(), (0..n).collect()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, m).into_vec();
    idx.sort_unstable();
    Ok((features.select_rows(&idx), idx))
}
