//! Study-level orchestration: feature stacking, normalization, landmark
//! embedding, consensus clustering, tissue classification and rendering.

mod classify;
mod embed;
mod features;
mod render;
mod study;

pub use classify::{
    classify_clusters, classify_tissue, tissue_report, ChannelStats, ClassStats, Classification,
    ClusterSummary, TissueReport, TissueRule,
};
pub use embed::{nearest_rows, run_embedding, EmbedConfig, GraphPolicy, PipelineEmbedding};
pub use features::{
    normalize_features, stack_features, stack_volumes, subsample_landmarks, ChannelScaling,
    Normalization, DEFAULT_LANDMARKS, SD_FLOOR,
};
pub use render::{
    class_color, export_scattergram, percentile, render_embedded_image, RgbImage, Scattergram,
    PALETTE, SCATTER_SIZE,
};
pub use study::{
    affected_area, lesion_area, LabelMap, PerfusionPolarity, StudyInput, TissueClass, ADC_CHANNEL,
    T2_CHANNEL,
};

use crate::consensus::{consensus_cluster, ConsensusParams, ConsensusResult};
use crate::error::Result;
use crate::manifold::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub normalization: Normalization,
    pub embed: EmbedConfig,
    pub consensus: ConsensusParams,
    pub rule: TissueRule,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            normalization: Normalization::ZScore,
            embed: EmbedConfig::default(),
            consensus: ConsensusParams::default(),
            rule: TissueRule::default(),
        }
    }
}

impl PipelineConfig {
    /// Use one master seed for landmark sampling and the K-means ensemble.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.embed.seed = seed;
        self.consensus.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// Normalized features, one row per masked voxel.
    pub features: FeatureMatrix,
    pub scaling: Vec<ChannelScaling>,
    pub embedding: PipelineEmbedding,
    /// Consensus over the active landmarks, in ascending row order.
    pub consensus: ConsensusResult,
    /// Consensus label per feature row; `None` for rows left out of the embedding.
    pub voxel_labels: Vec<Option<usize>>,
    pub classification: Classification,
    pub embedded_image: RgbImage,
    pub scattergram: Scattergram,
}

pub fn run_pipeline(study: &StudyInput, config: &PipelineConfig) -> Result<PipelineOutput> {
    let raw = stack_features(study)?;
    let (features, scaling) = normalize_features(&raw, config.normalization)?;
    let embedding = run_embedding(&features, &config.embed)?;

    let landmarks = embedding.active_landmarks();
    let points = embedding.embedding.coords.select_rows(&landmarks);
    let consensus = consensus_cluster(&points, &config.consensus)?;

    // non-landmark voxels inherit the label of their nearest landmark in feature space
    let n = features.len();
    let mut voxel_labels: Vec<Option<usize>> = vec![None; n];
    for (&row, &l) in landmarks.iter().zip(&consensus.labels) {
        voxel_labels[row] = Some(l);
    }
    let queries: Vec<usize> = (0..n)
        .filter(|&i| embedding.active[i] && voxel_labels[i].is_none())
        .collect();
    let landmark_features = features.select_rows(&landmarks);
    let nearest = nearest_rows(&landmark_features, &features, &queries);
    for (&q, &j) in queries.iter().zip(&nearest) {
        voxel_labels[q] = Some(consensus.labels[j]);
    }

    let labelled: Vec<usize> = (0..n).filter(|&i| voxel_labels[i].is_some()).collect();
    let labels: Vec<usize> = labelled.iter().map(|&i| voxel_labels[i].unwrap()).collect();
    let index: Vec<(usize, usize)> = labelled.iter().map(|&i| features.voxel_index[i]).collect();
    let classification = classify_tissue(&labels, &index, study, &config.rule)?;

    let embedded_image = render_embedded_image(
        &embedding.embedding,
        &features.voxel_index,
        (study.width(), study.height()),
        Some(&embedding.active),
    )?;
    let w = study.width();
    let row_labels: Vec<i64> = features
        .voxel_index
        .iter()
        .map(|&(x, y)| classification.labelmap.labels[y * w + x])
        .collect();
    let row_classes: Vec<TissueClass> = features
        .voxel_index
        .iter()
        .map(|&(x, y)| classification.labelmap.tissue[y * w + x])
        .collect();
    let scattergram = export_scattergram(&embedding.embedding, &row_labels, Some(&row_classes))?;

    Ok(PipelineOutput {
        features,
        scaling,
        embedding,
        consensus,
        voxel_labels,
        classification,
        embedded_image,
        scattergram,
    })
}
