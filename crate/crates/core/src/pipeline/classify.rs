use super::{LabelMap, PerfusionPolarity, StudyInput, TissueClass};
use crate::error::{Error, Result};

/// Deficit thresholds, as fractions of the reference (highest mean ADC)
/// cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TissueRule {
    pub adc_infarct: f64,
    pub perfusion_infarct: f64,
    pub adc_at_risk: f64,
    pub perfusion_at_risk: f64,
}

impl Default for TissueRule {
    fn default() -> Self {
        Self {
            adc_infarct: 0.60,
            perfusion_infarct: 0.25,
            adc_at_risk: 0.90,
            perfusion_at_risk: 0.85,
        }
    }
}

impl TissueRule {
    /// Class of one cluster given its ADC and perfusion fractions of the
    /// reference. For TTP the perfusion fraction is already inverted so that
    /// lower means worse.
    pub fn classify(&self, adc_fraction: f64, perfusion_fraction: f64) -> TissueClass {
        if adc_fraction < self.adc_infarct && perfusion_fraction < self.perfusion_infarct {
            TissueClass::Infarcted
        } else if adc_fraction < self.adc_at_risk || perfusion_fraction < self.perfusion_at_risk {
            TissueClass::AtRisk
        } else {
            TissueClass::Normal
        }
    }
}

/// Class per cluster from its `(mean ADC, mean perfusion)`.
pub fn classify_clusters(
    means: &[(f64, f64)],
    polarity: PerfusionPolarity,
    rule: &TissueRule,
) -> Result<Vec<TissueClass>> {
    if means.is_empty() {
        return Err(Error::NoClusters);
    }
    let mut reference = 0;
    for (c, m) in means.iter().enumerate() {
        if m.0 > means[reference].0 {
            reference = c;
        }
    }
    let (ref_adc, ref_perf) = means[reference];
    Ok(means
        .iter()
        .map(|&(adc, perf)| {
            let fa = adc / ref_adc;
            let fp = match polarity {
                PerfusionPolarity::Cbf => perf / ref_perf,
                // prolonged TTP is worse: invert so the same thresholds apply
                PerfusionPolarity::Ttp => ref_perf / perf,
            };
            rule.classify(fa, fp)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    pub label: usize,
    pub size: usize,
    pub mean_adc: f64,
    pub mean_perfusion: f64,
    pub class: TissueClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub class: TissueClass,
    pub count: usize,
    pub area_mm2: f64,
    pub channels: Vec<ChannelStats>,
}

/// Per-class voxel counts, areas and channel statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct TissueReport {
    pub classes: Vec<ClassStats>,
}

impl TissueReport {
    pub fn get(&self, class: TissueClass) -> Option<&ClassStats> {
        self.classes.iter().find(|c| c.class == class)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub labelmap: LabelMap,
    pub report: TissueReport,
    pub clusters: Vec<ClusterSummary>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

pub fn tissue_report(labelmap: &LabelMap, study: &StudyInput) -> TissueReport {
    let classes = TissueClass::FOREGROUND
        .into_iter()
        .map(|class| {
            let voxels: Vec<usize> = (0..labelmap.tissue.len())
                .filter(|&i| labelmap.tissue[i] == class)
                .collect();
            let channels = study
                .volumes
                .iter()
                .map(|v| {
                    let vals: Vec<f64> = voxels.iter().map(|&i| v.values[i]).collect();
                    let (mean, sd) = mean_sd(&vals);
                    ChannelStats {
                        name: v.name.clone(),
                        mean,
                        sd,
                    }
                })
                .collect();
            ClassStats {
                class,
                count: voxels.len(),
                area_mm2: voxels.len() as f64 * labelmap.voxel_area(),
                channels,
            }
        })
        .collect();
    TissueReport { classes }
}

/// Assign a tissue class to every consensus cluster and paint the label map.
///
/// `labels[i]` is the cluster of the voxel at `voxel_index[i]`; voxels not
/// listed are background.
pub fn classify_tissue(
    labels: &[usize],
    voxel_index: &[(usize, usize)],
    study: &StudyInput,
    rule: &TissueRule,
) -> Result<Classification> {
    if labels.len() != voxel_index.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} voxels",
            labels.len(),
            voxel_index.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::NoClusters);
    }
    let (w, h) = (study.width(), study.height());
    let cluster_count = labels.iter().max().map_or(0, |&m| m + 1);
    let adc = study.adc();
    let perf = study.perfusion_map();
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); cluster_count];
    for (&l, &(x, y)) in labels.iter().zip(voxel_index) {
        if x >= w || y >= h {
            return Err(Error::DimensionMismatch(format!(
                "voxel ({x}, {y}) outside {w}x{h} grid"
            )));
        }
        let s = &mut sums[l];
        s.0 += adc.get(x, y);
        s.1 += perf.get(x, y);
        s.2 += 1;
    }
    // ids without members (possible when labels are not contiguous) are left out
    let present: Vec<usize> = (0..cluster_count).filter(|&c| sums[c].2 > 0).collect();
    let means: Vec<(f64, f64)> = present
        .iter()
        .map(|&c| (sums[c].0 / sums[c].2 as f64, sums[c].1 / sums[c].2 as f64))
        .collect();
    let classes = classify_clusters(&means, study.perfusion, rule)?;
    let mut class_of = vec![TissueClass::Normal; cluster_count];
    let clusters = present
        .iter()
        .zip(&means)
        .zip(&classes)
        .map(|((&c, &(mean_adc, mean_perfusion)), &class)| {
            class_of[c] = class;
            ClusterSummary {
                label: c,
                size: sums[c].2,
                mean_adc,
                mean_perfusion,
                class,
            }
        })
        .collect();

    let mut labelmap = LabelMap::background(w, h, study.spacing());
    for (&l, &(x, y)) in labels.iter().zip(voxel_index) {
        let i = y * w + x;
        labelmap.labels[i] = l as i64;
        labelmap.tissue[i] = class_of[l];
    }
    let report = tissue_report(&labelmap, study);
    Ok(Classification {
        labelmap,
        report,
        clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::ParametricVolume;

    const EXEMPLARS: [(f64, f64); 3] = [(0.750e-3, 163.4), (0.646e-3, 125.0), (0.358e-3, 14.1)];

    #[test]
    fn reported_class_values() {
        let c =
            classify_clusters(&EXEMPLARS, PerfusionPolarity::Cbf, &TissueRule::default()).unwrap();
        assert_eq!(
            c,
            vec![
                TissueClass::Normal,
                TissueClass::AtRisk,
                TissueClass::Infarcted
            ]
        );
    }

    #[test]
    fn order_does_not_matter() {
        let shuffled = [EXEMPLARS[2], EXEMPLARS[0], EXEMPLARS[1]];
        let c =
            classify_clusters(&shuffled, PerfusionPolarity::Cbf, &TissueRule::default()).unwrap();
        assert_eq!(
            c,
            vec![
                TissueClass::Infarcted,
                TissueClass::Normal,
                TissueClass::AtRisk
            ]
        );
    }

    #[test]
    fn ttp_polarity() {
        // prolonged TTP in the core and rim
        let means = [(0.75e-3, 4.0), (0.646e-3, 5.5), (0.358e-3, 20.0)];
        let c = classify_clusters(&means, PerfusionPolarity::Ttp, &TissueRule::default()).unwrap();
        assert_eq!(
            c,
            vec![
                TissueClass::Normal,
                TissueClass::AtRisk,
                TissueClass::Infarcted
            ]
        );
    }

    #[test]
    fn single_cluster_is_normal() {
        let c = classify_clusters(
            &[(0.4e-3, 10.0)],
            PerfusionPolarity::Cbf,
            &TissueRule::default(),
        )
        .unwrap();
        assert_eq!(c, vec![TissueClass::Normal]);
        assert_eq!(
            classify_clusters(&[], PerfusionPolarity::Cbf, &TissueRule::default()),
            Err(Error::NoClusters)
        );
    }

    #[test]
    fn lowering_adc_never_lessens_severity() {
        let rule = TissueRule::default();
        for perf in [10.0, 40.0, 120.0, 160.0] {
            let mut last = 0;
            for step in (0..=75).rev() {
                let adc = step as f64 * 1e-5;
                let means = [(0.75e-3, 163.4), (adc, perf)];
                let c = classify_clusters(&means, PerfusionPolarity::Cbf, &rule).unwrap()[1];
                assert!(c.severity() >= last);
                last = c.severity();
            }
        }
    }

    #[test]
    fn paints_labelmap_and_report() {
        let mk = |name: &str, vals: [f64; 4]| {
            ParametricVolume::new(name, 2, 2, (0.5, 0.5), vals.to_vec()).unwrap()
        };
        let study = StudyInput::new(
            vec![
                mk("cbf", [163.4, 163.4, 14.1, 0.0]),
                mk("adc", [0.75e-3, 0.75e-3, 0.358e-3, 0.0]),
                mk("t2", [34.0, 34.0, 43.0, 0.0]),
            ],
            None,
            PerfusionPolarity::Cbf,
        )
        .unwrap();
        let out = classify_tissue(
            &[0, 0, 1],
            &[(0, 0), (1, 0), (0, 1)],
            &study,
            &TissueRule::default(),
        )
        .unwrap();
        assert_eq!(out.labelmap.labels, vec![0, 0, 1, -1]);
        assert_eq!(
            out.labelmap.tissue,
            vec![
                TissueClass::Normal,
                TissueClass::Normal,
                TissueClass::Infarcted,
                TissueClass::Background
            ]
        );
        let normal = out.report.get(TissueClass::Normal).unwrap();
        assert_eq!(normal.count, 2);
        assert!((normal.area_mm2 - 0.5).abs() < 1e-15);
        assert_eq!(normal.channels[2].mean, 34.0);
        assert_eq!(normal.channels[2].sd, 0.0);
        let total: f64 = out.report.classes.iter().map(|c| c.area_mm2).sum();
        assert!((total - 0.75).abs() < 1e-15);
    }
}
