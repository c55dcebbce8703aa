use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Mask, ParametricVolume};

pub const ADC_CHANNEL: &str = "adc";
pub const T2_CHANNEL: &str = "t2";

/// Which perfusion map the study carries. CBF is lower-is-worse; TTP is
/// higher-is-worse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerfusionPolarity {
    Cbf,
    Ttp,
}

impl PerfusionPolarity {
    /// The channel name carrying this perfusion map.
    pub fn channel(self) -> &'static str {
        match self {
            PerfusionPolarity::Cbf => "cbf",
            PerfusionPolarity::Ttp => "ttp",
        }
    }
}

impl fmt::Display for PerfusionPolarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.channel())
    }
}

impl FromStr for PerfusionPolarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cbf" => Ok(PerfusionPolarity::Cbf),
            "ttp" => Ok(PerfusionPolarity::Ttp),
            other => Err(Error::InvalidParameter(format!(
                "perfusion must be `cbf` or `ttp`, got `{other}`"
            ))),
        }
    }
}

/// Co-registered parameter maps of one study slice.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyInput {
    /// Feature channels in stacking order.
    pub volumes: Vec<ParametricVolume>,
    pub mask: Option<Mask>,
    pub perfusion: PerfusionPolarity,
}

impl StudyInput {
    pub fn new(
        volumes: Vec<ParametricVolume>,
        mask: Option<Mask>,
        perfusion: PerfusionPolarity,
    ) -> Result<Self> {
        let first = volumes
            .first()
            .ok_or_else(|| Error::MissingChannel(ADC_CHANNEL.into()))?;
        for v in &volumes {
            if !v.same_grid(first) {
                return Err(Error::DimensionMismatch(format!(
                    "channel `{}` ({}x{}, spacing {:?}) differs from `{}` ({}x{}, spacing {:?})",
                    v.name,
                    v.width,
                    v.height,
                    v.spacing,
                    first.name,
                    first.width,
                    first.height,
                    first.spacing
                )));
            }
        }
        if let Some(m) = &mask {
            m.check_dims(first.width, first.height)?;
        }
        let study = Self {
            volumes,
            mask,
            perfusion,
        };
        for required in [perfusion.channel(), ADC_CHANNEL, T2_CHANNEL] {
            if study.channel(required).is_none() {
                return Err(Error::MissingChannel(required.into()));
            }
        }
        Ok(study)
    }

    pub fn channel(&self, name: &str) -> Option<&ParametricVolume> {
        self.volumes.iter().find(|v| v.name == name)
    }

    pub fn adc(&self) -> &ParametricVolume {
        self.channel(ADC_CHANNEL)
            .expect("validated at construction")
    }

    pub fn perfusion_map(&self) -> &ParametricVolume {
        self.channel(self.perfusion.channel())
            .expect("validated at construction")
    }

    pub fn width(&self) -> usize {
        self.volumes[0].width
    }

    pub fn height(&self) -> usize {
        self.volumes[0].height
    }

    pub fn spacing(&self) -> (f64, f64) {
        self.volumes[0].spacing
    }

    pub fn effective_mask(&self) -> Mask {
        self.mask
            .clone()
            .unwrap_or_else(|| Mask::full(self.width(), self.height()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TissueClass {
    Background,
    Normal,
    AtRisk,
    Infarcted,
}

impl TissueClass {
    pub const ALL: [TissueClass; 4] = [
        TissueClass::Background,
        TissueClass::Normal,
        TissueClass::AtRisk,
        TissueClass::Infarcted,
    ];

    pub const FOREGROUND: [TissueClass; 3] = [
        TissueClass::Normal,
        TissueClass::AtRisk,
        TissueClass::Infarcted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TissueClass::Background => "background",
            TissueClass::Normal => "normal",
            TissueClass::AtRisk => "at_risk",
            TissueClass::Infarcted => "infarcted",
        }
    }

    /// Ordinal severity, Normal < AtRisk < Infarcted.
    pub fn severity(self) -> u8 {
        match self {
            TissueClass::Background => 0,
            TissueClass::Normal => 1,
            TissueClass::AtRisk => 2,
            TissueClass::Infarcted => 3,
        }
    }
}

impl fmt::Display for TissueClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TissueClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TissueClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Format(format!("unknown tissue class `{s}`")))
    }
}

/// Per-voxel cluster labels and tissue classes. Label −1 marks background.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub spacing: (f64, f64),
    pub labels: Vec<i64>,
    pub tissue: Vec<TissueClass>,
}

impl LabelMap {
    pub fn new(
        width: usize,
        height: usize,
        spacing: (f64, f64),
        labels: Vec<i64>,
        tissue: Vec<TissueClass>,
    ) -> Result<Self> {
        let n = width * height;
        if labels.len() != n || tissue.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "label map {width}x{height} has {} labels and {} classes",
                labels.len(),
                tissue.len()
            )));
        }
        if let Some(i) =
            (0..n).find(|&i| (labels[i] == -1) != (tissue[i] == TissueClass::Background))
        {
            return Err(Error::InvalidParameter(format!(
                "voxel {i}: label {} inconsistent with class {}",
                labels[i], tissue[i]
            )));
        }
        Ok(Self {
            width,
            height,
            spacing,
            labels,
            tissue,
        })
    }

    pub fn background(width: usize, height: usize, spacing: (f64, f64)) -> Self {
        Self {
            width,
            height,
            spacing,
            labels: vec![-1; width * height],
            tissue: vec![TissueClass::Background; width * height],
        }
    }

    pub fn class_mask(&self, class: TissueClass) -> Vec<bool> {
        self.tissue.iter().map(|&c| c == class).collect()
    }

    pub fn foreground_mask(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            values: self.labels.iter().map(|&l| l >= 0).collect(),
        }
    }

    pub fn count(&self, class: TissueClass) -> usize {
        self.tissue.iter().filter(|&&c| c == class).count()
    }

    pub fn voxel_area(&self) -> f64 {
        self.spacing.0 * self.spacing.1
    }
}

/// Area in mm² covered by one tissue class.
pub fn lesion_area(labelmap: &LabelMap, class: TissueClass) -> f64 {
    labelmap.count(class) as f64 * labelmap.voxel_area()
}

/// Infarcted plus at-risk area ("total affected").
pub fn affected_area(labelmap: &LabelMap) -> f64 {
    lesion_area(labelmap, TissueClass::Infarcted) + lesion_area(labelmap, TissueClass::AtRisk)
}
