use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param_maps::AcquisitionSeries;
use crate::pipeline::{LabelMap, PerfusionPolarity, StudyInput, TissueClass};
use crate::volume::{Mask, ParametricVolume};

/// Region outline in voxel coordinates; a voxel belongs to a shape when its
/// integer coordinates satisfy the inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Ellipse {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
    },
    /// Half-open box `[x0, x1) × [y0, y1)`.
    Rectangle {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    },
    /// Inside the outer ellipse and outside the inner one, both centered at (cx, cy).
    Annulus {
        cx: f64,
        cy: f64,
        outer_rx: f64,
        outer_ry: f64,
        inner_rx: f64,
        inner_ry: f64,
    },
}

fn in_ellipse(x: f64, y: f64, cx: f64, cy: f64, rx: f64, ry: f64) -> bool {
    let (u, v) = ((x - cx) / rx, (y - cy) / ry);
    u * u + v * v <= 1.0
}

impl Shape {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        let (x, y) = (x as f64, y as f64);
        match *self {
            Shape::Ellipse { cx, cy, rx, ry } => in_ellipse(x, y, cx, cy, rx, ry),
            Shape::Rectangle { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Shape::Annulus {
                cx,
                cy,
                outer_rx,
                outer_ry,
                inner_rx,
                inner_ry,
            } => {
                in_ellipse(x, y, cx, cy, outer_rx, outer_ry)
                    && !in_ellipse(x, y, cx, cy, inner_rx, inner_ry)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TissueValues {
    /// mm²/s
    pub adc: f64,
    /// mL/g/s
    pub cbf: f64,
    /// ms
    pub t2: f64,
}

pub const NORMAL_TISSUE: TissueValues = TissueValues {
    adc: 0.750e-3,
    cbf: 163.4,
    t2: 34.0,
};
pub const AT_RISK_TISSUE: TissueValues = TissueValues {
    adc: 0.646e-3,
    cbf: 125.0,
    t2: 38.0,
};
pub const INFARCTED_TISSUE: TissueValues = TissueValues {
    adc: 0.358e-3,
    cbf: 14.1,
    t2: 43.0,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomRegion {
    pub class: TissueClass,
    pub shape: Shape,
    pub values: TissueValues,
}

/// Synthetic slice: a brain outline filled with normal tissue, with lesion
/// regions painted on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    /// mm per voxel along x and y.
    pub spacing: (f64, f64),
    pub brain: Shape,
    pub normal: TissueValues,
    pub regions: Vec<PhantomRegion>,
    /// Standard deviation of the multiplicative Gaussian noise.
    pub noise: f64,
}

impl Default for PhantomSpec {
    /// 128×128 at 0.25 mm: an infarct core with a surrounding at-risk rim,
    /// offset into one hemisphere.
    fn default() -> Self {
        let (cx, cy) = (80.0, 64.0);
        Self {
            width: 128,
            height: 128,
            spacing: (0.25, 0.25),
            brain: Shape::Ellipse {
                cx: 64.0,
                cy: 64.0,
                rx: 56.0,
                ry: 48.0,
            },
            normal: NORMAL_TISSUE,
            regions: vec![
                PhantomRegion {
                    class: TissueClass::Infarcted,
                    shape: Shape::Ellipse {
                        cx,
                        cy,
                        rx: 12.0,
                        ry: 10.0,
                    },
                    values: INFARCTED_TISSUE,
                },
                PhantomRegion {
                    class: TissueClass::AtRisk,
                    shape: Shape::Annulus {
                        cx,
                        cy,
                        outer_rx: 24.0,
                        outer_ry: 20.0,
                        inner_rx: 12.0,
                        inner_ry: 10.0,
                    },
                    values: AT_RISK_TISSUE,
                },
            ],
            noise: 0.02,
        }
    }
}

impl PhantomSpec {
    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter(
                "phantom grid must be non-empty".into(),
            ));
        }
        if !(self.spacing.0 > 0.0 && self.spacing.1 > 0.0) {
            return Err(Error::InvalidParameter(
                "phantom spacing must be positive".into(),
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise fraction must be >= 0, got {}",
                self.noise
            )));
        }
        let positive = |v: &TissueValues| v.adc > 0.0 && v.cbf > 0.0 && v.t2 > 0.0;
        if !positive(&self.normal) || !self.regions.iter().all(|r| positive(&r.values)) {
            return Err(Error::InvalidParameter(
                "tissue values must be positive".into(),
            ));
        }
        if let Some(r) = self
            .regions
            .iter()
            .find(|r| r.class == TissueClass::Background)
        {
            return Err(Error::InvalidParameter(format!(
                "region {:?} cannot be background",
                r.shape
            )));
        }
        for y in 0..self.height {
            for x in 0..self.width {
                let hits: Vec<usize> = (0..self.regions.len())
                    .filter(|&i| self.regions[i].shape.contains(x, y))
                    .collect();
                if hits.len() > 1 {
                    return Err(Error::OverlappingRegions(hits[0], hits[1]));
                }
                if !hits.is_empty() && !self.brain.contains(x, y) {
                    return Err(Error::InvalidParameter(format!(
                        "region {} extends outside the brain at ({x}, {y})",
                        hits[0]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Ground-truth class of every voxel, raster order.
    pub fn class_map(&self) -> Vec<TissueClass> {
        let mut out = Vec::with_capacity(self.width * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if !self.brain.contains(x, y) {
                    TissueClass::Background
                } else {
                    self.regions
                        .iter()
                        .find(|r| r.shape.contains(x, y))
                        .map_or(TissueClass::Normal, |r| r.class)
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    /// Channels `cbf`, `adc`, `t2`, masked to the brain.
    pub study: StudyInput,
    /// Labels are 0 normal, 1 at risk, 2 infarcted, −1 background.
    pub truth: LabelMap,
}

fn noisy(value: f64, noise: f64, rng: &mut ChaCha8Rng) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    value * (1.0 + noise * z).max(0.0)
}

pub fn generate_phantom(spec: &PhantomSpec, seed: u64) -> Result<Phantom> {
    spec.validate()?;
    let n = spec.width * spec.height;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut cbf, mut adc, mut t2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut brain = vec![false; n];
    let mut labels = vec![-1i64; n];
    let mut tissue = vec![TissueClass::Background; n];
    for y in 0..spec.height {
        for x in 0..spec.width {
            let i = y * spec.width + x;
            if !spec.brain.contains(x, y) {
                continue;
            }
            let (class, v) = spec
                .regions
                .iter()
                .find(|r| r.shape.contains(x, y))
                .map_or((TissueClass::Normal, spec.normal), |r| (r.class, r.values));
            brain[i] = true;
            tissue[i] = class;
            labels[i] = i64::from(class.severity()) - 1;
            cbf[i] = noisy(v.cbf, spec.noise, &mut rng);
            adc[i] = noisy(v.adc, spec.noise, &mut rng);
            t2[i] = noisy(v.t2, spec.noise, &mut rng);
        }
    }
    let (w, h, s) = (spec.width, spec.height, spec.spacing);
    let study = StudyInput::new(
        vec![
            ParametricVolume::new("cbf", w, h, s, cbf)?,
            ParametricVolume::new("adc", w, h, s, adc)?,
            ParametricVolume::new("t2", w, h, s, t2)?,
        ],
        Some(Mask::new(w, h, brain)?),
        PerfusionPolarity::Cbf,
    )?;
    let truth = LabelMap::new(w, h, s, labels, tissue)?;
    Ok(Phantom { study, truth })
}

pub const DWI_B_VALUES: [f64; 5] = [0.0, 200.0, 400.0, 600.0, 800.0];
pub const T2_ECHO_TIMES: [f64; 4] = [30.0, 60.0, 90.0, 120.0];

/// Frames `s0 · exp(−c · rate)` with multiplicative noise, where `rate` is
/// taken from `rates` voxelwise.
fn decay_series(
    rates: &[f64],
    (w, h, spacing): (usize, usize, (f64, f64)),
    s0: f64,
    control: &[f64],
    noise: f64,
    seed: u64,
    prefix: &str,
) -> Result<AcquisitionSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(control.len());
    for &c in control {
        let values = rates
            .iter()
            .map(|&r| noisy(s0 * (-c * r).exp(), noise, &mut rng))
            .collect();
        frames.push(ParametricVolume::new(
            format!("{prefix}{c}"),
            w,
            h,
            spacing,
            values,
        )?);
    }
    AcquisitionSeries::new(frames, control.to_vec())
}

/// DWI frames `s0 · exp(−b · ADC)` for the given b-values.
pub fn synthesize_dwi_series(
    adc: &ParametricVolume,
    b_values: &[f64],
    s0: f64,
    noise: f64,
    seed: u64,
) -> Result<AcquisitionSeries> {
    let grid = (adc.width, adc.height, adc.spacing);
    decay_series(&adc.values, grid, s0, b_values, noise, seed, "b")
}

/// Multi-echo frames `s0 · exp(−TE / T2)`; voxels with T2 = 0 do not decay.
pub fn synthesize_t2_series(
    t2: &ParametricVolume,
    echo_times: &[f64],
    s0: f64,
    noise: f64,
    seed: u64,
) -> Result<AcquisitionSeries> {
    let rates: Vec<f64> = t2
        .values
        .iter()
        .map(|&v| if v > 0.0 { 1.0 / v } else { 0.0 })
        .collect();
    let grid = (t2.width, t2.height, t2.spacing);
    decay_series(&rates, grid, s0, echo_times, noise, seed, "te")
}
