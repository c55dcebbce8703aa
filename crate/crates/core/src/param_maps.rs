//! Per-voxel exponential-decay fits producing ADC and T2 maps.
//!
//! Both maps come from the same log-linear least-squares fit of
//! `S(c) = S0 · exp(-rate · c)` over every frame of a series, where `c` is
//! the b-value (DWI) or the echo time (multi-echo T2).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::volume::{Mask, ParametricVolume};

/// Rates at or below this value are treated as "no measurable decay" when
/// converting to T2.
pub const RATE_FLOOR: f64 = 1e-9;

/// Multi-frame acquisition: one frame per b-value or echo time.
#[derive(Debug, Clone)]
pub struct AcquisitionSeries {
    frames: Vec<ParametricVolume>,
    control_values: Vec<f64>,
}

impl AcquisitionSeries {
    pub fn new(frames: Vec<ParametricVolume>, control_values: Vec<f64>) -> Result<Self> {
        if frames.len() != control_values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} frames but {} control values",
                frames.len(),
                control_values.len()
            )));
        }
        if frames.len() < 2 {
            return Err(Error::InvalidSeries(
                "at least two frames are required".into(),
            ));
        }
        let first = &frames[0];
        if let Some(bad) = frames.iter().find(|f| !f.same_grid(first)) {
            return Err(Error::DimensionMismatch(format!(
                "frame `{}` does not share the grid of frame `{}`",
                bad.name, first.name
            )));
        }
        if control_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSeries(
                "control values must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            frames,
            control_values,
        })
    }

    pub fn frames(&self) -> &[ParametricVolume] {
        &self.frames
    }

    pub fn control_values(&self) -> &[f64] {
        &self.control_values
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn spacing(&self) -> (f64, f64) {
        self.frames[0].spacing
    }

    /// Signal of voxel `i` across all frames.
    pub fn signal(&self, i: usize) -> Vec<f64> {
        self.frames.iter().map(|f| f.values[i]).collect()
    }
}

/// Outcome of fitting a single voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Fitted,
    /// Outside the mask.
    Masked,
    /// Some frame had a signal ≤ 0.
    NonPositive,
    /// Decay rate at or below [`RATE_FLOOR`] (T2 only).
    Flat,
}

/// A parameter map together with the per-voxel fit status. Voxels whose
/// status is not `Fitted` hold 0.
#[derive(Debug, Clone)]
pub struct FittedMap {
    pub volume: ParametricVolume,
    pub status: Vec<FitStatus>,
}

impl FittedMap {
    pub fn fitted_count(&self) -> usize {
        self.status
            .iter()
            .filter(|s| **s == FitStatus::Fitted)
            .count()
    }
}

/// Ordinary least squares of `ln(signal)` against `control`.
/// Returns `(amplitude, rate)` with `rate` the negated slope.
pub fn fit_exponential_decay(signal: &[f64], control: &[f64]) -> Result<(f64, f64)> {
    if signal.len() != control.len() || signal.len() < 2 {
        return Err(Error::InvalidSeries(format!(
            "need matching signal/control of length >= 2, got {} and {}",
            signal.len(),
            control.len()
        )));
    }
    if let Some((index, &value)) = signal.iter().enumerate().find(|(_, &s)| !(s > 0.0)) {
        return Err(Error::NonPositiveSignal { index, value });
    }
    let n = signal.len() as f64;
    let mean_c = control.iter().sum::<f64>() / n;
    let logs: Vec<f64> = signal.iter().map(|s| s.ln()).collect();
    let mean_y = logs.iter().sum::<f64>() / n;

    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (c, y) in control.iter().zip(&logs) {
        let dc = c - mean_c;
        sxx += dc * dc;
        sxy += dc * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_c;
    Ok((intercept.exp(), -slope))
}

fn check_mask(series: &AcquisitionSeries, mask: Option<&Mask>) -> Result<()> {
    match mask {
        Some(m) => m.check_dims(series.width(), series.height()),
        None => Ok(()),
    }
}

fn fit_map<F>(
    series: &AcquisitionSeries,
    mask: Option<&Mask>,
    name: &str,
    to_value: F,
) -> Result<FittedMap>
where
    F: Fn(f64) -> Option<f64> + Sync,
{
    check_mask(series, mask)?;
    let n = series.width() * series.height();
    let control = series.control_values();

    let fitted: Vec<(f64, FitStatus)> = (0..n)
        .into_par_iter()
        .map(|i| {
            if mask.is_some_and(|m| !m.values[i]) {
                return (0.0, FitStatus::Masked);
            }
            match fit_exponential_decay(&series.signal(i), control) {
                Ok((_, rate)) => match to_value(rate) {
                    Some(v) => (v, FitStatus::Fitted),
                    None => (0.0, FitStatus::Flat),
                },
                Err(Error::NonPositiveSignal { .. }) => (0.0, FitStatus::NonPositive),
                // control values are validated strictly increasing, so the
                // fit itself cannot degenerate here
                Err(_) => (0.0, FitStatus::Flat),
            }
        })
        .collect();

    let (values, status): (Vec<f64>, Vec<FitStatus>) = fitted.into_iter().unzip();
    let volume = ParametricVolume::new(
        name,
        series.width(),
        series.height(),
        series.spacing(),
        values,
    )?;
    Ok(FittedMap { volume, status })
}

/// ADC map in mm²/s from a DWI series whose control values are b-values
/// (s/mm², first one 0).
pub fn compute_adc_map(series: &AcquisitionSeries, mask: Option<&Mask>) -> Result<FittedMap> {
    if series.control_values()[0] != 0.0 {
        return Err(Error::InvalidSeries(format!(
            "DWI series must start at b = 0, got {}",
            series.control_values()[0]
        )));
    }
    fit_map(series, mask, "adc", Some)
}

/// T2 map in ms from a multi-echo series whose control values are echo times (ms).
pub fn compute_t2_map(series: &AcquisitionSeries, mask: Option<&Mask>) -> Result<FittedMap> {
    fit_map(series, mask, "t2", |rate| {
        (rate > RATE_FLOOR).then(|| 1.0 / rate)
    })
}
