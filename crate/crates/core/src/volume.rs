//! 2-D scalar grids and binary masks.

use crate::error::{Error, Result};

/// A named 2-D scalar grid: one parameter map or one acquisition frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricVolume {
    pub name: String,
    pub width: usize,
    pub height: usize,
    /// (dx, dy) in mm per pixel.
    pub spacing: (f64, f64),
    /// Row-major, `values[y * width + x]`.
    pub values: Vec<f64>,
}

impl ParametricVolume {
    pub fn new(
        name: impl Into<String>,
        width: usize,
        height: usize,
        spacing: (f64, f64),
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {width}x{height} grid",
                values.len()
            )));
        }
        if !(spacing.0 > 0.0 && spacing.1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pixel spacing must be positive, got {spacing:?}"
            )));
        }
        Ok(Self {
            name: name.into(),
            width,
            height,
            spacing,
            values,
        })
    }

    pub fn filled(
        name: impl Into<String>,
        width: usize,
        height: usize,
        spacing: (f64, f64),
        value: f64,
    ) -> Result<Self> {
        Self::new(name, width, height, spacing, vec![value; width * height])
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.index(x, y)]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &ParametricVolume) -> bool {
        self.width == other.width && self.height == other.height && self.spacing == other.spacing
    }
}

/// Binary foreground mask over a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub values: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, values: Vec<bool>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} mask values for a {width}x{height} grid",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![true; width * height],
        }
    }

    /// Nonzero voxels of a volume are foreground.
    pub fn from_volume(volume: &ParametricVolume) -> Self {
        Self {
            width: volume.width,
            height: volume.height,
            values: volume.values.iter().map(|&v| v != 0.0).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    pub fn check_dims(&self, width: usize, height: usize) -> Result<()> {
        if self.width != width || self.height != height {
            return Err(Error::DimensionMismatch(format!(
                "mask is {}x{}, volume is {width}x{height}",
                self.width, self.height
            )));
        }
        Ok(())
    }
}
