use std::fmt::Write as _;

use super::TissueClass;
use crate::error::{Error, Result};
use crate::manifold::Embedding;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![[0, 0, 0]; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: [u8; 3]) {
        self.pixels[y * self.width + x] = c;
    }

    /// Distinct colors present, sorted.
    pub fn colors(&self) -> Vec<[u8; 3]> {
        let mut c = self.pixels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }
}

/// Linear-interpolated percentile of unsorted data, `p` in [0, 100].
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Map one axis to 0..=255 after clipping to its [1st, 99th] percentile. A
/// flat axis maps to mid-gray.
fn axis_levels(values: &[f64]) -> Vec<u8> {
    let lo = percentile(values, 1.0);
    let hi = percentile(values, 99.0);
    let span = hi - lo;
    // relative test so that affine rescaling of the axis cannot flip it
    if !(span > 1e-12 * lo.abs().max(hi.abs())) {
        return vec![128; values.len()];
    }
    values
        .iter()
        .map(|&v| {
            let u = ((v.clamp(lo, hi) - lo) / span * 255.0).round();
            u as u8
        })
        .collect()
}

/// False-color image with embedding axes 1..3 on R, G, B. `active`
/// restricts which rows are drawn (and which take part in the percentiles).
pub fn render_embedded_image(
    embedding: &Embedding,
    voxel_index: &[(usize, usize)],
    dims: (usize, usize),
    active: Option<&[bool]>,
) -> Result<RgbImage> {
    let d = embedding.dim();
    if d > 3 {
        return Err(Error::InvalidParameter(format!(
            "cannot render {d} embedding axes as RGB"
        )));
    }
    if voxel_index.len() != embedding.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} voxel indices for {} embedding rows",
            voxel_index.len(),
            embedding.len()
        )));
    }
    let rows: Vec<usize> = (0..embedding.len())
        .filter(|&i| active.is_none_or(|a| a[i]))
        .collect();
    let mut img = RgbImage::new(dims.0, dims.1);
    if rows.is_empty() {
        return Ok(img);
    }
    let mut channels = vec![vec![0u8; rows.len()]; 3];
    for (c, chan) in channels.iter_mut().enumerate().take(d) {
        let values: Vec<f64> = rows.iter().map(|&i| embedding.coords.get(i, c)).collect();
        *chan = axis_levels(&values);
    }
    for (r, &i) in rows.iter().enumerate() {
        let (x, y) = voxel_index[i];
        if x >= dims.0 || y >= dims.1 {
            return Err(Error::DimensionMismatch(format!(
                "voxel ({x}, {y}) outside {}x{} image",
                dims.0, dims.1
            )));
        }
        img.set(x, y, [channels[0][r], channels[1][r], channels[2][r]]);
    }
    Ok(img)
}

pub const SCATTER_SIZE: usize = 600;

pub const PALETTE: [[u8; 3]; 8] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [188, 189, 34],
];

pub fn class_color(class: TissueClass) -> [u8; 3] {
    match class {
        TissueClass::Infarcted => [255, 255, 0],
        TissueClass::AtRisk => [255, 0, 0],
        TissueClass::Normal => [0, 160, 0],
        TissueClass::Background => [128, 128, 128],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scattergram {
    pub csv: String,
    pub image: RgbImage,
}

/// Scatter of the first two embedding axes, one point per row. With tissue
/// classes the points are colored by class, otherwise by label.
pub fn export_scattergram(
    embedding: &Embedding,
    labels: &[i64],
    classes: Option<&[TissueClass]>,
) -> Result<Scattergram> {
    let n = embedding.len();
    if labels.len() != n || classes.is_some_and(|c| c.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {n} embedding rows",
            labels.len()
        )));
    }
    let d = embedding.dim();
    let mut csv = String::new();
    for c in 0..d {
        write!(csv, "dim{},", c + 1).unwrap();
    }
    csv.push_str("label,tissue_class\n");
    for i in 0..n {
        for v in embedding.row(i) {
            write!(csv, "{v:.16e},").unwrap();
        }
        let class = classes.map_or("", |c| c[i].as_str());
        writeln!(csv, "{},{}", labels[i], class).unwrap();
    }

    let mut image = RgbImage::new(SCATTER_SIZE, SCATTER_SIZE);
    if n > 0 {
        let axis = |c: usize| -> Vec<f64> {
            if c < d {
                embedding.coords.column(c)
            } else {
                vec![0.0; n]
            }
        };
        let (xs, ys) = (axis(0), axis(1));
        let range = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        let ((x0, x1), (y0, y1)) = (range(&xs), range(&ys));
        let margin = 10.0;
        let extent = SCATTER_SIZE as f64 - 1.0 - 2.0 * margin;
        let place = |v: f64, lo: f64, hi: f64| {
            if hi > lo {
                margin + (v - lo) / (hi - lo) * extent
            } else {
                margin + extent / 2.0
            }
        };
        for i in 0..n {
            let color = match classes {
                Some(c) => class_color(c[i]),
                None => PALETTE[labels[i].rem_euclid(PALETTE.len() as i64) as usize],
            };
            let px = place(xs[i], x0, x1).round() as i64;
            // image rows grow downwards
            let py = (SCATTER_SIZE as f64 - 1.0 - place(ys[i], y0, y1)).round() as i64;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (x, y) = (px + dx, py + dy);
                    if (0..SCATTER_SIZE as i64).contains(&x)
                        && (0..SCATTER_SIZE as i64).contains(&y)
                    {
                        image.set(x as usize, y as usize, color);
                    }
                }
            }
        }
    }
    Ok(Scattergram { csv, image })
}
