use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Paired observations, optionally named by subject.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub labels: Option<Vec<String>>,
}

impl PairedSamples {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} x values vs {} y values",
                x.len(),
                y.len()
            )));
        }
        if x.iter().chain(&y).any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("paired samples contain NaN".into()));
        }
        Ok(Self { x, y, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.x.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} samples",
                labels.len(),
                self.x.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

impl fmt::Display for CorrelationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelationMethod::Pearson => "pearson",
            CorrelationMethod::Spearman => "spearman",
        })
    }
}

impl FromStr for CorrelationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(CorrelationMethod::Pearson),
            "spearman" => Ok(CorrelationMethod::Spearman),
            other => Err(Error::InvalidParameter(format!(
                "correlation method must be pearson or spearman, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub n: usize,
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn centered(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let (cx, cy) = (centered(x), centered(y));
    let sxx: f64 = cx.iter().map(|v| v * v).sum();
    let syy: f64 = cy.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("y"));
    }
    let sxy: f64 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum();
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn correlation(s: &PairedSamples, method: CorrelationMethod) -> Result<Correlation> {
    let n = s.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "correlation needs at least 3 pairs, got {n}"
        )));
    }
    let r = match method {
        CorrelationMethod::Pearson => pearson(&s.x, &s.y)?,
        CorrelationMethod::Spearman => pearson(&average_ranks(&s.x), &average_ranks(&s.y))?,
    };
    Ok(Correlation { r, n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of y on x. A constant y fits exactly with slope 0
/// and is reported with r² = 0.
pub fn linear_regression(s: &PairedSamples) -> Result<Regression> {
    if s.len() < 2 {
        return Err(Error::InvalidParameter(
            "regression needs at least 2 pairs".into(),
        ));
    }
    let n = s.len() as f64;
    let mx = s.x.iter().sum::<f64>() / n;
    let my = s.y.iter().sum::<f64>() / n;
    let (cx, cy) = (centered(&s.x), centered(&s.y));
    let sxx: f64 = cx.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x"));
    }
    let sxy: f64 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum();
    let syy: f64 = cy.iter().map(|v| v * v).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    Ok(Regression {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}
