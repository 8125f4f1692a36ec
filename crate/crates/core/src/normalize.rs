use crate::error::{Error, Result};

/// Per-feature z-score transform `(x - mean) / std`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    params: Vec<(f64, f64)>,
}

impl Normalizer {
    pub fn new(params: Vec<(f64, f64)>) -> Result<Self> {
        for (index, &(mean, std)) in params.iter().enumerate() {
            if !mean.is_finite() || !(std.is_finite() && std > 0.0) {
                return Err(Error::ConstantFeature { index });
            }
        }
        Ok(Self { params })
    }

    /// Fits mean and population standard deviation of each column.
    pub fn fit(points: &[Vec<f64>]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyTrainingSet)?;
        let d = first.len();
        let n = points.len() as f64;
        let mut params = Vec::with_capacity(d);
        for j in 0..d {
            let mean = points.iter().map(|p| p[j]).sum::<f64>() / n;
            let var = points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            // a spread this small relative to the mean is float noise
            if std.is_nan() || std <= 1e-12 * mean.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::ConstantFeature { index: j });
            }
            params.push((mean, std));
        }
        Self::new(params)
    }

    pub fn params(&self) -> &[(f64, f64)] {
        &self.params
    }

    pub fn dimension(&self) -> usize {
        self.params.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.params)
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}
