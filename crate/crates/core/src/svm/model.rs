use super::kernel::Kernel;
use super::solver::DualSolution;
use super::{Label, TrainingSet, ALPHA_ZERO_TOL};
use crate::error::{Error, Result};
use crate::normalize::Normalizer;

/// A trained decision function restricted to its support vectors.
///
/// Support points are stored in the normalized space when a normalizer is
/// present; inputs to [`Model::decision_value`] are raw and get normalized first.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    support_points: Vec<Vec<f64>>,
    support_labels: Vec<Label>,
    support_alphas: Vec<f64>,
    bias: f64,
    kernel: Kernel,
    normalizer: Option<Normalizer>,
}

impl Model {
    pub fn new(
        support_points: Vec<Vec<f64>>,
        support_labels: Vec<Label>,
        support_alphas: Vec<f64>,
        bias: f64,
        kernel: Kernel,
        normalizer: Option<Normalizer>,
    ) -> Result<Self> {
        kernel.validate()?;
        let n = support_points.len();
        if support_labels.len() != n || support_alphas.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: support_labels.len().min(support_alphas.len()),
            });
        }
        if n == 0 {
            return Err(Error::InvalidParameter(
                "model has no support vectors".into(),
            ));
        }
        let d = support_points[0].len();
        if let Some(p) = support_points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        if let Some(norm) = &normalizer {
            if norm.dimension() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: norm.dimension(),
                });
            }
        }
        if let Some(a) = support_alphas
            .iter()
            .find(|a| !(a.is_finite() && **a > 0.0))
        {
            return Err(Error::InvalidParameter(format!(
                "support alpha {a} must be finite and > 0"
            )));
        }
        if !bias.is_finite() || support_points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite model parameter".into()));
        }
        Ok(Self {
            support_points,
            support_labels,
            support_alphas,
            bias,
            kernel,
            normalizer,
        })
    }

    /// Keeps the training points with `alpha > 1e-8`. `ts` must be the set the
    /// solution was computed on, already normalized if `normalizer` is given.
    pub fn from_solution(
        sol: &DualSolution,
        ts: &TrainingSet,
        normalizer: Option<Normalizer>,
    ) -> Result<Self> {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut alphas = Vec::new();
        for ((p, &y), &a) in ts.points().iter().zip(ts.labels()).zip(&sol.alphas) {
            if a > ALPHA_ZERO_TOL {
                points.push(p.clone());
                labels.push(y);
                alphas.push(a);
            }
        }
        Self::new(points, labels, alphas, sol.bias, sol.kernel, normalizer)
    }

    pub fn support_points(&self) -> &[Vec<f64>] {
        &self.support_points
    }

    pub fn support_labels(&self) -> &[Label] {
        &self.support_labels
    }

    pub fn support_alphas(&self) -> &[f64] {
        &self.support_alphas
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn normalizer(&self) -> Option<&Normalizer> {
        self.normalizer.as_ref()
    }

    pub fn dimension(&self) -> usize {
        self.support_points[0].len()
    }

    pub fn support_count(&self) -> usize {
        self.support_points.len()
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        let z;
        let x = match &self.normalizer {
            Some(n) => {
                z = n.apply(x);
                &z[..]
            }
            None => x,
        };
        let sum: f64 = self
            .support_points
            .iter()
            .zip(&self.support_labels)
            .zip(&self.support_alphas)
            .map(|((p, y), a)| a * y.sign() * self.kernel.eval_unchecked(p, x))
            .sum();
        Ok(sum + self.bias)
    }

    pub fn classify(&self, x: &[f64]) -> Result<Label> {
        self.decision_value(x).map(Label::from_decision)
    }
}
