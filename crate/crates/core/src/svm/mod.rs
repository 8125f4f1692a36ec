//! Binary soft-margin support vector machine.
//!
//! Training maximizes the kernelized dual
//!
//! ```text
//! W(a) = sum_i a_i - 1/2 sum_i sum_j a_i a_j y_i y_j K(x_i, x_j)
//! s.t.   0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! with pairwise coordinate ascent (SMO). The decision function is
//! `f(x) = sum_i a_i y_i K(x_i, x) + b` and its sign is the predicted class.

mod kernel;
mod model;
mod solver;

use std::fmt;

use crate::error::{Error, Result};

pub use kernel::{gram_matrix, Gram, Kernel};
pub use model::Model;
pub use solver::{compute_bias, linear_margin, solve_dual, DualSolution, SolverParams};

/// Alphas at or below this value are treated as zero.
pub const ALPHA_ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    /// Sign rule: strictly positive values are `Positive`; zero and negative
    /// values are `Negative`.
    pub fn from_decision(value: f64) -> Label {
        if value > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn from_sign(value: f64) -> Option<Label> {
        if value == 1.0 {
            Some(Label::Positive)
        } else if value == -1.0 {
            Some(Label::Negative)
        } else {
            None
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Negative => "-1",
            Label::Positive => "+1",
        })
    }
}

/// Labeled points of uniform dimension with both classes present.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    points: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl TrainingSet {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "training points must be finite".into(),
            ));
        }
        let has_pos = labels.contains(&Label::Positive);
        let has_neg = labels.contains(&Label::Negative);
        if !(has_pos && has_neg) {
            return Err(Error::SingleClass);
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if labels[i] != labels[j] && points[i] == points[j] {
                    return Err(Error::ConflictingDuplicate {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        Ok(Self { points, labels })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.points[0].len()
    }
}
