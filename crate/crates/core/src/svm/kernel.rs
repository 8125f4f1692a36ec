use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Kernel function used by the SVM.
///
/// The Gaussian kernel is `exp(-|x - y|^2 / (2 sigma^2))`; at the default
/// `sigma = 1` it is `exp(-|x - y|^2 / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Gaussian { sigma: f64 },
    Polynomial { degree: u32, coef0: f64 },
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Gaussian { sigma: 1.0 }
    }
}

impl Kernel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let k = Kernel::Gaussian { sigma };
        k.validate()?;
        Ok(k)
    }

    pub fn polynomial(degree: u32, coef0: f64) -> Result<Self> {
        let k = Kernel::Polynomial { degree, coef0 };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Linear => Ok(()),
            Kernel::Gaussian { sigma } if sigma.is_finite() && sigma > 0.0 => Ok(()),
            Kernel::Gaussian { sigma } => Err(Error::InvalidKernel(format!(
                "gaussian sigma must be finite and > 0, got {sigma}"
            ))),
            Kernel::Polynomial { degree, coef0 } => {
                if degree < 1 {
                    Err(Error::InvalidKernel(
                        "polynomial degree must be >= 1".into(),
                    ))
                } else if !coef0.is_finite() {
                    Err(Error::InvalidKernel(format!(
                        "polynomial coef0 must be finite, got {coef0}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(x, y),
            Kernel::Gaussian { sigma } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * sigma * sigma)).exp()
            }
            Kernel::Polynomial { degree, coef0 } => (dot(x, y) + coef0).powi(degree as i32),
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Linear => write!(f, "linear"),
            Kernel::Gaussian { sigma } => write!(f, "gaussian {sigma}"),
            Kernel::Polynomial { degree, coef0 } => write!(f, "polynomial {degree} {coef0}"),
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    /// Parses the form produced by `Display`, e.g. `gaussian 1`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidKernel(format!("bad number {t:?}")))
        };
        let k = match parts.as_slice() {
            ["linear"] => Kernel::Linear,
            ["gaussian", sigma] => Kernel::Gaussian { sigma: num(sigma)? },
            ["polynomial", degree, coef0] => Kernel::Polynomial {
                degree: degree
                    .parse()
                    .map_err(|_| Error::InvalidKernel(format!("bad degree {degree:?}")))?,
                coef0: num(coef0)?,
            },
            _ => return Err(Error::InvalidKernel(format!("unrecognized kernel {s:?}"))),
        };
        k.validate()?;
        Ok(k)
    }
}

/// Dense symmetric kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    n: usize,
    values: Vec<f64>,
}

impl Gram {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// Kernel values for every pair of points. Each unordered pair is evaluated
/// once and mirrored, so the result is exactly symmetric.
pub fn gram_matrix(kernel: &Kernel, points: &[Vec<f64>]) -> Result<Gram> {
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    let d = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.len(),
        });
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k = kernel.eval_unchecked(&points[i], &points[j]);
            values[i * n + j] = k;
            values[j * n + i] = k;
        }
    }
    Ok(Gram { n, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_values() {
        let k = Kernel::default();
        assert_eq!(k.eval(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        let v = k.eval(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-12);
        let wide = Kernel::gaussian(2.0).unwrap();
        let v = wide.eval(&[0.0], &[2.0]).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn linear_and_polynomial() {
        assert_eq!(Kernel::Linear.eval(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let p = Kernel::polynomial(2, 1.0).unwrap();
        assert_eq!(p.eval(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 144.0);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            Kernel::Linear.eval(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 1,
                got: 2
            })
        ));
        assert!(gram_matrix(&Kernel::Linear, &[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn invalid_parameters() {
        assert!(Kernel::gaussian(0.0).is_err());
        assert!(Kernel::gaussian(f64::NAN).is_err());
        assert!(Kernel::polynomial(0, 1.0).is_err());
    }

    #[test]
    fn display_parse() {
        for k in [
            Kernel::Linear,
            Kernel::Gaussian { sigma: 0.25 },
            Kernel::Polynomial {
                degree: 3,
                coef0: -1.5,
            },
        ] {
            assert_eq!(k.to_string().parse::<Kernel>().unwrap(), k);
        }
        assert!("gaussian -1".parse::<Kernel>().is_err());
        assert!("sigmoid 1".parse::<Kernel>().is_err());
    }

    #[test]
    fn gram_symmetric_unit_diagonal() {
        let pts = vec![
            vec![0.1, 0.2],
            vec![-1.0, 3.0],
            vec![2.5, 0.0],
            vec![0.0, 0.0],
        ];
        let g = gram_matrix(&Kernel::default(), &pts).unwrap();
        for i in 0..4 {
            assert_eq!(g.get(i, i), 1.0);
            for j in 0..4 {
                assert_eq!(g.get(i, j).to_bits(), g.get(j, i).to_bits());
            }
        }
    }
}
