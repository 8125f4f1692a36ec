//! Independent reference computations and synthetic data shared by the
//! integration and acceptance tests. Nothing here calls into the code paths
//! it is used to check.

#![allow(dead_code)]

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}

// ---------------------------------------------------------------------------
// HRV metric oracle: straight loops over the definitions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RefMetrics {
    pub mean_hr: f64,
    pub mean_rr: f64,
    pub sdev_hr: f64,
    pub sdev_nn: f64,
    pub rmssd: f64,
    pub sdann: Option<f64>,
    pub nnx: usize,
    pub pnnx: f64,
}

/// Welford running mean / sample standard deviation.
pub fn welford(values: &[f64]) -> (f64, f64) {
    let mut n = 0.0;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for &x in values {
        n += 1.0;
        let delta = x - mean;
        mean += delta / n;
        m2 += delta * (x - mean);
    }
    let sd = if n > 1.0 {
        (m2 / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Walks the series in time, closing a 5-minute segment whenever an interval
/// ends past the current boundary.
pub fn ref_sdann(rr: &[f64]) -> Option<f64> {
    const SEG: f64 = 300_000.0;
    let mut boundary = SEG;
    let mut elapsed = 0.0;
    let mut current: Vec<f64> = Vec::new();
    let mut means = Vec::new();
    for &v in rr {
        elapsed += v;
        while elapsed > boundary {
            if !current.is_empty() {
                means.push(current.iter().sum::<f64>() / current.len() as f64);
            }
            current.clear();
            boundary += SEG;
        }
        current.push(v);
    }
    if elapsed == boundary && !current.is_empty() {
        means.push(current.iter().sum::<f64>() / current.len() as f64);
    }
    if means.len() < 2 {
        None
    } else {
        Some(welford(&means).1)
    }
}

pub fn ref_metrics(rr: &[f64], x_ms: f64) -> RefMetrics {
    let hr: Vec<f64> = rr.iter().map(|v| 60.0 * 1000.0 / v).collect();
    let (mean_rr, sdev_nn) = welford(rr);
    let (mean_hr, sdev_hr) = welford(&hr);
    let mut sq = 0.0;
    let mut nnx = 0;
    let mut count = 0;
    for k in 1..rr.len() {
        let d = rr[k] - rr[k - 1];
        sq += d * d;
        count += 1;
        if d.abs() > x_ms {
            nnx += 1;
        }
    }
    RefMetrics {
        mean_hr,
        mean_rr,
        sdev_hr,
        sdev_nn,
        rmssd: (sq / count as f64).sqrt(),
        sdann: ref_sdann(rr),
        nnx,
        pnnx: nnx as f64 / count as f64,
    }
}

// ---------------------------------------------------------------------------
// Dual QP oracle: exact enumeration of active sets
// ---------------------------------------------------------------------------

pub fn ref_gaussian(x: &[f64], y: &[f64], sigma: f64) -> f64 {
    let mut sq = 0.0;
    for i in 0..x.len() {
        sq += (x[i] - y[i]).powi(2);
    }
    (-sq / (2.0 * sigma * sigma)).exp()
}

pub fn ref_linear(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn dual_value(k: &DMatrix<f64>, y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[(i, j)];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

pub struct OracleSolution {
    pub alphas: Vec<f64>,
    pub objective: f64,
}

/// Maximizes the dual by trying every assignment of each alpha to
/// {0, C, free}. On each face the free alphas solve the equality-constrained
/// stationarity system; feasible candidates are compared by objective.
/// Exact for positive definite kernel matrices.
pub fn brute_force_dual(k: &DMatrix<f64>, y: &[f64], c: f64) -> OracleSolution {
    let n = y.len();
    assert!(n <= 10);
    let mut best: Option<OracleSolution> = None;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state
            .iter()
            .map(|&s| if s == 1 { c } else { 0.0 })
            .collect();
        let fixed_sum: f64 = (0..n)
            .filter(|&i| state[i] != 2)
            .map(|i| alpha[i] * y[i])
            .sum();

        if free.is_empty() {
            if fixed_sum.abs() > 1e-9 * c.max(1.0) {
                continue;
            }
        } else {
            let m = free.len();
            let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
            let mut rhs = DVector::<f64>::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = y[i] * y[j] * k[(i, j)];
                }
                a[(r, m)] = y[i];
                a[(m, r)] = y[i];
                let mut g = 1.0;
                for j in 0..n {
                    if state[j] != 2 {
                        g -= y[i] * y[j] * k[(i, j)] * alpha[j];
                    }
                }
                rhs[r] = g;
            }
            rhs[m] = -fixed_sum;
            let Some(sol) = a.lu().solve(&rhs) else {
                continue;
            };
            let mut ok = true;
            for (r, &i) in free.iter().enumerate() {
                let v = sol[r];
                if !(v.is_finite() && v >= -1e-12 && v <= c + 1e-12) {
                    ok = false;
                    break;
                }
                alpha[i] = v.clamp(0.0, c);
            }
            if !ok {
                continue;
            }
        }
        let objective = dual_value(k, y, &alpha);
        if best.as_ref().is_none_or(|b| objective > b.objective) {
            best = Some(OracleSolution {
                alphas: alpha,
                objective,
            });
        }
    }
    best.expect("alpha = 0 is always feasible")
}

pub fn leading_minors(m: &DMatrix<f64>) -> Vec<f64> {
    (1..=m.nrows())
        .map(|k| m.view((0, 0), (k, k)).into_owned().determinant())
        .collect()
}

// ---------------------------------------------------------------------------
// Random training problems
// ---------------------------------------------------------------------------

pub struct RandomProblem {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub c: f64,
    pub sigma: f64,
}

/// `l` in 2..=6 points in [-2, 2]^2 at least 0.2 apart, both labels present.
pub fn random_problem(rng: &mut impl Rng) -> RandomProblem {
    let l = rng.random_range(2..=6);
    let mut points: Vec<Vec<f64>> = Vec::new();
    while points.len() < l {
        let p = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let far = points
            .iter()
            .all(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() >= 0.2);
        if far {
            points.push(p);
        }
    }
    let mut labels: Vec<f64> = (0..l)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    labels[0] = 1.0;
    labels[1] = -1.0;
    let c = [0.5, 1.0, 10.0, 100.0][rng.random_range(0..4)];
    let sigma = [0.5, 1.0, 2.0][rng.random_range(0..3)];
    RandomProblem {
        points,
        labels,
        c,
        sigma,
    }
}

pub fn gaussian_matrix(points: &[Vec<f64>], sigma: f64) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| ref_gaussian(&points[i], &points[j], sigma))
}

// ---------------------------------------------------------------------------
// Synthetic sessions on disk
// ---------------------------------------------------------------------------

/// RR series with the given mean and Gaussian beat-to-beat spread, clamped
/// to physiological values.
pub fn synth_rr(rng: &mut impl Rng, n: usize, mean: f64, spread: f64) -> Vec<f64> {
    let noise = Normal::new(0.0, spread).unwrap();
    (0..n)
        .map(|_| (mean + noise.sample(rng)).clamp(300.0, 2000.0))
        .collect()
}

pub struct SynthSession {
    pub id: String,
    pub rr: Vec<f64>,
    pub stress_level: u8,
    pub flu_level: u8,
}

/// Writes one `.rr` file per session plus `manifest.csv` into `dir`.
pub fn write_sessions(dir: &Path, sessions: &[SynthSession]) -> std::path::PathBuf {
    let mut manifest = String::from(
        "session_id,signal_path,signal_kind,stress_level,flu_level,sleep_hours,temperature_c,systole,diastole\n",
    );
    for s in sessions {
        let file = format!("{}.rr", s.id);
        let body: String = s.rr.iter().map(|v| format!("{v}\n")).collect();
        std::fs::write(dir.join(&file), body).unwrap();
        manifest.push_str(&format!(
            "{},{},rr,{},{},7,26.5,120,80\n",
            s.id, file, s.stress_level, s.flu_level
        ));
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).unwrap();
    path
}

/// Stress sessions: low beat-to-beat spread for stressed (level 3..=6),
/// high spread for relaxed (level 1..=2). Clusters in (SDevHR, SDevNN) sit
/// many pooled standard deviations apart.
pub fn separable_stress_sessions(seed: u64, count: usize) -> Vec<SynthSession> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let stressed = i % 2 == 0;
            let level = if stressed {
                r.random_range(3..=6)
            } else {
                r.random_range(1..=2)
            };
            let spread = if stressed { 15.0 } else { 70.0 };
            let mean = r.random_range(780.0..820.0);
            SynthSession {
                id: format!("s{i:02}"),
                rr: synth_rr(&mut r, 150, mean, spread),
                stress_level: level,
                flu_level: 1,
            }
        })
        .collect()
}

/// Influenza sessions whose (mean HR, mean RR) clusters overlap, plus
/// `crossings` forced near-duplicate pairs with opposite labels: the second
/// session of a pair copies the first with one interval nudged by 1e-6 ms.
pub fn overlapping_flu_sessions(seed: u64, count: usize, crossings: usize) -> Vec<SynthSession> {
    let mut r = rng(seed);
    let centre = Normal::new(0.0, 20.0).unwrap();
    let mut out: Vec<SynthSession> = (0..count)
        .map(|i| {
            let flu = i % 2 == 0;
            let mean = if flu { 740.0 } else { 800.0 } + centre.sample(&mut r);
            SynthSession {
                id: format!("f{i:02}"),
                rr: synth_rr(&mut r, 120, mean, 25.0),
                stress_level: 1,
                flu_level: if flu { r.random_range(2..=4) } else { 1 },
            }
        })
        .collect();
    for k in 0..crossings {
        let src = &out[k];
        let mut rr = src.rr.clone();
        rr[0] += 1e-6;
        let flu_level = if src.flu_level > 1 { 1 } else { 3 };
        out.push(SynthSession {
            id: format!("x{k:02}"),
            rr,
            stress_level: 1,
            flu_level,
        });
    }
    out
}
