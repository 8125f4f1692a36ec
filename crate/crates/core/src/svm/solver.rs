use super::kernel::{gram_matrix, Gram, Kernel};
use super::{Label, TrainingSet, ALPHA_ZERO_TOL};
use crate::error::{Error, Result};

/// Smallest relative change of an alpha that counts as progress.
const STEP_EPS: f64 = 1e-12;
/// Curvature floor for pair selection on non positive definite kernels.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Box bound C on every alpha.
    pub c_bound: f64,
    pub kkt_tol: f64,
    /// Update budget in units of the training set size.
    pub max_passes: usize,
    /// Record the dual objective after every pair update.
    pub record_objective: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            c_bound: 1000.0,
            kkt_tol: 1e-3,
            max_passes: 10_000,
            record_objective: false,
        }
    }
}

impl SolverParams {
    fn validate(&self) -> Result<()> {
        if !(self.c_bound.is_finite() && self.c_bound > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "C must be finite and > 0, got {}",
                self.c_bound
            )));
        }
        if !(self.kkt_tol.is_finite() && self.kkt_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "KKT tolerance must be finite and > 0, got {}",
                self.kkt_tol
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidParameter("max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub objective_value: f64,
    pub kernel: Kernel,
    pub c_bound: f64,
    /// Successful pair updates.
    pub iterations: usize,
    /// Pair updates divided by the training set size, rounded up.
    pub passes: usize,
    pub converged: bool,
    /// Dual objective after each pair update; empty unless requested.
    pub objective_trace: Vec<f64>,
}

impl DualSolution {
    /// `sum_j a_j y_j K(x_j, x)` over the full training set.
    pub fn decision_without_bias(&self, ts: &TrainingSet, x: &[f64]) -> Result<f64> {
        if x.len() != ts.dimension() {
            return Err(Error::DimensionMismatch {
                expected: ts.dimension(),
                got: x.len(),
            });
        }
        Ok(ts
            .points()
            .iter()
            .zip(ts.labels())
            .zip(&self.alphas)
            .filter(|(_, &a)| a != 0.0)
            .map(|((p, y), a)| a * y.sign() * self.kernel.eval_unchecked(p, x))
            .sum())
    }

    pub fn decision_value(&self, ts: &TrainingSet, x: &[f64]) -> Result<f64> {
        Ok(self.decision_without_bias(ts, x)? + self.bias)
    }

    /// `|sum_i a_i y_i|`
    pub fn equality_residual(&self, ts: &TrainingSet) -> f64 {
        self.alphas
            .iter()
            .zip(ts.labels())
            .map(|(a, y)| a * y.sign())
            .sum::<f64>()
            .abs()
    }

    pub fn support_count(&self) -> usize {
        self.alphas.iter().filter(|&&a| a > ALPHA_ZERO_TOL).count()
    }
}

fn dual_objective(gram: &Gram, y: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        let row = gram.row(i);
        let inner: f64 = (0..n).map(|j| alpha[j] * y[j] * row[j]).sum();
        quad += alpha[i] * y[i] * inner;
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

struct Smo<'a> {
    gram: &'a Gram,
    y: Vec<f64>,
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    /// `f(x_i) - y_i` under the running threshold.
    errors: Vec<f64>,
    b: f64,
    updates: usize,
    trace: Option<Vec<f64>>,
}

impl<'a> Smo<'a> {
    fn new(gram: &'a Gram, y: Vec<f64>, params: &SolverParams) -> Self {
        let n = y.len();
        Self {
            gram,
            errors: y.iter().map(|v| -v).collect(),
            y,
            c: params.c_bound,
            tol: params.kkt_tol,
            alpha: vec![0.0; n],
            b: 0.0,
            updates: 0,
            trace: params.record_objective.then(Vec::new),
        }
    }

    fn n(&self) -> usize {
        self.alpha.len()
    }

    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn snap(&self, a: f64) -> f64 {
        let eps = STEP_EPS * self.c;
        if a < eps {
            0.0
        } else if a > self.c - eps {
            self.c
        } else {
            a
        }
    }

    fn refresh_errors(&mut self) {
        let n = self.n();
        for i in 0..n {
            let row = self.gram.row(i);
            let f: f64 = (0..n)
                .filter(|&j| self.alpha[j] != 0.0)
                .map(|j| self.alpha[j] * self.y[j] * row[j])
                .sum();
            self.errors[i] = f + self.b - self.y[i];
        }
    }

    /// Jointly optimizes alphas `i1` and `i2` along the equality constraint.
    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let c = self.c;

        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if lo >= hi {
            return false;
        }

        let k11 = self.gram.get(i1, i1);
        let k22 = self.gram.get(i2, i2);
        let k12 = self.gram.get(i1, i2);
        let eta = k11 + k22 - 2.0 * k12;
        // Along the constraint line the objective is
        // W(a2 + t) = W(a2) + t * slope - eta * t^2 / 2.
        let slope = y2 * (e1 - e2);
        let gain = |t: f64| (t - a2) * slope - 0.5 * eta * (t - a2) * (t - a2);

        let mut a2_new = if eta > 0.0 {
            (a2 + slope / eta).clamp(lo, hi)
        } else {
            let (g_lo, g_hi) = (gain(lo), gain(hi));
            if g_lo >= g_hi && g_lo > 0.0 {
                lo
            } else if g_hi > g_lo && g_hi > 0.0 {
                hi
            } else {
                a2
            }
        };
        a2_new = self.snap(a2_new);
        if (a2_new - a2).abs() < STEP_EPS * (a2_new + a2 + STEP_EPS) {
            return false;
        }
        if gain(a2_new) <= 0.0 {
            return false;
        }
        let a1_new = self.snap(a1 + y1 * y2 * (a2 - a2_new));

        let d1 = y1 * (a1_new - a1);
        let d2 = y2 * (a2_new - a2);
        let b1 = self.b - e1 - d1 * k11 - d2 * k12;
        let b2 = self.b - e2 - d1 * k12 - d2 * k22;
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        let b_new = if self.is_free(i1) {
            b1
        } else if self.is_free(i2) {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = b_new - self.b;
        self.b = b_new;

        let (row1, row2) = (self.gram.row(i1), self.gram.row(i2));
        for k in 0..self.errors.len() {
            self.errors[k] += d1 * row1[k] + d2 * row2[k] + db;
        }
        self.updates += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(dual_objective(self.gram, &self.y, &self.alpha));
        }
        true
    }

    /// `alpha_i * y_i` can still grow.
    fn in_up(&self, i: usize) -> bool {
        if self.y[i] > 0.0 {
            self.alpha[i] < self.c
        } else {
            self.alpha[i] > 0.0
        }
    }

    /// `alpha_i * y_i` can still shrink.
    fn in_low(&self, i: usize) -> bool {
        if self.y[i] > 0.0 {
            self.alpha[i] > 0.0
        } else {
            self.alpha[i] < self.c
        }
    }

    /// Picks the working pair: `i` maximizes the KKT violation `-F_i` over
    /// indices that can move up, `j` maximizes the second-order gain of a
    /// step with `i` among indices that can move down. `None` when no pair
    /// violates by more than `2 * tol`, where `F = E - b`.
    fn select_pair(&self) -> Option<(usize, usize)> {
        let n = self.n();
        let score = |t: usize| -(self.errors[t] - self.b);
        let i = (0..n)
            .filter(|&t| self.in_up(t))
            .max_by(|&a, &b| score(a).total_cmp(&score(b)))?;
        let m = score(i);
        let low_min = (0..n)
            .filter(|&t| self.in_low(t))
            .map(score)
            .fold(f64::INFINITY, f64::min);
        if m - low_min <= 2.0 * self.tol {
            return None;
        }
        let kii = self.gram.get(i, i);
        let j = (0..n)
            .filter(|&t| t != i && self.in_low(t) && score(t) < m)
            .map(|t| {
                let diff = m - score(t);
                let curv = kii + self.gram.get(t, t) - 2.0 * self.gram.get(i, t);
                (t, -diff * diff / curv.max(TAU))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))?
            .0;
        Some((i, j))
    }

    /// Interval of thresholds `b` under which every KKT condition holds to
    /// within `tol`, given the current alphas. Empty when `lo > hi`.
    fn threshold_interval(&self) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for i in 0..self.n() {
            let score = -(self.errors[i] - self.b);
            if self.in_up(i) {
                lo = lo.max(score - self.tol);
            }
            if self.in_low(i) {
                hi = hi.min(score + self.tol);
            }
        }
        (lo, hi)
    }

    fn shift_threshold(&mut self, b_new: f64) {
        let db = b_new - self.b;
        self.b = b_new;
        for e in &mut self.errors {
            *e += db;
        }
    }

    /// Runs pair updates until no pair violates the KKT conditions by more
    /// than `2 * tol`, then places `b` inside the KKT-feasible interval.
    /// The budget is `max_passes * n` pair updates.
    /// Returns `(passes, converged)`.
    fn run(&mut self, max_passes: usize) -> (usize, bool) {
        let n = self.n();
        let budget = max_passes.saturating_mul(n);
        let converged = loop {
            let start = self.updates;
            while self.updates < budget {
                match self.select_pair() {
                    Some((i, j)) if self.take_step(j, i) => {}
                    _ => break,
                }
            }
            // clear drift in the incremental error cache before the final check
            self.refresh_errors();
            let (lo, hi) = self.threshold_interval();
            if lo <= hi {
                self.shift_threshold(self.b.clamp(lo, hi));
                break true;
            }
            if self.updates == start || self.updates >= budget {
                break false;
            }
        };
        (self.updates.div_ceil(n), converged)
    }
}

/// Maximizes the kernelized dual by SMO pair updates.
///
/// The returned alphas are always feasible. `converged` is false when the
/// update budget ran out or some KKT violation could not be removed.
pub fn solve_dual(ts: &TrainingSet, kernel: Kernel, params: &SolverParams) -> Result<DualSolution> {
    params.validate()?;
    kernel.validate()?;
    let gram = gram_matrix(&kernel, ts.points())?;
    let y: Vec<f64> = ts.labels().iter().map(|l| l.sign()).collect();

    let mut smo = Smo::new(&gram, y, params);
    let (passes, converged) = smo.run(params.max_passes);
    let objective_value = dual_objective(&gram, &smo.y, &smo.alpha);

    let mut sol = DualSolution {
        alphas: smo.alpha,
        bias: 0.0,
        objective_value,
        kernel,
        c_bound: params.c_bound,
        iterations: smo.updates,
        passes,
        converged,
        objective_trace: smo.trace.unwrap_or_default(),
    };
    sol.bias = compute_bias(&sol, ts);
    Ok(sol)
}

/// Threshold `b` of the decision function.
///
/// With margin support vectors (`1e-8 < a_i < C - 1e-8`) this is the mean of
/// `y_i - f0(x_i)` over them, where `f0` is the bias-free decision value.
/// Otherwise it is the midpoint `-(max_{y=-1} f0 + min_{y=+1} f0) / 2`.
pub fn compute_bias(sol: &DualSolution, ts: &TrainingSet) -> f64 {
    let f0: Vec<f64> = ts
        .points()
        .iter()
        .map(|p| {
            sol.decision_without_bias(ts, p)
                .expect("training points share the set's dimension")
        })
        .collect();
    let upper = sol.c_bound - ALPHA_ZERO_TOL;
    let margin: Vec<f64> = sol
        .alphas
        .iter()
        .zip(ts.labels())
        .zip(&f0)
        .filter(|((&a, _), _)| a > ALPHA_ZERO_TOL && a < upper)
        .map(|((_, y), f)| y.sign() - f)
        .collect();
    if !margin.is_empty() {
        return margin.iter().sum::<f64>() / margin.len() as f64;
    }
    let mut max_neg = f64::NEG_INFINITY;
    let mut min_pos = f64::INFINITY;
    for (y, &f) in ts.labels().iter().zip(&f0) {
        match y {
            Label::Negative => max_neg = max_neg.max(f),
            Label::Positive => min_pos = min_pos.min(f),
        }
    }
    -(max_neg + min_pos) / 2.0
}

/// Geometric margin `2 / |w|` with `w = sum_i a_i y_i x_i`; linear kernel only.
pub fn linear_margin(sol: &DualSolution, ts: &TrainingSet) -> Result<f64> {
    if sol.kernel != Kernel::Linear {
        return Err(Error::UnsupportedKernel);
    }
    let mut w = vec![0.0; ts.dimension()];
    for ((p, y), a) in ts.points().iter().zip(ts.labels()).zip(&sol.alphas) {
        for (wk, xk) in w.iter_mut().zip(p) {
            *wk += a * y.sign() * xk;
        }
    }
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(2.0 / norm)
}
