//! Session-level classification: labeling, feature extraction, training and
//! self-test evaluation for the stress and influenza tasks.

mod model_io;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::SessionRecord;
use crate::metrics::{
    compute_metrics, filter_ectopic, HrvMetrics, MetricKey, DEFAULT_ECTOPIC_TOLERANCE,
    DEFAULT_NNX_THRESHOLD_MS,
};
use crate::normalize::Normalizer;
use crate::svm::{solve_dual, Kernel, Label, Model, SolverParams, TrainingSet};

pub use model_io::{load_model, save_model, MODEL_HEADER};

pub const CSV_HEADER: &str = "session_id,level,true_label,decision_value,predicted_label,correct";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Stress,
    Influenza,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Stress => "stress",
            TaskKind::Influenza => "influenza",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "stress" => Ok(TaskKind::Stress),
            "influenza" => Ok(TaskKind::Influenza),
            other => Err(format!("unknown task {other:?}")),
        }
    }
}

/// A binary task: which self-reported level drives the label, the level
/// above which a session is positive, and the two features used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Task {
    pub kind: TaskKind,
    pub positive_threshold: u8,
}

impl Task {
    pub const STRESS_THRESHOLD: u8 = 2;
    pub const INFLUENZA_THRESHOLD: u8 = 1;

    pub fn stress() -> Self {
        Self::new(TaskKind::Stress)
    }

    pub fn influenza() -> Self {
        Self::new(TaskKind::Influenza)
    }

    pub fn new(kind: TaskKind) -> Self {
        let positive_threshold = match kind {
            TaskKind::Stress => Self::STRESS_THRESHOLD,
            TaskKind::Influenza => Self::INFLUENZA_THRESHOLD,
        };
        Self {
            kind,
            positive_threshold,
        }
    }

    pub fn with_threshold(kind: TaskKind, positive_threshold: u8) -> Self {
        Self {
            kind,
            positive_threshold,
        }
    }

    /// Stress: (SDevHR, SDevNN). Influenza: (mean HR, mean RR).
    pub fn feature_keys(&self) -> [MetricKey; 2] {
        match self.kind {
            TaskKind::Stress => [MetricKey::SdevHr, MetricKey::SdevNn],
            TaskKind::Influenza => [MetricKey::MeanHr, MetricKey::MeanRr],
        }
    }

    /// Word printed for a positive verdict.
    pub fn positive_name(&self) -> &'static str {
        self.kind.as_str()
    }

    pub fn level_of(&self, session: &SessionRecord) -> u8 {
        match self.kind {
            TaskKind::Stress => session.stress_level,
            TaskKind::Influenza => session.flu_level,
        }
    }

    pub fn label_for(&self, level: u8) -> Result<Label> {
        if !(1..=10).contains(&level) {
            return Err(Error::InvalidLevel(level));
        }
        Ok(if level > self.positive_threshold {
            Label::Positive
        } else {
            Label::Negative
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub session_id: String,
    pub values: [f64; 2],
}

pub fn extract_features(
    task: &Task,
    metrics: &HrvMetrics,
    session_id: &str,
) -> Result<FeatureVector> {
    let mut values = [0.0; 2];
    for (slot, key) in values.iter_mut().zip(task.feature_keys()) {
        match metrics.get(key) {
            Some(v) if v.is_finite() => *slot = v,
            _ => {
                return Err(Error::NonFiniteFeature {
                    session: session_id.to_string(),
                    metric: key.as_str(),
                })
            }
        }
    }
    Ok(FeatureVector {
        session_id: session_id.to_string(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub kernel: Kernel,
    pub c_bound: f64,
    pub kkt_tol: f64,
    pub max_passes: usize,
    pub normalize: bool,
    /// Tolerance fraction of the ectopic filter; `None` disables filtering.
    pub ectopic_filter: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let solver = SolverParams::default();
        Self {
            kernel: Kernel::default(),
            c_bound: solver.c_bound,
            kkt_tol: solver.kkt_tol,
            max_passes: solver.max_passes,
            normalize: true,
            ectopic_filter: None,
        }
    }
}

impl TrainConfig {
    pub fn with_ectopic_filter(mut self, on: bool) -> Self {
        self.ectopic_filter = on.then_some(DEFAULT_ECTOPIC_TOLERANCE);
        self
    }
}

/// A task-specific classifier together with the settings needed to apply it
/// to new sessions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub task: Task,
    pub model: Model,
    pub c_bound: f64,
    pub kkt_tol: f64,
    pub ectopic_filter: Option<f64>,
}

impl TrainedModel {
    pub fn decision_value(&self, features: &[f64; 2]) -> Result<f64> {
        self.model.decision_value(features)
    }

    pub fn classify(&self, features: &[f64; 2]) -> Result<Label> {
        self.model.classify(features)
    }

    pub fn verdict(&self, label: Label) -> &'static str {
        match label {
            Label::Positive => self.task.positive_name(),
            Label::Negative => "healthy",
        }
    }

    /// RR series of a session → metrics → features, with this model's filter.
    pub fn session_features(
        &self,
        session: &SessionRecord,
        base_dir: &Path,
    ) -> Result<FeatureVector> {
        session_features(session, base_dir, &self.task, self.ectopic_filter)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub trained: TrainedModel,
    pub converged: bool,
    pub iterations: usize,
    pub training_report: EvaluationReport,
}

pub fn session_features(
    session: &SessionRecord,
    base_dir: &Path,
    task: &Task,
    ectopic_filter: Option<f64>,
) -> Result<FeatureVector> {
    let rr = session.load_signal(base_dir)?;
    let rr = match ectopic_filter {
        Some(tol) => filter_ectopic(&rr, tol)?,
        None => rr,
    };
    let signal_err = |e: Error| Error::Signal {
        path: session.resolve_signal(base_dir),
        source: Box::new(e),
    };
    let metrics = compute_metrics(&rr, DEFAULT_NNX_THRESHOLD_MS).map_err(signal_err)?;
    extract_features(task, &metrics, &session.session_id)
}

/// Trains on precomputed features. `levels` are the raw self-reported levels
/// aligned with `features`.
pub fn train_on_features(
    features: &[FeatureVector],
    levels: &[u8],
    task: &Task,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if features.len() != levels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            got: levels.len(),
        });
    }
    if features.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: features.len(),
        });
    }
    let labels = levels
        .iter()
        .map(|&l| task.label_for(l))
        .collect::<Result<Vec<_>>>()?;
    if !(labels.contains(&Label::Positive) && labels.contains(&Label::Negative)) {
        return Err(Error::SingleClass);
    }

    let raw: Vec<Vec<f64>> = features.iter().map(|f| f.values.to_vec()).collect();
    let normalizer = if config.normalize {
        Some(Normalizer::fit(&raw)?)
    } else {
        None
    };
    let points = match &normalizer {
        Some(n) => raw.iter().map(|p| n.apply(p)).collect(),
        None => raw,
    };

    let ts = TrainingSet::new(points, labels)?;
    let params = SolverParams {
        c_bound: config.c_bound,
        kkt_tol: config.kkt_tol,
        max_passes: config.max_passes,
        record_objective: false,
    };
    let sol = solve_dual(&ts, config.kernel, &params)?;
    let model = Model::from_solution(&sol, &ts, normalizer)?;
    let trained = TrainedModel {
        task: *task,
        model,
        c_bound: config.c_bound,
        kkt_tol: config.kkt_tol,
        ectopic_filter: config.ectopic_filter,
    };
    let training_report = evaluate_features(&trained, features, levels)?;
    Ok(TrainOutcome {
        trained,
        converged: sol.converged,
        iterations: sol.iterations,
        training_report,
    })
}

/// Full pipeline from manifest records. Relative signal paths resolve
/// against `base_dir`.
pub fn train(
    sessions: &[SessionRecord],
    base_dir: &Path,
    task: &Task,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let features = sessions
        .iter()
        .map(|s| session_features(s, base_dir, task, config.ectopic_filter))
        .collect::<Result<Vec<_>>>()?;
    let levels: Vec<u8> = sessions.iter().map(|s| task.level_of(s)).collect();
    train_on_features(&features, &levels, task, config)
}

pub fn evaluate(
    model: &TrainedModel,
    sessions: &[SessionRecord],
    base_dir: &Path,
    task: &Task,
) -> Result<EvaluationReport> {
    if model.task.kind != task.kind {
        return Err(Error::TaskMismatch {
            model: model.task.kind.to_string(),
            requested: task.kind.to_string(),
        });
    }
    let features = sessions
        .iter()
        .map(|s| model.session_features(s, base_dir))
        .collect::<Result<Vec<_>>>()?;
    let levels: Vec<u8> = sessions.iter().map(|s| task.level_of(s)).collect();
    evaluate_features(model, &features, &levels)
}

pub fn evaluate_features(
    model: &TrainedModel,
    features: &[FeatureVector],
    levels: &[u8],
) -> Result<EvaluationReport> {
    if features.len() != levels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            got: levels.len(),
        });
    }
    let mut entries = Vec::with_capacity(features.len());
    for (f, &level) in features.iter().zip(levels) {
        let true_label = model.task.label_for(level)?;
        let value = model.decision_value(&f.values)?;
        entries.push((f.session_id.clone(), level, true_label, value));
    }
    Ok(EvaluationReport::from_decisions(entries))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRow {
    pub session_id: String,
    pub level: u8,
    pub true_label: Label,
    pub decision_value: f64,
    pub predicted_label: Label,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub rows: Vec<EvaluationRow>,
    pub correct_count: usize,
    pub total_count: usize,
    pub accuracy: f64,
}

impl EvaluationReport {
    /// Applies the sign rule to `(session_id, level, true_label, decision_value)`
    /// entries, keeping their order.
    pub fn from_decisions<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (String, u8, Label, f64)>,
    {
        let rows: Vec<EvaluationRow> = entries
            .into_iter()
            .map(|(session_id, level, true_label, decision_value)| {
                let predicted_label = Label::from_decision(decision_value);
                EvaluationRow {
                    session_id,
                    level,
                    true_label,
                    decision_value,
                    predicted_label,
                    correct: predicted_label == true_label,
                }
            })
            .collect();
        let correct_count = rows.iter().filter(|r| r.correct).count();
        let total_count = rows.len();
        let accuracy = if total_count == 0 {
            0.0
        } else {
            correct_count as f64 / total_count as f64
        };
        Self {
            rows,
            correct_count,
            total_count,
            accuracy,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.session_id,
                r.level,
                r.true_label.as_i8(),
                r.decision_value,
                r.predicted_label.as_i8(),
                r.correct
            ));
        }
        out
    }
}

/// Deterministic holdout split: every `test_every`-th item (1-based) goes to
/// the test part. Self-test evaluation on the full set remains the default.
pub fn holdout_split<T: Clone>(items: &[T], test_every: usize) -> (Vec<T>, Vec<T>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, item) in items.iter().enumerate() {
        if test_every > 0 && (i + 1) % test_every == 0 {
            test.push(item.clone());
        } else {
            train.push(item.clone());
        }
    }
    (train, test)
}
