//! Heart-rate-variability features and a kernel support vector machine for
//! classifying recording sessions as stress/non-stress and
//! influenza/non-influenza.
//!
//! The crate is organized bottom-up:
//!
//! - [`ingest`] parses RR-interval files, heart-rate files and session manifests;
//! - [`metrics`] converts between HR and RR and computes time-domain HRV metrics;
//! - [`svm`] holds kernels, the SMO dual solver and the decision function;
//! - [`pipeline`] ties them together per task and reads/writes model files.

pub mod error;
pub mod ingest;
pub mod metrics;
pub mod normalize;
pub mod pipeline;
pub mod svm;

pub use error::{Error, Result};
pub use ingest::{HrSeries, RrSeries, SessionRecord, SignalKind};
pub use metrics::{compute_metrics, HrvMetrics, MetricKey};
pub use normalize::Normalizer;
pub use pipeline::{
    evaluate, load_model, save_model, train, EvaluationReport, Task, TaskKind, TrainConfig,
    TrainedModel,
};
pub use svm::{Kernel, Label, Model, TrainingSet};
