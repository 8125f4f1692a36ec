//! `hrvsvm`: HRV feature extraction and SVM stress/influenza classification.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hrvsvm::ingest::{read_manifest, read_signal, read_text, SignalKind};
use hrvsvm::metrics::{compute_metrics, filter_ectopic, DEFAULT_NNX_THRESHOLD_MS};
use hrvsvm::pipeline::{
    evaluate, extract_features, load_model, save_model, train, Task, TaskKind, TrainConfig,
};
use hrvsvm::svm::Kernel;

#[derive(Parser)]
#[command(
    name = "hrvsvm",
    version,
    about = "HRV features and SVM stress/influenza classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print time-domain HRV metrics of one signal file
    Features {
        #[arg(long, value_enum)]
        kind: KindArg,
        path: PathBuf,
    },
    /// Train a classifier from a session manifest
    Train {
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
        kernel: KernelArg,
        /// Gaussian kernel width
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true, value_parser = positive)]
        sigma: f64,
        /// Polynomial kernel degree
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
        degree: u32,
        /// Polynomial kernel offset
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true, value_parser = non_negative)]
        coef0: f64,
        /// Box bound C
        #[arg(long = "c", default_value_t = 1000.0, allow_hyphen_values = true, value_parser = positive)]
        c_bound: f64,
        /// KKT tolerance
        #[arg(long, default_value_t = 1e-3, allow_hyphen_values = true, value_parser = positive)]
        tol: f64,
        /// Train on raw features instead of z-scores
        #[arg(long)]
        no_normalize: bool,
        /// Drop ectopic intervals before computing metrics
        #[arg(long)]
        ectopic_filter: bool,
    },
    /// Classify one signal file with a trained model
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        path: PathBuf,
    },
    /// Evaluate a model on a session manifest and write a CSV report
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Rr,
    Hr,
}

impl From<KindArg> for SignalKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Rr => SignalKind::Rr,
            KindArg::Hr => SignalKind::Hr,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Stress,
    Influenza,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Stress => Task::new(TaskKind::Stress),
            TaskArg::Influenza => Task::new(TaskKind::Influenza),
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum KernelArg {
    Gaussian,
    Linear,
    Polynomial,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("expected a non-negative number, got {s:?}")),
    }
}

fn base_dir(manifest: &Path) -> &Path {
    manifest.parent().unwrap_or_else(|| Path::new("."))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn load_trained(path: &Path) -> Result<hrvsvm::TrainedModel> {
    let text = read_text(path)?;
    load_model(&text).with_context(|| format!("{}: invalid model", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Features { kind, path } => {
            let rr = read_signal(&path, kind.into())?;
            let metrics = compute_metrics(&rr, DEFAULT_NNX_THRESHOLD_MS)
                .with_context(|| path.display().to_string())?;
            print!("{}", metrics.to_key_value());
        }
        Command::Train {
            task,
            manifest,
            out,
            kernel,
            sigma,
            degree,
            coef0,
            c_bound,
            tol,
            no_normalize,
            ectopic_filter,
        } => {
            let kernel = match kernel {
                KernelArg::Gaussian => Kernel::gaussian(sigma)?,
                KernelArg::Linear => Kernel::Linear,
                KernelArg::Polynomial => Kernel::polynomial(degree, coef0)?,
            };
            let config = TrainConfig {
                kernel,
                c_bound,
                kkt_tol: tol,
                normalize: !no_normalize,
                ..TrainConfig::default()
            }
            .with_ectopic_filter(ectopic_filter);
            let sessions = read_manifest(&manifest)
                .with_context(|| format!("{}: invalid manifest", manifest.display()))?;
            let outcome = train(&sessions, base_dir(&manifest), &task.into(), &config)?;
            write_file(&out, &save_model(&outcome.trained))?;
            if !outcome.converged {
                eprintln!(
                    "warning: solver stopped before meeting the KKT tolerance after {} updates; the model is feasible but may be suboptimal",
                    outcome.iterations
                );
            }
            println!("support_vectors={}", outcome.trained.model.support_count());
            println!("converged={}", outcome.converged);
            println!("training_accuracy={:.3}", outcome.training_report.accuracy);
        }
        Command::Classify { model, kind, path } => {
            let trained = load_trained(&model)?;
            let rr = read_signal(&path, kind.into())?;
            let rr = match trained.ectopic_filter {
                Some(tol) => filter_ectopic(&rr, tol)?,
                None => rr,
            };
            let metrics = compute_metrics(&rr, DEFAULT_NNX_THRESHOLD_MS)
                .with_context(|| path.display().to_string())?;
            let id = path.display().to_string();
            let features = extract_features(&trained.task, &metrics, &id)?;
            let decision = trained.decision_value(&features.values)?;
            let label = hrvsvm::Label::from_decision(decision);
            println!(
                "label={label} decision={decision} verdict={}",
                trained.verdict(label)
            );
        }
        Command::Evaluate {
            model,
            task,
            manifest,
            out,
        } => {
            let trained = load_trained(&model)?;
            let sessions = read_manifest(&manifest)
                .with_context(|| format!("{}: invalid manifest", manifest.display()))?;
            if sessions.is_empty() {
                bail!("{}: manifest lists no sessions", manifest.display());
            }
            let report = evaluate(&trained, &sessions, base_dir(&manifest), &task.into())?;
            write_file(&out, &report.to_csv())?;
            println!("accuracy={}/{}", report.correct_count, report.total_count);
        }
    }
    Ok(())
}

/// Joins the error chain, skipping causes the outer message already shows.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.ends_with(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}
