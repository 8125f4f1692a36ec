//! Versioned, line-based model files.
//!
//! ```text
//! hrvsvm-model v1
//! task stress 2
//! features sdev_hr sdev_nn
//! kernel gaussian 1
//! c_bound 1000
//! kkt_tol 0.001
//! ectopic_filter off
//! bias -0.25
//! normalizer 2
//! <mean> <std>
//! <mean> <std>
//! support_vectors 3
//! <alpha> <y> <x1> <x2>
//! ...
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a saved
//! model reloads bit for bit.

use std::str::FromStr;

use super::{Task, TaskKind, TrainedModel};
use crate::error::{Error, Result};
use crate::normalize::Normalizer;
use crate::svm::{Kernel, Label, Model};

pub const MODEL_HEADER: &str = "hrvsvm-model v1";
const MODEL_MAGIC: &str = "hrvsvm-model";

pub fn save_model(m: &TrainedModel) -> String {
    let model = &m.model;
    let mut out = String::new();
    out.push_str(MODEL_HEADER);
    out.push('\n');
    out.push_str(&format!(
        "task {} {}\n",
        m.task.kind, m.task.positive_threshold
    ));
    let [f1, f2] = m.task.feature_keys();
    out.push_str(&format!("features {f1} {f2}\n"));
    out.push_str(&format!("kernel {}\n", model.kernel()));
    out.push_str(&format!("c_bound {}\n", m.c_bound));
    out.push_str(&format!("kkt_tol {}\n", m.kkt_tol));
    match m.ectopic_filter {
        Some(tol) => out.push_str(&format!("ectopic_filter {tol}\n")),
        None => out.push_str("ectopic_filter off\n"),
    }
    out.push_str(&format!("bias {}\n", model.bias()));
    match model.normalizer() {
        Some(n) => {
            out.push_str(&format!("normalizer {}\n", n.dimension()));
            for (mean, std) in n.params() {
                out.push_str(&format!("{mean} {std}\n"));
            }
        }
        None => out.push_str("normalizer 0\n"),
    }
    out.push_str(&format!("support_vectors {}\n", model.support_count()));
    for ((p, y), a) in model
        .support_points()
        .iter()
        .zip(model.support_labels())
        .zip(model.support_alphas())
    {
        out.push_str(&format!("{a} {}", y.as_i8()));
        for v in p {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::ModelFormat {
            line: self.last,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        loop {
            match self.inner.next() {
                Some((i, l)) => {
                    self.last = i + 1;
                    let l = l.trim();
                    if !l.is_empty() {
                        return Ok(l);
                    }
                }
                None => {
                    self.last += 1;
                    return Err(self.err("unexpected end of model file"));
                }
            }
        }
    }

    /// Next line as `key value...`; returns the value part.
    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(char::is_whitespace) {
            Some((k, rest)) if k == key => Ok(rest.trim()),
            _ => Err(self.err(format!("expected `{key} ...`, found {line:?}"))),
        }
    }

    fn number<T: FromStr>(&self, token: &str) -> Result<T> {
        token
            .parse::<T>()
            .map_err(|_| self.err(format!("bad number {token:?}")))
    }

    fn finite(&self, token: &str) -> Result<f64> {
        let v: f64 = self.number(token)?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite number {token:?}")));
        }
        Ok(v)
    }

    fn floats(&self, line: &str, expected: usize) -> Result<Vec<f64>> {
        let values = line
            .split_whitespace()
            .map(|t| self.finite(t))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != expected {
            return Err(self.err(format!(
                "expected {expected} numbers, found {}",
                values.len()
            )));
        }
        Ok(values)
    }

    /// Like [`Lines::field`] but requires a single token value.
    fn scalar(&mut self, key: &str) -> Result<&'a str> {
        let v = self.field(key)?;
        if v.split_whitespace().count() != 1 {
            return Err(self.err(format!("`{key}` takes exactly one value")));
        }
        Ok(v)
    }

    fn scalar_f64(&mut self, key: &str) -> Result<f64> {
        let tok = self.scalar(key)?;
        self.finite(tok)
    }

    fn scalar_usize(&mut self, key: &str) -> Result<usize> {
        let tok = self.scalar(key)?;
        self.number(tok)
    }
}

pub fn load_model(text: &str) -> Result<TrainedModel> {
    let mut lines = Lines::new(text);
    let header = lines.next_line()?;
    if header != MODEL_HEADER {
        if header.starts_with(MODEL_MAGIC) {
            return Err(Error::ModelVersion(header.to_string()));
        }
        return Err(lines.err("not an hrvsvm model file"));
    }

    let task_field = lines.field("task")?;
    let task = match task_field.split_whitespace().collect::<Vec<_>>().as_slice() {
        [kind, threshold] => {
            let kind = kind.parse::<TaskKind>().map_err(|e| lines.err(e))?;
            let threshold: u8 = lines.number(threshold)?;
            if !(1..=10).contains(&threshold) {
                return Err(lines.err(format!("threshold {threshold} outside 1..=10")));
            }
            Task::with_threshold(kind, threshold)
        }
        _ => return Err(lines.err("expected `task <kind> <threshold>`")),
    };

    let features = lines.field("features")?;
    let [f1, f2] = task.feature_keys();
    if features != format!("{f1} {f2}") {
        return Err(lines.err(format!(
            "features {features:?} do not match task {}",
            task.kind
        )));
    }

    let kernel = lines
        .field("kernel")?
        .parse::<Kernel>()
        .map_err(|e| lines.err(e.to_string()))?;

    let c_bound = lines.scalar_f64("c_bound")?;
    if c_bound <= 0.0 {
        return Err(lines.err("c_bound must be > 0"));
    }
    let kkt_tol = lines.scalar_f64("kkt_tol")?;
    if kkt_tol <= 0.0 {
        return Err(lines.err("kkt_tol must be > 0"));
    }
    let ectopic_filter = match lines.field("ectopic_filter")? {
        "off" => None,
        tok => {
            let tol = lines.finite(tok)?;
            if !(tol > 0.0 && tol < 1.0) {
                return Err(lines.err("ectopic tolerance must be in (0, 1)"));
            }
            Some(tol)
        }
    };
    let bias = lines.scalar_f64("bias")?;

    let dim = 2;
    let norm_rows: usize = lines.scalar_usize("normalizer")?;
    let normalizer = match norm_rows {
        0 => None,
        n if n == dim => {
            let mut params = Vec::with_capacity(n);
            for _ in 0..n {
                let line = lines.next_line()?;
                let v = lines.floats(line, 2)?;
                if v[1] <= 0.0 {
                    return Err(lines.err("normalizer std must be > 0"));
                }
                params.push((v[0], v[1]));
            }
            Some(Normalizer::new(params).map_err(|e| lines.err(e.to_string()))?)
        }
        n => return Err(lines.err(format!("normalizer must have 0 or {dim} rows, found {n}"))),
    };

    let count: usize = lines.scalar_usize("support_vectors")?;
    if count == 0 {
        return Err(lines.err("model has no support vectors"));
    }
    let mut points = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    let mut alphas = Vec::with_capacity(count);
    for _ in 0..count {
        let line = lines.next_line()?;
        let v = lines.floats(line, 2 + dim)?;
        if v[0] <= 0.0 {
            return Err(lines.err(format!("alpha {} must be > 0", v[0])));
        }
        let label = Label::from_sign(v[1])
            .ok_or_else(|| lines.err(format!("label {} must be 1 or -1", v[1])))?;
        alphas.push(v[0]);
        labels.push(label);
        points.push(v[2..].to_vec());
    }
    if let Ok(extra) = lines.next_line() {
        return Err(lines.err(format!("unexpected trailing content {extra:?}")));
    }

    let model = Model::new(points, labels, alphas, bias, kernel, normalizer)
        .map_err(|e| lines.err(e.to_string()))?;
    Ok(TrainedModel {
        task,
        model,
        c_bound,
        kkt_tol,
        ectopic_filter,
    })
}
