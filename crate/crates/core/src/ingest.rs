//! Parsing of recorded signals and session manifests.
//!
//! Three plain-text formats are understood:
//!
//! * RR files: one interval in milliseconds per line. Blank lines and lines
//!   starting with `#` are ignored.
//! * HR files: CSV with the header `t_ms,hr_bpm`.
//! * Session manifests: CSV with the header in [`MANIFEST_HEADER`].
//!
//! LF and CRLF line endings are both accepted. Every error that points at a
//! specific line carries its 1-based line number.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::ibi_from_hr;

pub const HR_HEADER: &str = "t_ms,hr_bpm";
pub const MANIFEST_HEADER: &str =
    "session_id,signal_path,signal_kind,stress_level,flu_level,sleep_hours,temperature_c,systole,diastole";

/// Ordered inter-beat (RR/NN/IBI) intervals in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct RrSeries {
    intervals: Vec<f64>,
    start_offset_ms: f64,
    ectopic_filtered: bool,
}

impl RrSeries {
    /// Builds a series starting at time 0. Every interval must be finite and > 0.
    pub fn new(intervals: Vec<f64>) -> Result<Self> {
        Self::with_offset(intervals, 0.0)
    }

    pub fn with_offset(intervals: Vec<f64>, start_offset_ms: f64) -> Result<Self> {
        if !start_offset_ms.is_finite() {
            return Err(Error::Domain {
                line: 0,
                message: format!("start offset {start_offset_ms} is not finite"),
            });
        }
        if let Some((idx, v)) = intervals
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::Domain {
                line: idx + 1,
                message: format!("interval {v} ms must be finite and > 0"),
            });
        }
        Ok(Self {
            intervals,
            start_offset_ms,
            ectopic_filtered: false,
        })
    }

    pub(crate) fn filtered_from(intervals: Vec<f64>, start_offset_ms: f64) -> Self {
        Self {
            intervals,
            start_offset_ms,
            ectopic_filtered: true,
        }
    }

    pub fn intervals(&self) -> &[f64] {
        &self.intervals
    }

    pub fn start_offset_ms(&self) -> f64 {
        self.start_offset_ms
    }

    /// True when intervals were removed by the ectopic filter. Cumulative times
    /// of such a series no longer line up with the original recording.
    pub fn is_ectopic_filtered(&self) -> bool {
        self.ectopic_filtered
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// End time of every interval: `start_offset_ms + sum(intervals[..=k])`.
    pub fn cumulative_times(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .scan(self.start_offset_ms, |acc, rr| {
                *acc += rr;
                Some(*acc)
            })
            .collect()
    }

    /// Serializes in the RR file format accepted by [`parse_rr_file`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.intervals {
            out.push_str(&format!("{v}\n"));
        }
        out
    }
}

/// Heart-rate samples `(t_ms, hr_bpm)` with strictly increasing time.
#[derive(Debug, Clone, PartialEq)]
pub struct HrSeries {
    samples: Vec<(f64, f64)>,
}

impl HrSeries {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        for (idx, &(t, hr)) in samples.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::Domain {
                    line: idx + 1,
                    message: format!("t_ms {t} is not finite"),
                });
            }
            if !(hr.is_finite() && hr > 0.0) {
                return Err(Error::Domain {
                    line: idx + 1,
                    message: format!("hr_bpm {hr} must be finite and > 0"),
                });
            }
            if idx > 0 && t <= samples[idx - 1].0 {
                return Err(Error::NonIncreasing {
                    line: idx + 1,
                    t_ms: t,
                });
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{HR_HEADER}\n");
        for (t, hr) in &self.samples {
            out.push_str(&format!("{t},{hr}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalKind {
    Rr,
    Hr,
}

impl SignalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::Rr => "rr",
            SignalKind::Hr => "hr",
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "rr" => Ok(SignalKind::Rr),
            "hr" => Ok(SignalKind::Hr),
            other => Err(format!("unknown signal kind {other:?}")),
        }
    }
}

/// One recording session and its self-reported metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub session_id: String,
    pub signal_path: String,
    pub signal_kind: SignalKind,
    pub stress_level: u8,
    pub flu_level: u8,
    pub sleep_hours: Option<f64>,
    pub temperature_c: Option<f64>,
    pub systole: Option<i32>,
    pub diastole: Option<i32>,
}

impl SessionRecord {
    /// Location of the signal file; relative paths are taken relative to `base_dir`.
    pub fn resolve_signal(&self, base_dir: &Path) -> PathBuf {
        let p = Path::new(&self.signal_path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base_dir.join(p)
        }
    }

    pub fn load_signal(&self, base_dir: &Path) -> Result<RrSeries> {
        read_signal(&self.resolve_signal(base_dir), self.signal_kind)
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()))
}

fn parse_f64(line: usize, token: &str) -> Result<f64> {
    token.parse::<f64>().map_err(|_| Error::Parse {
        line,
        token: token.to_string(),
    })
}

pub fn parse_rr_file(text: &str) -> Result<RrSeries> {
    let mut intervals = Vec::new();
    for (line, content) in data_lines(text) {
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let v = parse_f64(line, content)?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain {
                line,
                message: format!("RR interval {v} ms must be finite and > 0"),
            });
        }
        intervals.push(v);
    }
    if intervals.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(RrSeries {
        intervals,
        start_offset_ms: 0.0,
        ectopic_filtered: false,
    })
}

pub fn parse_hr_file(text: &str) -> Result<HrSeries> {
    let mut lines = data_lines(text);
    match lines.next() {
        Some((_, HR_HEADER)) => {}
        Some((line, other)) => {
            return Err(Error::Format {
                line,
                message: format!("expected header {HR_HEADER:?}, found {other:?}"),
            })
        }
        None => {
            return Err(Error::Format {
                line: 1,
                message: format!("missing header {HR_HEADER:?}"),
            })
        }
    }

    let mut samples: Vec<(f64, f64)> = Vec::new();
    for (line, content) in lines {
        if content.is_empty() {
            continue;
        }
        let cells: Vec<&str> = content.split(',').map(str::trim).collect();
        if cells.len() != 2 {
            return Err(Error::Format {
                line,
                message: format!("expected 2 columns, found {}", cells.len()),
            });
        }
        let t = parse_f64(line, cells[0])?;
        let hr = parse_f64(line, cells[1])?;
        if !t.is_finite() {
            return Err(Error::Domain {
                line,
                message: format!("t_ms {t} is not finite"),
            });
        }
        if !(hr.is_finite() && hr > 0.0) {
            return Err(Error::Domain {
                line,
                message: format!("hr_bpm {hr} must be finite and > 0"),
            });
        }
        if let Some(&(prev, _)) = samples.last() {
            if t <= prev {
                return Err(Error::NonIncreasing { line, t_ms: t });
            }
        }
        samples.push((t, hr));
    }
    Ok(HrSeries { samples })
}

fn parse_level(line: usize, field: &'static str, cell: &str) -> Result<u8> {
    let v = cell.parse::<i64>().map_err(|_| Error::Parse {
        line,
        token: cell.to_string(),
    })?;
    if !(1..=10).contains(&v) {
        return Err(Error::LevelOutOfRange {
            line,
            field,
            value: v,
        });
    }
    Ok(v as u8)
}

fn parse_optional<T: FromStr>(line: usize, cell: &str) -> Result<Option<T>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<T>().map(Some).map_err(|_| Error::Parse {
        line,
        token: cell.to_string(),
    })
}

pub fn parse_session_manifest(text: &str) -> Result<Vec<SessionRecord>> {
    let mut lines = data_lines(text);
    match lines.next() {
        Some((_, MANIFEST_HEADER)) => {}
        Some((line, other)) => {
            return Err(Error::Format {
                line,
                message: format!("expected manifest header, found {other:?}"),
            })
        }
        None => {
            return Err(Error::Format {
                line: 1,
                message: "missing manifest header".into(),
            })
        }
    }

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (line, content) in lines {
        if content.is_empty() {
            continue;
        }
        let cells: Vec<&str> = content.split(',').map(str::trim).collect();
        if cells.len() != 9 {
            return Err(Error::Format {
                line,
                message: format!("expected 9 columns, found {}", cells.len()),
            });
        }
        if cells[0].is_empty() {
            return Err(Error::Format {
                line,
                message: "empty session_id".into(),
            });
        }
        if cells[1].is_empty() {
            return Err(Error::Format {
                line,
                message: "empty signal_path".into(),
            });
        }
        let signal_kind = cells[2]
            .parse::<SignalKind>()
            .map_err(|_| Error::UnknownSignalKind {
                line,
                kind: cells[2].to_string(),
            })?;
        let stress_level = parse_level(line, "stress_level", cells[3])?;
        let flu_level = parse_level(line, "flu_level", cells[4])?;
        let sleep_hours = parse_optional::<f64>(line, cells[5])?;
        if let Some(h) = sleep_hours {
            if !(h.is_finite() && h >= 0.0) {
                return Err(Error::Domain {
                    line,
                    message: format!("sleep_hours {h} must be finite and >= 0"),
                });
            }
        }
        let temperature_c = parse_optional::<f64>(line, cells[6])?;
        if let Some(t) = temperature_c {
            if !t.is_finite() {
                return Err(Error::Domain {
                    line,
                    message: format!("temperature_c {t} is not finite"),
                });
            }
        }
        let systole = parse_optional::<i32>(line, cells[7])?;
        let diastole = parse_optional::<i32>(line, cells[8])?;

        if !seen.insert(cells[0].to_string()) {
            return Err(Error::DuplicateSession {
                line,
                id: cells[0].to_string(),
            });
        }
        records.push(SessionRecord {
            session_id: cells[0].to_string(),
            signal_path: cells[1].to_string(),
            signal_kind,
            stress_level,
            flu_level,
            sleep_hours,
            temperature_c,
            systole,
            diastole,
        });
    }
    Ok(records)
}

pub fn manifest_to_text(records: &[SessionRecord]) -> String {
    fn opt<T: fmt::Display>(v: &Option<T>) -> String {
        v.as_ref().map(|x| x.to_string()).unwrap_or_default()
    }
    let mut out = format!("{MANIFEST_HEADER}\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.session_id,
            r.signal_path,
            r.signal_kind,
            r.stress_level,
            r.flu_level,
            opt(&r.sleep_hours),
            opt(&r.temperature_c),
            opt(&r.systole),
            opt(&r.diastole),
        ));
    }
    out
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads a signal file and returns it as an RR series. HR files are converted
/// sample by sample with `60000 / hr_bpm`.
pub fn read_signal(path: &Path, kind: SignalKind) -> Result<RrSeries> {
    let text = read_text(path)?;
    let wrap = |e: Error| Error::Signal {
        path: path.to_path_buf(),
        source: Box::new(e),
    };
    match kind {
        SignalKind::Rr => parse_rr_file(&text).map_err(wrap),
        SignalKind::Hr => parse_hr_file(&text)
            .and_then(|hr| ibi_from_hr(&hr))
            .map_err(wrap),
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<SessionRecord>> {
    let text = read_text(path)?;
    parse_session_manifest(&text)
}
