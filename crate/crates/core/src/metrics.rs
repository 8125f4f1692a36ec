//! Time-domain heart-rate-variability metrics.
//!
//! Conventions used throughout:
//! - standard deviations use the sample (N-1) denominator;
//! - RMSSD averages over the N-1 successive differences;
//! - mean HR is the mean of the per-interval instantaneous rate `60000 / RR`;
//! - SDANN uses consecutive 5-minute segments by cumulative time, dropping the
//!   trailing partial segment.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::{HrSeries, RrSeries};

pub const MS_PER_MINUTE: f64 = 60_000.0;
pub const SDANN_SEGMENT_MS: f64 = 300_000.0;
pub const DEFAULT_NNX_THRESHOLD_MS: f64 = 50.0;
pub const DEFAULT_ECTOPIC_TOLERANCE: f64 = 0.2;

/// Half-width of the centered median window used by [`filter_ectopic`].
const ECTOPIC_HALF_WINDOW: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct HrvMetrics {
    pub mean_hr: f64,
    pub mean_rr: f64,
    pub sdev_hr: f64,
    pub sdev_nn: f64,
    pub rmssd: f64,
    pub sdann: Option<f64>,
    pub nnx_count: usize,
    pub pnnx: f64,
    pub x_threshold_ms: f64,
}

/// Names of the scalar metrics that can be used as classifier features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKey {
    MeanHr,
    MeanRr,
    SdevHr,
    SdevNn,
    Rmssd,
    Sdann,
    Nnx,
    Pnnx,
}

impl MetricKey {
    pub const ALL: [MetricKey; 8] = [
        MetricKey::MeanHr,
        MetricKey::MeanRr,
        MetricKey::SdevHr,
        MetricKey::SdevNn,
        MetricKey::Rmssd,
        MetricKey::Sdann,
        MetricKey::Nnx,
        MetricKey::Pnnx,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKey::MeanHr => "mean_hr",
            MetricKey::MeanRr => "mean_rr",
            MetricKey::SdevHr => "sdev_hr",
            MetricKey::SdevNn => "sdev_nn",
            MetricKey::Rmssd => "rmssd",
            MetricKey::Sdann => "sdann",
            MetricKey::Nnx => "nn50",
            MetricKey::Pnnx => "pnn50",
        }
    }
}

impl fmt::Display for MetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKey {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        MetricKey::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

impl HrvMetrics {
    pub fn get(&self, key: MetricKey) -> Option<f64> {
        match key {
            MetricKey::MeanHr => Some(self.mean_hr),
            MetricKey::MeanRr => Some(self.mean_rr),
            MetricKey::SdevHr => Some(self.sdev_hr),
            MetricKey::SdevNn => Some(self.sdev_nn),
            MetricKey::Rmssd => Some(self.rmssd),
            MetricKey::Sdann => self.sdann,
            MetricKey::Nnx => Some(self.nnx_count as f64),
            MetricKey::Pnnx => Some(self.pnnx),
        }
    }

    /// Flat `key=value` lines; `sdann` is omitted when it is absent.
    pub fn to_key_value(&self) -> String {
        MetricKey::ALL
            .into_iter()
            .filter_map(|k| self.get(k).map(|v| format!("{k}={v}\n")))
            .collect()
    }
}

pub fn ibi_from_beats(beat_times: &[f64]) -> Result<RrSeries> {
    if beat_times.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: beat_times.len(),
        });
    }
    if let Some(index) = beat_times
        .windows(2)
        .position(|w| w[1].is_nan() || w[1] <= w[0])
    {
        return Err(Error::BeatsNotIncreasing { index: index + 1 });
    }
    let intervals = beat_times.windows(2).map(|w| w[1] - w[0]).collect();
    RrSeries::with_offset(intervals, beat_times[0])
}

pub fn ibi_from_hr(hr: &HrSeries) -> Result<RrSeries> {
    let samples = hr.samples();
    let first = samples.first().ok_or(Error::EmptySeries)?;
    let intervals = samples.iter().map(|(_, bpm)| MS_PER_MINUTE / bpm).collect();
    RrSeries::with_offset(intervals, first.0)
}

/// Instantaneous heart rate per interval, stamped at the interval's end time.
pub fn hr_from_ibi(rr: &RrSeries) -> Result<HrSeries> {
    if rr.is_empty() {
        return Err(Error::EmptySeries);
    }
    let samples = rr
        .cumulative_times()
        .into_iter()
        .zip(rr.intervals())
        .map(|(t, v)| (t, MS_PER_MINUTE / v))
        .collect();
    HrSeries::new(samples)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn ectopic_pass(values: &[f64], tolerance: f64) -> Vec<f64> {
    let n = values.len();
    let mut window = Vec::with_capacity(2 * ECTOPIC_HALF_WINDOW + 1);
    values
        .iter()
        .enumerate()
        .filter(|&(i, &v)| {
            let lo = i.saturating_sub(ECTOPIC_HALF_WINDOW);
            let hi = (i + ECTOPIC_HALF_WINDOW + 1).min(n);
            window.clear();
            window.extend_from_slice(&values[lo..hi]);
            let med = median(&mut window);
            (v - med).abs() <= tolerance * med
        })
        .map(|(_, &v)| v)
        .collect()
}

/// Removes intervals that deviate from the median of their centered window of
/// up to five intervals by more than `tolerance_fraction` of that median.
///
/// Removal is repeated until no interval is rejected, so the result is a fixed
/// point of the rule. The output is flagged as filtered: its cumulative times
/// no longer match the recording.
pub fn filter_ectopic(rr: &RrSeries, tolerance_fraction: f64) -> Result<RrSeries> {
    if !(tolerance_fraction > 0.0 && tolerance_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "ectopic tolerance {tolerance_fraction} must be in (0, 1)"
        )));
    }
    let mut current = rr.intervals().to_vec();
    loop {
        let next = ectopic_pass(&current, tolerance_fraction);
        if next.len() == current.len() {
            break;
        }
        current = next;
    }
    Ok(RrSeries::filtered_from(current, rr.start_offset_ms()))
}

// Both statistics work on values shifted by the first one, which makes them
// exact for constant input.
fn mean(values: &[f64]) -> f64 {
    let shift = values[0];
    shift + values.iter().map(|v| v - shift).sum::<f64>() / values.len() as f64
}

fn sample_std(values: &[f64]) -> f64 {
    let shift = values[0];
    let shifted: Vec<f64> = values.iter().map(|v| v - shift).collect();
    let m = shifted.iter().sum::<f64>() / shifted.len() as f64;
    let ss: f64 = shifted.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Sample standard deviation of the means of complete 5-minute segments.
fn sdann(rr: &RrSeries) -> Option<f64> {
    let intervals = rr.intervals();
    let total: f64 = intervals.iter().sum();
    let complete = (total / SDANN_SEGMENT_MS).floor() as usize;
    if complete < 2 {
        return None;
    }
    let mut sums = vec![0.0; complete];
    let mut counts = vec![0usize; complete];
    let shift = intervals[0];
    let mut elapsed = 0.0;
    for &v in intervals {
        elapsed += v;
        // An interval belongs to the segment containing its end time; an end
        // time exactly on a boundary closes the earlier segment.
        let seg = ((elapsed / SDANN_SEGMENT_MS).ceil() as usize).saturating_sub(1);
        if seg >= complete {
            break;
        }
        sums[seg] += v - shift;
        counts[seg] += 1;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| shift + s / c as f64)
        .collect();
    (means.len() >= 2).then(|| sample_std(&means))
}

pub fn compute_metrics(rr: &RrSeries, x_threshold_ms: f64) -> Result<HrvMetrics> {
    let intervals = rr.intervals();
    if intervals.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: intervals.len(),
        });
    }
    if !(x_threshold_ms.is_finite() && x_threshold_ms >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "NNx threshold {x_threshold_ms} ms must be finite and >= 0"
        )));
    }

    let hr: Vec<f64> = intervals.iter().map(|v| MS_PER_MINUTE / v).collect();
    let diffs: Vec<f64> = intervals.windows(2).map(|w| w[1] - w[0]).collect();
    let nnx_count = diffs.iter().filter(|d| d.abs() > x_threshold_ms).count();

    Ok(HrvMetrics {
        mean_hr: mean(&hr),
        mean_rr: mean(intervals),
        sdev_hr: sample_std(&hr),
        sdev_nn: sample_std(intervals),
        rmssd: (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt(),
        sdann: sdann(rr),
        nnx_count,
        pnnx: nnx_count as f64 / diffs.len() as f64,
        x_threshold_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rr(v: &[f64]) -> RrSeries {
        RrSeries::new(v.to_vec()).unwrap()
    }

    #[test]
    fn beats_to_intervals() {
        let s = ibi_from_beats(&[0.0, 800.0, 1650.0]).unwrap();
        assert_eq!(s.intervals(), &[800.0, 850.0]);
        assert_eq!(s.start_offset_ms(), 0.0);
        assert_eq!(
            ibi_from_beats(&[0.0, 1000.0]).unwrap().intervals(),
            &[1000.0]
        );
        assert_eq!(
            ibi_from_beats(&[250.0, 1000.0]).unwrap().start_offset_ms(),
            250.0
        );
    }

    #[test]
    fn beats_errors() {
        assert!(matches!(
            ibi_from_beats(&[0.0, 800.0, 800.0]),
            Err(Error::BeatsNotIncreasing { index: 2 })
        ));
        assert!(matches!(
            ibi_from_beats(&[5.0]),
            Err(Error::TooShort { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn hr_to_intervals() {
        let hr = HrSeries::new(vec![(0.0, 60.0)]).unwrap();
        assert_eq!(ibi_from_hr(&hr).unwrap().intervals(), &[1000.0]);
        let hr = HrSeries::new(vec![(10.0, 120.0), (510.0, 60.0)]).unwrap();
        let s = ibi_from_hr(&hr).unwrap();
        assert_eq!(s.intervals(), &[500.0, 1000.0]);
        assert_eq!(s.start_offset_ms(), 10.0);
        let empty = HrSeries::new(vec![]).unwrap();
        assert!(matches!(ibi_from_hr(&empty), Err(Error::EmptySeries)));
    }

    #[test]
    fn intervals_to_hr() {
        let hr = hr_from_ibi(&rr(&[1000.0])).unwrap();
        assert_eq!(hr.samples(), &[(1000.0, 60.0)]);
        let hr = hr_from_ibi(&rr(&[500.0, 1000.0])).unwrap();
        assert_eq!(hr.samples(), &[(500.0, 120.0), (1500.0, 60.0)]);
        assert!(matches!(hr_from_ibi(&rr(&[])), Err(Error::EmptySeries)));
    }

    #[test]
    fn ectopic_examples() {
        let out = filter_ectopic(&rr(&[800.0, 805.0, 1600.0, 810.0, 795.0]), 0.2).unwrap();
        assert_eq!(out.intervals(), &[800.0, 805.0, 810.0, 795.0]);
        assert!(out.is_ectopic_filtered());

        let flat = rr(&[900.0; 12]);
        assert_eq!(
            filter_ectopic(&flat, 0.05).unwrap().intervals(),
            flat.intervals()
        );

        assert_eq!(
            filter_ectopic(&rr(&[800.0]), 0.2).unwrap().intervals(),
            &[800.0]
        );
        assert!(filter_ectopic(&rr(&[]), 0.2).unwrap().is_empty());
    }

    #[test]
    fn ectopic_rejects_bad_tolerance() {
        assert!(filter_ectopic(&rr(&[800.0]), 0.0).is_err());
        assert!(filter_ectopic(&rr(&[800.0]), 1.0).is_err());
    }

    #[test]
    fn constant_series() {
        let m = compute_metrics(&rr(&[800.0, 800.0, 800.0]), 50.0).unwrap();
        assert_eq!(m.mean_rr, 800.0);
        assert_eq!(m.sdev_nn, 0.0);
        assert_eq!(m.sdev_hr, 0.0);
        assert_eq!(m.rmssd, 0.0);
        assert_eq!(m.mean_hr, 75.0);
        assert_eq!(m.nnx_count, 0);
        assert_eq!(m.pnnx, 0.0);
        assert_eq!(m.sdann, None);
    }

    #[test]
    fn single_difference() {
        let m = compute_metrics(&rr(&[800.0, 900.0]), 50.0).unwrap();
        assert_eq!(m.mean_rr, 850.0);
        assert_eq!(m.rmssd, 100.0);
        assert_relative_eq!(m.sdev_nn, 70.71067811865476, max_relative = 1e-12);
        assert_eq!(m.nnx_count, 1);
        assert_eq!(m.pnnx, 1.0);
        assert_relative_eq!(
            m.mean_hr,
            (75.0 + 60000.0 / 900.0) / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            compute_metrics(&rr(&[800.0]), 50.0),
            Err(Error::TooShort { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn sdann_two_segments() {
        // 375 beats of 800 ms fill the first segment exactly; 700 ms beats
        // run past the second boundary and the remainder is dropped.
        let mut v = vec![800.0; 375];
        v.extend(std::iter::repeat_n(700.0, 440));
        let m = compute_metrics(&rr(&v), 50.0).unwrap();
        // second segment holds the 428 intervals ending at or before 600 000 ms
        let expected = sample_std(&[800.0, 700.0]);
        assert_relative_eq!(m.sdann.unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn key_value_output() {
        let m = compute_metrics(&rr(&[800.0, 900.0]), 50.0).unwrap();
        let text = m.to_key_value();
        assert!(text.contains("mean_rr=850\n"));
        assert!(text.contains("rmssd=100\n"));
        assert!(text.contains("nn50=1\n"));
        assert!(text.contains("pnn50=1\n"));
        assert!(!text.contains("sdann"));
    }

    fn series(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(300.0f64..2000.0, 2..max_len)
    }

    proptest! {
        #[test]
        fn hr_ibi_inverse(v in proptest::collection::vec(200.0f64..2500.0, 1..100)) {
            let s = rr(&v);
            let back = ibi_from_hr(&hr_from_ibi(&s).unwrap()).unwrap();
            for (a, b) in back.intervals().iter().zip(s.intervals()) {
                prop_assert!(((a - b) / b).abs() <= 1e-9);
            }
        }

        #[test]
        fn scaling_equivariance(v in series(200), c in 0.1f64..10.0) {
            let base = compute_metrics(&rr(&v), 50.0).unwrap();
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            let m = compute_metrics(&rr(&scaled), 50.0 * c).unwrap();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-9);
            prop_assert!(close(m.mean_rr, c * base.mean_rr));
            prop_assert!(close(m.sdev_nn, c * base.sdev_nn));
            prop_assert!(close(m.rmssd, c * base.rmssd));
        }

        #[test]
        fn reversal_symmetry(v in series(200)) {
            let a = compute_metrics(&rr(&v), 50.0).unwrap();
            let rev: Vec<f64> = v.iter().rev().copied().collect();
            let b = compute_metrics(&rr(&rev), 50.0).unwrap();
            prop_assert!((a.rmssd - b.rmssd).abs() <= 1e-9 * a.rmssd.max(1.0));
            prop_assert!((a.sdev_nn - b.sdev_nn).abs() <= 1e-9 * a.sdev_nn.max(1.0));
        }

        #[test]
        fn nnx_monotone_in_threshold(v in series(200), x1 in 0.0f64..500.0, dx in 0.0f64..500.0) {
            let lo = compute_metrics(&rr(&v), x1).unwrap();
            let hi = compute_metrics(&rr(&v), x1 + dx).unwrap();
            prop_assert!(hi.nnx_count <= lo.nnx_count);
            prop_assert!((0.0..=1.0).contains(&lo.pnnx));
            prop_assert!(lo.nnx_count < v.len());
        }

        #[test]
        fn ectopic_idempotent(
            v in proptest::collection::vec(prop_oneof![4 => 700.0f64..900.0, 1 => 300.0f64..2000.0], 0..120),
            tol in 0.05f64..0.5,
        ) {
            let once = filter_ectopic(&rr(&v), tol).unwrap();
            let twice = filter_ectopic(&once, tol).unwrap();
            prop_assert_eq!(once.intervals(), twice.intervals());
        }

        #[test]
        fn dispersion_nonnegative(v in series(100)) {
            let m = compute_metrics(&rr(&v), 50.0).unwrap();
            prop_assert!(m.sdev_nn >= 0.0 && m.sdev_hr >= 0.0 && m.rmssd >= 0.0);
            prop_assert!(m.mean_rr > 0.0 && m.mean_hr > 0.0);
        }
    }
}
