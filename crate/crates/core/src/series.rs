//! Uniformly sampled scalar channels, event annotations and synthetic
//! waveform generators.
//!
//! A [`TimeSeries`] carries a validity mask next to its samples. Masked
//! samples (blinks, dropouts) are never interpolated; any operation that
//! needs a contiguous window rejects a window that touches one.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    rate_hz: f64,
    start_time_ms: f64,
    valid_mask: Vec<bool>,
}

impl TimeSeries {
    /// A fully valid series starting at t = 0.
    pub fn new(samples: Vec<f64>, rate_hz: f64) -> Result<Self> {
        let mask = vec![true; samples.len()];
        Self::with_mask(samples, mask, rate_hz, 0.0)
    }

    pub fn with_mask(
        samples: Vec<f64>,
        valid_mask: Vec<bool>,
        rate_hz: f64,
        start_time_ms: f64,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("time series has no samples"));
        }
        if samples.len() != valid_mask.len() {
            return Err(Error::LengthMismatch {
                expected: samples.len(),
                got: valid_mask.len(),
            });
        }
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling rate must be positive, got {rate_hz}"
            )));
        }
        Ok(Self {
            samples,
            rate_hz,
            start_time_ms,
            valid_mask,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid_mask
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn start_time_ms(&self) -> f64 {
        self.start_time_ms
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_ms(&self, index: usize) -> f64 {
        self.start_time_ms + 1000.0 * index as f64 / self.rate_hz
    }

    /// Index of the first masked sample, if any.
    pub fn first_gap(&self) -> Option<usize> {
        self.valid_mask.iter().position(|v| !v)
    }

    pub fn ensure_contiguous(&self) -> Result<()> {
        match self.first_gap() {
            Some(index) => Err(Error::ContainsGaps { index }),
            None => Ok(()),
        }
    }

    /// Same timing and mask, new sample values.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        Self {
            samples,
            rate_hz: self.rate_hz,
            start_time_ms: self.start_time_ms,
            valid_mask: self.valid_mask.clone(),
        }
    }

    pub(crate) fn with_samples_and_mask(&self, samples: Vec<f64>, valid_mask: Vec<bool>) -> Self {
        Self {
            samples,
            rate_hz: self.rate_hz,
            start_time_ms: self.start_time_ms,
            valid_mask,
        }
    }

    /// Multiply every sample by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        self.with_samples(self.samples.iter().map(|x| x * factor).collect())
    }

    /// Element-wise sum; both series must share length and rate.
    pub fn add(&self, other: &TimeSeries) -> Result<Self> {
        if other.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        let mask = self
            .valid_mask
            .iter()
            .zip(&other.valid_mask)
            .map(|(a, b)| *a && *b)
            .collect();
        Ok(self.with_samples_and_mask(samples, mask))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventLabel {
    Saccade,
    Microsaccade,
    CatchUpSaccade,
    Other,
}

impl std::str::FromStr for EventLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "saccade" => Ok(Self::Saccade),
            "microsaccade" => Ok(Self::Microsaccade),
            "catch-up-saccade" | "catch_up_saccade" | "cus" => Ok(Self::CatchUpSaccade),
            "other" | "" => Ok(Self::Other),
            other => Err(Error::InvalidArgument(format!("unknown event label {other:?}"))),
        }
    }
}

impl std::fmt::Display for EventLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Saccade => "saccade",
            Self::Microsaccade => "microsaccade",
            Self::CatchUpSaccade => "catch-up-saccade",
            Self::Other => "other",
        })
    }
}

/// Onset/offset annotation in sample indices of the series it refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaccadeEvent {
    pub onset_index: usize,
    pub offset_index: usize,
    pub label: EventLabel,
}

impl SaccadeEvent {
    pub fn new(onset_index: usize, offset_index: usize, label: EventLabel) -> Result<Self> {
        if offset_index <= onset_index {
            return Err(Error::DegenerateEvent {
                onset: onset_index,
                offset: offset_index,
            });
        }
        Ok(Self {
            onset_index,
            offset_index,
            label,
        })
    }

    pub fn check_within(&self, len: usize) -> Result<()> {
        if self.offset_index >= len {
            return Err(Error::OutOfBounds {
                start: self.onset_index,
                end: self.offset_index,
                len,
            });
        }
        Ok(())
    }
}

/// Build a [`TimeSeries`] from `(timestamp_ms, value)` pairs.
///
/// A `None` or NaN value becomes a masked sample. Each inter-sample interval
/// must lie within `tolerance` (relative) of `1000 / expected_rate_hz` ms.
pub fn validate_series(
    raw: &[(f64, Option<f64>)],
    expected_rate_hz: f64,
    tolerance: f64,
) -> Result<TimeSeries> {
    if raw.len() < 2 {
        return Err(Error::EmptyInput("need at least two timestamp/value pairs"));
    }
    if !(expected_rate_hz.is_finite() && expected_rate_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "expected rate must be positive, got {expected_rate_hz}"
        )));
    }
    let expected_ms = 1000.0 / expected_rate_hz;
    for (i, pair) in raw.windows(2).enumerate() {
        let dt = pair[1].0 - pair[0].0;
        if !(dt > 0.0) {
            return Err(Error::NonIncreasingTimestamps { index: i + 1 });
        }
        if ((dt - expected_ms) / expected_ms).abs() > tolerance {
            return Err(Error::NonUniformSampling {
                index: i,
                interval_ms: dt,
                expected_ms,
            });
        }
    }
    let (samples, mask): (Vec<f64>, Vec<bool>) = raw
        .iter()
        .map(|(_, v)| match v {
            Some(x) if x.is_finite() => (*x, true),
            _ => (f64::NAN, false),
        })
        .unzip();
    TimeSeries::with_mask(samples, mask, expected_rate_hz, raw[0].0)
}

/// Inclusive window `[start_index, end_index]`; timing is preserved.
pub fn extract_window(ts: &TimeSeries, start_index: usize, end_index: usize) -> Result<TimeSeries> {
    if start_index > end_index || end_index >= ts.len() {
        return Err(Error::OutOfBounds {
            start: start_index,
            end: end_index,
            len: ts.len(),
        });
    }
    TimeSeries::with_mask(
        ts.samples[start_index..=end_index].to_vec(),
        ts.valid_mask[start_index..=end_index].to_vec(),
        ts.rate_hz,
        ts.time_ms(start_index),
    )
}

/// `amplitude * sin(2π f i / rate + phase)` for `i in 0..n_samples`.
pub fn gen_sine(
    freq_hz: f64,
    amplitude: f64,
    phase_rad: f64,
    rate_hz: f64,
    n_samples: usize,
) -> Result<TimeSeries> {
    if !(freq_hz >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sine frequency must be non-negative, got {freq_hz}"
        )));
    }
    if n_samples == 0 {
        return Err(Error::EmptyInput("n_samples must be at least 1"));
    }
    if !(rate_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling rate must be positive, got {rate_hz}"
        )));
    }
    let w = 2.0 * PI * freq_hz / rate_hz;
    let samples = (0..n_samples)
        .map(|i| amplitude * (w * i as f64 + phase_rad).sin())
        .collect();
    TimeSeries::new(samples, rate_hz)
}

/// Half-width of the logistic argument range used by the synthetic saccade.
/// The profile spans `u ∈ [-3, 3]`; at the annotated onset and offset the
/// speed is 18% of its peak, about where velocity-threshold detectors place
/// event boundaries.
pub const SACCADE_LOGISTIC_HALF_RANGE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSaccadeSpec {
    pub amplitude_deg: f64,
    pub duration_ms: f64,
    pub onset_ms: f64,
    pub baseline_deg: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticSaccade {
    pub series: TimeSeries,
    pub event: SaccadeEvent,
    /// Analytic maximum of |dx/dt| in deg/s.
    pub peak_velocity_dps: f64,
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Normalized logistic step on `[0, 1]`: exactly 0 at 0, exactly 1 at 1.
fn logistic_step(frac: f64) -> f64 {
    let h = SACCADE_LOGISTIC_HALF_RANGE;
    if frac <= 0.0 {
        return 0.0;
    }
    if frac >= 1.0 {
        return 1.0;
    }
    let lo = logistic(-h);
    let hi = logistic(h);
    (logistic(-h + 2.0 * h * frac) - lo) / (hi - lo)
}

/// Analytic peak speed (deg/s) of the logistic profile for an amplitude and
/// duration; the maximum slope sits at mid-saccade.
pub fn logistic_peak_velocity(amplitude_deg: f64, duration_s: f64) -> f64 {
    let h = SACCADE_LOGISTIC_HALF_RANGE;
    let norm = logistic(h) - logistic(-h);
    amplitude_deg.abs() * 0.25 * (2.0 * h / duration_s) / norm
}

/// Logistic position profile written into an existing sample buffer.
/// Samples before `onset_index` are left untouched; samples from
/// `offset_index` on are shifted by `amplitude`.
pub(crate) fn add_logistic_step(
    samples: &mut [f64],
    onset_index: usize,
    offset_index: usize,
    amplitude: f64,
) {
    let span = (offset_index - onset_index) as f64;
    for (i, s) in samples.iter_mut().enumerate().skip(onset_index) {
        let frac = (i - onset_index) as f64 / span;
        *s += amplitude * logistic_step(frac);
    }
}

/// Smooth sigmoidal saccade with known ground truth.
///
/// Onset and offset are snapped to the nearest samples, and the duration
/// used for the analytic peak velocity is the snapped one, so the returned
/// samples sit exactly on the plateaus at the annotated indices.
pub fn gen_synthetic_saccade(
    spec: &SyntheticSaccadeSpec,
    rate_hz: f64,
    total_ms: f64,
) -> Result<SyntheticSaccade> {
    if !(rate_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling rate must be positive, got {rate_hz}"
        )));
    }
    if !(spec.duration_ms > 0.0) || spec.onset_ms < 0.0 || total_ms <= 0.0 {
        return Err(Error::SpecDoesNotFit);
    }
    let n = (total_ms * rate_hz / 1000.0).round() as usize;
    let onset_index = (spec.onset_ms * rate_hz / 1000.0).round() as usize;
    let offset_index = ((spec.onset_ms + spec.duration_ms) * rate_hz / 1000.0).round() as usize;
    if offset_index <= onset_index || offset_index >= n {
        return Err(Error::SpecDoesNotFit);
    }
    let mut samples = vec![spec.baseline_deg; n];
    add_logistic_step(&mut samples, onset_index, offset_index, spec.amplitude_deg);
    let duration_s = (offset_index - onset_index) as f64 / rate_hz;
    Ok(SyntheticSaccade {
        series: TimeSeries::new(samples, rate_hz)?,
        event: SaccadeEvent::new(onset_index, offset_index, EventLabel::Saccade)?,
        peak_velocity_dps: logistic_peak_velocity(spec.amplitude_deg, duration_s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform_pairs(n: usize, dt: f64) -> Vec<(f64, Option<f64>)> {
        (0..n).map(|i| (i as f64 * dt, Some(i as f64))).collect()
    }

    #[test]
    fn validate_uniform_series() {
        let ts = validate_series(&uniform_pairs(1000, 1.0), 1000.0, 0.01).unwrap();
        assert_eq!(ts.len(), 1000);
        assert!(ts.valid_mask().iter().all(|&v| v));
    }

    #[test]
    fn validate_marks_missing() {
        let mut raw = uniform_pairs(10, 1.0);
        raw[4].1 = None;
        raw[6].1 = Some(f64::NAN);
        let ts = validate_series(&raw, 1000.0, 0.01).unwrap();
        assert!(!ts.valid_mask()[4]);
        assert!(!ts.valid_mask()[6]);
        assert_eq!(ts.valid_mask().iter().filter(|v| !**v).count(), 2);
        assert_eq!(ts.first_gap(), Some(4));
    }

    #[test]
    fn validate_rejects_jittered_spacing() {
        let mut t = 0.0;
        let raw: Vec<_> = (0..20)
            .map(|i| {
                let p = (t, Some(0.0));
                t += if i % 2 == 0 { 1.0 } else { 2.0 };
                p
            })
            .collect();
        assert!(matches!(
            validate_series(&raw, 1000.0, 0.01),
            Err(Error::NonUniformSampling { .. })
        ));
    }

    #[test]
    fn validate_rejects_short_and_unordered() {
        assert!(matches!(
            validate_series(&[(0.0, Some(1.0))], 1000.0, 0.01),
            Err(Error::EmptyInput(_))
        ));
        let raw = [(0.0, Some(1.0)), (0.0, Some(1.0))];
        assert!(matches!(
            validate_series(&raw, 1000.0, 0.01),
            Err(Error::NonIncreasingTimestamps { index: 1 })
        ));
    }

    #[test]
    fn window_identity_and_shift() {
        let ts = gen_sine(3.0, 1.0, 0.2, 100.0, 10).unwrap();
        assert_eq!(extract_window(&ts, 0, 9).unwrap(), ts);
        let w = extract_window(&ts, 2, 5).unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(w.start_time_ms(), 20.0);
        assert_eq!(w.samples(), &ts.samples()[2..=5]);
        assert!(matches!(
            extract_window(&ts, 2, 10),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn sine_examples() {
        let dc = gen_sine(0.0, 1.0, PI / 2.0, 1000.0, 50).unwrap();
        assert!(dc.samples().iter().all(|&x| (x - 1.0).abs() < 1e-15));

        // 75 Hz at 750 Hz repeats every 10 samples.
        let s = gen_sine(75.0, 1.0, 0.3, 750.0, 40).unwrap();
        for i in 0..30 {
            assert!((s.samples()[i] - s.samples()[i + 10]).abs() < 1e-12);
            if i % 10 != 0 {
                assert!((s.samples()[i] - s.samples()[0]).abs() > 1e-6);
            }
        }
    }

    #[test]
    fn sine_rms_converges() {
        // Incommensurate with the rate: 1e5 samples, ~1728 periods.
        let s = gen_sine(17.28394, 2.0, 0.0, 1000.0, 100_000).unwrap();
        let rms = (s.samples().iter().map(|x| x * x).sum::<f64>() / s.len() as f64).sqrt();
        assert!(((rms - 2.0 / 2f64.sqrt()) / (2.0 / 2f64.sqrt())).abs() < 1e-3);
    }

    #[test]
    fn synthetic_saccade_ground_truth() {
        let spec = SyntheticSaccadeSpec {
            amplitude_deg: 10.0,
            duration_ms: 50.0,
            onset_ms: 200.0,
            baseline_deg: -3.0,
        };
        let sac = gen_synthetic_saccade(&spec, 1000.0, 600.0).unwrap();
        let x = sac.series.samples();
        assert_eq!(sac.event.onset_index, 200);
        assert_eq!(sac.event.offset_index, 250);
        assert!(x[..=200].iter().all(|&v| v == -3.0));
        assert!(x[250..].iter().all(|&v| (v - 7.0).abs() < 1e-12));
        assert!(x.windows(2).all(|w| w[1] >= w[0]));

        // Dense central difference of the closed-form profile.
        let dt = 1e-7;
        let mut best: f64 = 0.0;
        for k in 0..=20_000 {
            let frac = k as f64 / 20_000.0;
            let f = |q: f64| 10.0 * logistic_step(q);
            let d = (f(frac + dt / 0.05) - f(frac - dt / 0.05)) / (2.0 * dt);
            best = best.max(d.abs());
        }
        assert!(((best - sac.peak_velocity_dps) / sac.peak_velocity_dps).abs() < 1e-5);
    }

    #[test]
    fn synthetic_saccade_degenerate_and_negative() {
        let flat = gen_synthetic_saccade(
            &SyntheticSaccadeSpec {
                amplitude_deg: 0.0,
                duration_ms: 30.0,
                onset_ms: 10.0,
                baseline_deg: 1.5,
            },
            1000.0,
            100.0,
        )
        .unwrap();
        assert!(flat.series.samples().iter().all(|&v| v == 1.5));
        assert_eq!(flat.peak_velocity_dps, 0.0);

        let down = gen_synthetic_saccade(
            &SyntheticSaccadeSpec {
                amplitude_deg: -5.0,
                duration_ms: 30.0,
                onset_ms: 10.0,
                baseline_deg: 0.0,
            },
            1000.0,
            100.0,
        )
        .unwrap();
        let x = down.series.samples();
        assert!((x[down.event.offset_index] - x[down.event.onset_index] + 5.0).abs() < 1e-12);
        assert!(down.peak_velocity_dps > 0.0);

        let too_long = SyntheticSaccadeSpec {
            amplitude_deg: 1.0,
            duration_ms: 90.0,
            onset_ms: 20.0,
            baseline_deg: 0.0,
        };
        assert!(matches!(
            gen_synthetic_saccade(&too_long, 1000.0, 100.0),
            Err(Error::SpecDoesNotFit)
        ));
    }

    proptest! {
        #[test]
        fn window_composition(len in 2usize..200, a in 0usize..1000, b in 0usize..1000, c in 0usize..1000, d in 0usize..1000) {
            let ts = gen_sine(7.0, 1.0, 0.0, 250.0, len).unwrap();
            let (s1, e1) = { let mut v = [a % len, b % len]; v.sort(); (v[0], v[1]) };
            let inner = e1 - s1 + 1;
            let (s2, e2) = { let mut v = [c % inner, d % inner]; v.sort(); (v[0], v[1]) };
            let twice = extract_window(&extract_window(&ts, s1, e1).unwrap(), s2, e2).unwrap();
            let once = extract_window(&ts, s1 + s2, s1 + e2).unwrap();
            prop_assert_eq!(twice.samples(), once.samples());
            prop_assert!((twice.start_time_ms() - once.start_time_ms()).abs() < 1e-9);
        }

        #[test]
        fn unit_sine_bounded(freq in 0.0f64..500.0, phase in -10.0f64..10.0) {
            let s = gen_sine(freq, 1.0, phase, 1000.0, 257).unwrap();
            prop_assert!(s.samples().iter().all(|x| x.abs() <= 1.0));
        }

        #[test]
        fn saccade_amplitude_matches_samples(
            amp in -30.0f64..30.0,
            dur in 10.0f64..120.0,
            onset in 0.0f64..100.0,
            base in -10.0f64..10.0,
        ) {
            let spec = SyntheticSaccadeSpec { amplitude_deg: amp, duration_ms: dur, onset_ms: onset, baseline_deg: base };
            let sac = gen_synthetic_saccade(&spec, 1000.0, 400.0).unwrap();
            let x = sac.series.samples();
            let measured = x[sac.event.offset_index] - x[sac.event.onset_index];
            prop_assert!((measured - amp).abs() <= 1e-6 * amp.abs().max(1e-12));
        }
    }
}
