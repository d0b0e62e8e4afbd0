//! Synthetic recordings with known ground truth: a main-sequence corpus of
//! logistic saccades in band-limited noise, and a two-tone test signal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{apply_zero_phase, design_filter, FilterSpec, DEFAULT_ORDER};
use crate::series::{add_logistic_step, gen_sine, logistic_peak_velocity, EventLabel, SaccadeEvent, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n_saccades: usize,
    pub amplitude_min_deg: f64,
    pub amplitude_max_deg: f64,
    /// Duration model `slope · A + intercept` (ms), before jitter.
    pub duration_slope_ms_per_deg: f64,
    pub duration_intercept_ms: f64,
    /// Log-normal SD of the multiplicative duration jitter.
    pub duration_jitter: f64,
    /// Fixation time before each saccade.
    pub fixation_ms: f64,
    /// RMS of the additive noise after band-limiting.
    pub noise_rms_deg: f64,
    pub noise_cutoff_hz: f64,
    pub rate_hz: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            n_saccades: 500,
            amplitude_min_deg: 0.5,
            amplitude_max_deg: 25.0,
            duration_slope_ms_per_deg: 2.2,
            duration_intercept_ms: 21.0,
            duration_jitter: 0.15,
            fixation_ms: 600.0,
            noise_rms_deg: 0.005,
            noise_cutoff_hz: 150.0,
            rate_hz: 1000.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaccadeTruth {
    pub amplitude_deg: f64,
    pub duration_ms: f64,
    pub peak_velocity_dps: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticRecording {
    pub series: TimeSeries,
    pub events: Vec<SaccadeEvent>,
    pub truth: Vec<SaccadeTruth>,
}

/// Log-uniform amplitudes with alternating direction, durations from the
/// linear duration model with log-normal jitter, separated by fixations.
/// Noise is white Gaussian, zero-phase low-passed at `noise_cutoff_hz` and
/// rescaled to `noise_rms_deg`.
pub fn main_sequence_corpus(spec: &CorpusSpec) -> Result<SyntheticRecording> {
    if spec.n_saccades == 0 {
        return Err(Error::EmptyInput("corpus needs at least one saccade"));
    }
    if !(spec.amplitude_min_deg > 0.0 && spec.amplitude_max_deg >= spec.amplitude_min_deg) {
        return Err(Error::InvalidArgument("amplitude range must be positive and ordered".into()));
    }
    if !(spec.rate_hz > 0.0 && spec.fixation_ms > 0.0 && spec.duration_jitter >= 0.0) {
        return Err(Error::InvalidArgument("rate, fixation and jitter must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let jitter = LogNormal::new(0.0, spec.duration_jitter)
        .map_err(|e| Error::InvalidArgument(format!("duration jitter: {e}")))?;
    let ms_to_samples = |ms: f64| (ms * spec.rate_hz / 1000.0).round() as usize;
    let fixation = ms_to_samples(spec.fixation_ms);

    let (lo, hi) = (spec.amplitude_min_deg.ln(), spec.amplitude_max_deg.ln());
    let mut plan = Vec::with_capacity(spec.n_saccades);
    let mut cursor = fixation;
    for k in 0..spec.n_saccades {
        let amplitude = rng.gen_range(lo..=hi).exp();
        let nominal = spec.duration_slope_ms_per_deg * amplitude + spec.duration_intercept_ms;
        let span = ms_to_samples(nominal * jitter.sample(&mut rng)).max(2);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        plan.push((cursor, cursor + span, sign * amplitude));
        cursor += span + fixation;
    }
    let n = cursor;

    let mut samples = vec![0.0; n];
    let mut events = Vec::with_capacity(plan.len());
    let mut truth = Vec::with_capacity(plan.len());
    for &(on, off, amp) in &plan {
        add_logistic_step(&mut samples, on, off, amp);
        events.push(SaccadeEvent::new(on, off, EventLabel::Saccade)?);
        let duration_s = (off - on) as f64 / spec.rate_hz;
        truth.push(SaccadeTruth {
            amplitude_deg: amp.abs(),
            duration_ms: duration_s * 1000.0,
            peak_velocity_dps: logistic_peak_velocity(amp, duration_s),
        });
    }

    if spec.noise_rms_deg > 0.0 {
        let white: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let white = TimeSeries::new(white, spec.rate_hz)?;
        let lp = design_filter(&FilterSpec::lowpass(DEFAULT_ORDER, spec.noise_cutoff_hz, spec.rate_hz))?;
        let colored = apply_zero_phase(&lp, &white)?;
        let c = colored.samples();
        let rms = (c.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        let gain = spec.noise_rms_deg / rms;
        samples.iter_mut().zip(c).for_each(|(s, v)| *s += gain * v);
    }

    Ok(SyntheticRecording {
        series: TimeSeries::new(samples, spec.rate_hz)?,
        events,
        truth,
    })
}

/// Unit 10 Hz sine plus a 0.1-amplitude 110 Hz sine.
pub fn two_tone(rate_hz: f64, duration_ms: f64) -> Result<TimeSeries> {
    let n = (duration_ms * rate_hz / 1000.0).round() as usize;
    gen_sine(10.0, 1.0, 0.0, rate_hz, n)?.add(&gen_sine(110.0, 0.1, 0.0, rate_hz, n)?)
}
