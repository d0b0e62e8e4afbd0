//! How well raw samples capture a sinusoid's amplitude at a given number
//! of samples per period, and the 2x / 10x sampling-rate rules.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{gen_sine, TimeSeries};

pub const DEFAULT_TRIALS: usize = 1000;
/// Whole periods per simulated trial.
pub const SWEEP_PERIODS: usize = 100;

/// Half the peak-to-peak range of the samples.
pub fn estimate_amplitude(ts: &TimeSeries) -> Result<f64> {
    amplitude_with(AmplitudeEstimator::HalfPeakToPeak, ts.samples())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeEstimator {
    /// `(max − min) / 2`
    HalfPeakToPeak,
    /// `max − mean`: the largest excursion of a single sample above the
    /// baseline. On whole-period records the mean is the sine's offset.
    #[default]
    PeakAboveMean,
}

impl std::str::FromStr for AmplitudeEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half-p2p" | "half-peak-to-peak" => Ok(Self::HalfPeakToPeak),
            "peak" | "peak-above-mean" => Ok(Self::PeakAboveMean),
            other => Err(Error::InvalidArgument(format!("unknown estimator {other:?}"))),
        }
    }
}

pub fn amplitude_with(estimator: AmplitudeEstimator, x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::SeriesTooShort { len: x.len(), required: 2 });
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(match estimator {
        AmplitudeEstimator::HalfPeakToPeak => {
            let min = x.iter().copied().fold(f64::INFINITY, f64::min);
            (max - min) / 2.0
        }
        AmplitudeEstimator::PeakAboveMean => {
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            (max - mean).max(0.0)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Summary {
    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }
}

/// Linearly interpolated quantile of sorted data (`q ∈ [0, 1]`).
fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Summary {
        min: v[0],
        q25: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q75: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub samples_per_period: f64,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSweepResult {
    pub freq_hz: f64,
    pub estimator: AmplitudeEstimator,
    pub rows: Vec<SweepRow>,
    pub trials: usize,
    pub seed: u64,
}

impl SamplingSweepResult {
    pub fn samples_per_period(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.samples_per_period).collect()
    }

    pub fn row(&self, n: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.samples_per_period == n)
    }
}

/// Unit sines at `N · freq_hz` with uniform random phase, 100 whole periods
/// each, summarized per N. Trial `t` of the `k`-th N draws from stream
/// `(k, t)` of a seeded ChaCha generator, so results do not depend on the
/// order trials are run in.
pub fn sweep_sampling(
    freq_hz: f64,
    samples_per_period: &[f64],
    trials: usize,
    seed: u64,
    estimator: AmplitudeEstimator,
) -> Result<SamplingSweepResult> {
    if !(freq_hz > 0.0 && freq_hz.is_finite()) {
        return Err(Error::NonPositiveFrequency(freq_hz));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if samples_per_period.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(&bad) = samples_per_period.iter().find(|&&n| !(n >= 2.0)) {
        return Err(Error::SubNyquist(bad));
    }
    let mut rows = Vec::with_capacity(samples_per_period.len());
    for (k, &n) in samples_per_period.iter().enumerate() {
        let rate = n * freq_hz;
        let len = (SWEEP_PERIODS as f64 * n).round() as usize;
        let estimates = (0..trials)
            .map(|t| {
                let phase = trial_rng(seed, k, t).gen_range(0.0..2.0 * PI);
                let s = gen_sine(freq_hz, 1.0, phase, rate, len)?;
                amplitude_with(estimator, s.samples())
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(SweepRow {
            samples_per_period: n,
            summary: summarize(&estimates),
        });
    }
    Ok(SamplingSweepResult {
        freq_hz,
        estimator,
        rows,
        trials,
        seed,
    })
}

fn trial_rng(seed: u64, n_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n_index as u64) << 32) | trial as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalysisDomain {
    /// Spectral content only: the 2x bound.
    Frequency,
    /// Waveform shape (peak velocity, amplitude): the 10x rule.
    Time,
}

impl std::str::FromStr for AnalysisDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "frequency" | "freq" => Ok(Self::Frequency),
            "time" => Ok(Self::Time),
            other => Err(Error::InvalidArgument(format!("unknown analysis domain {other:?}"))),
        }
    }
}

pub fn min_sampling_rate(max_signal_freq_hz: f64, domain: AnalysisDomain) -> Result<f64> {
    if !(max_signal_freq_hz > 0.0 && max_signal_freq_hz.is_finite()) {
        return Err(Error::NonPositiveFrequency(max_signal_freq_hz));
    }
    Ok(match domain {
        AnalysisDomain::Frequency => 2.0 * max_signal_freq_hz,
        AnalysisDomain::Time => 10.0 * max_signal_freq_hz,
    })
}
