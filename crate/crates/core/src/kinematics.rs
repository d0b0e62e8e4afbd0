//! Savitzky-Golay differentiation, event snippets and main-sequence
//! features (amplitude, peak velocity).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::series::{extract_window, EventLabel, SaccadeEvent, TimeSeries};

pub const SG_WINDOW: usize = 7;
pub const SG_POLY_ORDER: usize = 2;
/// Context kept on each side of an event when cutting snippets.
pub const SNIPPET_PAD_MS: f64 = 200.0;

/// Convolution weights `w[-h..=h]` for the centered least-squares estimate
/// of the `deriv`-th derivative at unit sample spacing.
pub fn savgol_derivative_kernel(window: usize, poly_order: usize, deriv: usize) -> Result<Vec<f64>> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::InvalidWindow(window));
    }
    if poly_order >= window {
        return Err(Error::InvalidPolyOrder(format!(
            "polynomial order {poly_order} must be below window {window}"
        )));
    }
    if deriv > poly_order {
        return Err(Error::InvalidPolyOrder(format!(
            "derivative {deriv} exceeds polynomial order {poly_order}"
        )));
    }
    let half = (window / 2) as i64;
    let m = poly_order + 1;
    // Normal equations Σ_k k^(i+j) c_j = e_deriv; the weights are then
    // deriv! · Σ_j c_j k^j.
    let mut gram = vec![0.0; m * m];
    for k in -half..=half {
        let k = k as f64;
        for i in 0..m {
            for j in 0..m {
                gram[i * m + j] += k.powi((i + j) as i32);
            }
        }
    }
    let mut rhs = vec![0.0; m];
    rhs[deriv] = 1.0;
    let coef = linalg::solve(gram, rhs)
        .ok_or_else(|| Error::InvalidPolyOrder("singular Savitzky-Golay system".into()))?;
    let factorial: f64 = (1..=deriv).map(|v| v as f64).product();
    Ok((-half..=half)
        .map(|k| {
            let k = k as f64;
            factorial * coef.iter().enumerate().map(|(j, c)| c * k.powi(j as i32)).sum::<f64>()
        })
        .collect())
}

/// First derivative in units per second. The half-window at each end has
/// no centered estimate and is masked (samples set to NaN).
pub fn velocity(ts: &TimeSeries, window: usize, poly_order: usize) -> Result<TimeSeries> {
    ts.ensure_contiguous()?;
    let kernel = savgol_derivative_kernel(window, poly_order, 1)?;
    let n = ts.len();
    if n < window {
        return Err(Error::SeriesTooShort { len: n, required: window - 1 });
    }
    let half = window / 2;
    let rate = ts.rate_hz();
    let x = ts.samples();
    let mut out = vec![f64::NAN; n];
    let mut mask = vec![false; n];
    for i in half..n - half {
        // Paired taps so antisymmetric kernels cancel constants exactly.
        let acc = kernel[half] * x[i]
            + (1..=half)
                .map(|k| kernel[half + k] * x[i + k] + kernel[half - k] * x[i - k])
                .sum::<f64>();
        // Kernel assumes unit spacing; convert per-sample to per-second.
        out[i] = acc * rate;
        mask[i] = true;
    }
    Ok(ts.with_samples_and_mask(out, mask))
}

/// A padded event window with the event re-indexed into it.
#[derive(Debug, Clone)]
pub struct Snippet {
    pub series: TimeSeries,
    pub event: SaccadeEvent,
    /// Index in the source recording of the snippet's first sample.
    pub source_start: usize,
}

/// Cuts `[onset − pad, offset + pad]`. Events too close to the recording
/// edges or touching masked samples are rejected.
pub fn extract_snippet(ts: &TimeSeries, event: &SaccadeEvent, pad_ms: f64) -> Result<Snippet> {
    if event.offset_index <= event.onset_index {
        return Err(Error::DegenerateEvent {
            onset: event.onset_index,
            offset: event.offset_index,
        });
    }
    if !(pad_ms >= 0.0) {
        return Err(Error::InvalidArgument(format!("pad must be non-negative, got {pad_ms}")));
    }
    let pad = (pad_ms * ts.rate_hz() / 1000.0).round() as i64;
    let start = event.onset_index as i64 - pad;
    let end = event.offset_index as i64 + pad;
    if start < 0 || end >= ts.len() as i64 {
        return Err(Error::SnippetOutOfBounds { start, end, len: ts.len() });
    }
    let (start, end) = (start as usize, end as usize);
    let series = extract_window(ts, start, end)?;
    if let Some(i) = series.first_gap() {
        return Err(Error::ContainsGaps { index: start + i });
    }
    Ok(Snippet {
        series,
        event: SaccadeEvent {
            onset_index: event.onset_index - start,
            offset_index: event.offset_index - start,
            label: event.label,
        },
        source_start: start,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaccadeFeatures {
    pub amplitude_deg: f64,
    pub peak_velocity_dps: f64,
    pub event: SaccadeEvent,
}

/// Amplitude `|x(offset) − x(onset)|` and peak `|velocity|` over
/// `[onset, offset]`, with the default 7-point quadratic SG derivative.
pub fn saccade_features(snippet: &TimeSeries, event: &SaccadeEvent) -> Result<SaccadeFeatures> {
    saccade_features_with(snippet, event, SG_WINDOW, SG_POLY_ORDER)
}

pub fn saccade_features_with(
    snippet: &TimeSeries,
    event: &SaccadeEvent,
    window: usize,
    poly_order: usize,
) -> Result<SaccadeFeatures> {
    if event.offset_index <= event.onset_index {
        return Err(Error::DegenerateEvent {
            onset: event.onset_index,
            offset: event.offset_index,
        });
    }
    event.check_within(snippet.len())?;
    let vel = velocity(snippet, window, poly_order)?;
    let x = snippet.samples();
    let amplitude_deg = (x[event.offset_index] - x[event.onset_index]).abs();
    let peak = (event.onset_index..=event.offset_index)
        .filter(|&i| vel.valid_mask()[i])
        .map(|i| vel.samples()[i].abs())
        .reduce(f64::max)
        .ok_or(Error::SeriesTooShort {
            len: snippet.len(),
            required: event.offset_index + window / 2,
        })?;
    Ok(SaccadeFeatures {
        amplitude_deg,
        peak_velocity_dps: peak,
        event: *event,
    })
}

/// Threshold detector: maximal runs of `|v| > threshold_dps` lasting at
/// least `min_duration_ms`. Masked samples break runs.
pub fn detect_saccades(vel: &TimeSeries, threshold_dps: f64, min_duration_ms: f64) -> Vec<SaccadeEvent> {
    let rate = vel.rate_hz();
    let mut events = Vec::new();
    let mut run_start: Option<usize> = None;
    let above = |i: usize| vel.valid_mask()[i] && vel.samples()[i].abs() > threshold_dps;
    let close = |start: usize, end: usize, events: &mut Vec<SaccadeEvent>| {
        let duration_ms = (end - start + 1) as f64 * 1000.0 / rate;
        if end > start && duration_ms >= min_duration_ms {
            events.push(SaccadeEvent {
                onset_index: start,
                offset_index: end,
                label: EventLabel::Saccade,
            });
        }
    };
    for i in 0..vel.len() {
        match (above(i), run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                close(s, i - 1, &mut events);
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        close(s, vel.len() - 1, &mut events);
    }
    events
}
