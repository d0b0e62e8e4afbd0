//! Butterworth design as cascaded second-order sections, zero-phase
//! (forward-backward) application and band decomposition.
//!
//! Design goes analog prototype → frequency transform at prewarped edges →
//! bilinear transform → pole/zero pairing into biquads, so that the
//! single-pass magnitude at every cutoff is exactly 1/√2.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Prototype order used by every band and low-pass condition.
pub const DEFAULT_ORDER: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Lowpass,
    Highpass,
    Bandpass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub order: usize,
    /// Lower edge (high-pass and band-pass).
    pub cutoff_low_hz: Option<f64>,
    /// Upper edge (low-pass and band-pass).
    pub cutoff_high_hz: Option<f64>,
    pub rate_hz: f64,
}

impl FilterSpec {
    pub fn lowpass(order: usize, cutoff_hz: f64, rate_hz: f64) -> Self {
        Self {
            kind: FilterKind::Lowpass,
            order,
            cutoff_low_hz: None,
            cutoff_high_hz: Some(cutoff_hz),
            rate_hz,
        }
    }

    pub fn highpass(order: usize, cutoff_hz: f64, rate_hz: f64) -> Self {
        Self {
            kind: FilterKind::Highpass,
            order,
            cutoff_low_hz: Some(cutoff_hz),
            cutoff_high_hz: None,
            rate_hz,
        }
    }

    pub fn bandpass(order: usize, low_hz: f64, high_hz: f64, rate_hz: f64) -> Self {
        Self {
            kind: FilterKind::Bandpass,
            order,
            cutoff_low_hz: Some(low_hz),
            cutoff_high_hz: Some(high_hz),
            rate_hz,
        }
    }

    fn edge(&self, value: Option<f64>, which: &str) -> Result<f64> {
        let nyquist = self.rate_hz / 2.0;
        let f = value.ok_or_else(|| {
            Error::InvalidArgument(format!("{:?} filter needs a {which} cutoff", self.kind))
        })?;
        if !(f > 0.0 && f < nyquist) {
            return Err(Error::InvalidCutoff {
                cutoff_hz: f,
                nyquist_hz: nyquist,
            });
        }
        Ok(f)
    }

    /// Checks the invariants and returns the (low, high) edges in use.
    pub fn validate(&self) -> Result<(Option<f64>, Option<f64>)> {
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling rate must be positive, got {}",
                self.rate_hz
            )));
        }
        if self.order == 0 || self.order > 32 {
            return Err(Error::InvalidOrder(self.order));
        }
        match self.kind {
            FilterKind::Lowpass => Ok((None, Some(self.edge(self.cutoff_high_hz, "high")?))),
            FilterKind::Highpass => Ok((Some(self.edge(self.cutoff_low_hz, "low")?), None)),
            FilterKind::Bandpass => {
                let lo = self.edge(self.cutoff_low_hz, "low")?;
                let hi = self.edge(self.cutoff_high_hz, "high")?;
                if lo >= hi {
                    return Err(Error::InvalidArgument(format!(
                        "band-pass requires low < high, got {lo} >= {hi}"
                    )));
                }
                Ok((Some(lo), Some(hi)))
            }
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            FilterKind::Lowpass => format!("lowpass-{}", fmt_hz(self.cutoff_high_hz)),
            FilterKind::Highpass => format!("highpass-{}", fmt_hz(self.cutoff_low_hz)),
            FilterKind::Bandpass => format!(
                "bandpass-{}-{}",
                fmt_hz(self.cutoff_low_hz),
                fmt_hz(self.cutoff_high_hz)
            ),
        }
    }
}

fn fmt_hz(f: Option<f64>) -> String {
    f.map(|v| format!("{v}")).unwrap_or_else(|| "?".into())
}

/// One biquad `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sos {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Sos {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + self.b[1] * z_inv + self.b[2] * z2;
        let den = self.a[0] + self.a[1] * z_inv + self.a[2] * z2;
        num / den
    }

    /// Pole magnitudes from the roots of `z² + a1 z + a2`.
    pub fn pole_magnitudes(&self) -> Vec<f64> {
        let (a1, a2) = (self.a[1], self.a[2]);
        if a2 == 0.0 {
            return vec![a1.abs()];
        }
        let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
        vec![
            ((-a1 + disc) / 2.0).norm(),
            ((-a1 - disc) / 2.0).norm(),
        ]
    }

    /// Steady-state transposed direct-form II state for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let gain = (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[1] + self.a[2]);
        let s2 = self.b[2] - self.a[2] * gain;
        let s1 = self.b[1] - self.a[1] * gain + s2;
        [s1, s2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterStages {
    pub sections: Vec<Sos>,
    pub overall_gain: f64,
    pub rate_hz: f64,
    /// Prototype order of the design; sets the edge padding length.
    pub order: usize,
}

impl FilterStages {
    /// Complex single-pass response at `freq_hz` (no range check).
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.rate_hz;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .fold(Complex64::new(self.overall_gain, 0.0), |acc, s| {
                acc * s.response(z_inv)
            })
    }

    pub fn pole_magnitudes(&self) -> Vec<f64> {
        self.sections.iter().flat_map(Sos::pole_magnitudes).collect()
    }

    pub fn is_stable(&self) -> bool {
        self.pole_magnitudes().iter().all(|&m| m < 1.0)
    }

    /// Odd-extension length at each end for forward-backward filtering.
    pub fn pad_len(&self) -> usize {
        3 * (2 * self.order + 1)
    }

    /// Single causal pass with initial state scaled by the first sample.
    fn filter_in_place(&self, x: &mut [f64]) {
        let Some(&first) = x.first() else { return };
        let mut states: Vec<[f64; 2]> = Vec::with_capacity(self.sections.len());
        let mut level = first * self.overall_gain;
        for s in &self.sections {
            let [z1, z2] = s.step_state();
            states.push([z1 * level, z2 * level]);
            level *= (s.b[0] + s.b[1] + s.b[2]) / (1.0 + s.a[1] + s.a[2]);
        }
        for v in x.iter_mut() {
            let mut y = *v * self.overall_gain;
            for (s, st) in self.sections.iter().zip(states.iter_mut()) {
                let out = s.b[0] * y + st[0];
                st[0] = s.b[1] * y - s.a[1] * out + st[1];
                st[1] = s.b[2] * y - s.a[2] * out;
                y = out;
            }
            *v = y;
        }
    }
}

fn butterworth_prototype(order: usize) -> Vec<Complex64> {
    let n = order as f64;
    (0..order)
        .map(|k| {
            let theta = PI * (2.0 * k as f64 + 1.0 + n) / (2.0 * n);
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

/// Analog zeros, poles and gain after the frequency transform.
struct Zpk {
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
    gain: f64,
}

fn bilinear(analog: Zpk, fs2: f64) -> Zpk {
    let map = |s: Complex64| (fs2 + s) / (fs2 - s);
    let num: Complex64 = analog.zeros.iter().map(|z| fs2 - z).product();
    let den: Complex64 = analog.poles.iter().map(|p| fs2 - p).product();
    let mut zeros: Vec<Complex64> = analog.zeros.iter().copied().map(map).collect();
    zeros.resize(analog.poles.len(), Complex64::new(-1.0, 0.0));
    Zpk {
        zeros,
        poles: analog.poles.iter().copied().map(map).collect(),
        gain: analog.gain * (num / den).re,
    }
}

/// Pairs conjugate poles (and leftover reals) into biquads. Zeros are all
/// real for the Butterworth families here; `+1` and `−1` zeros are
/// interleaved so band-pass sections each get `1 − z⁻²`.
fn zpk_to_sections(digital: &Zpk, ref_z_inv: Complex64) -> (Vec<Sos>, f64) {
    const IMAG_TOL: f64 = 1e-12;
    let mut complex: Vec<Complex64> = digital
        .poles
        .iter()
        .copied()
        .filter(|p| p.im > IMAG_TOL)
        .collect();
    let mut real: Vec<f64> = digital
        .poles
        .iter()
        .filter(|p| p.im.abs() <= IMAG_TOL)
        .map(|p| p.re)
        .collect();
    // Farthest from the unit circle first.
    complex.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    real.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

    let mut dens: Vec<[f64; 3]> = complex
        .iter()
        .map(|p| [1.0, -2.0 * p.re, p.norm_sqr()])
        .collect();
    let mut reals = real.chunks(2);
    for pair in reals.by_ref() {
        match *pair {
            [p, q] => dens.push([1.0, -(p + q), p * q]),
            [p] => dens.push([1.0, -p, 0.0]),
            _ => unreachable!(),
        }
    }

    let (mut plus, mut minus): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    for z in &digital.zeros {
        if z.re >= 0.0 {
            plus.push(z.re);
        } else {
            minus.push(z.re);
        }
    }
    let mut zeros = Vec::with_capacity(plus.len() + minus.len());
    let (mut pi, mut mi) = (plus.into_iter(), minus.into_iter());
    loop {
        match (pi.next(), mi.next()) {
            (None, None) => break,
            (a, b) => zeros.extend(a.into_iter().chain(b)),
        }
    }

    let mut zit = zeros.into_iter();
    let mut overall = digital.gain;
    let sections = dens
        .into_iter()
        .map(|a| {
            let order = if a[2] == 0.0 { 1 } else { 2 };
            let zs: Vec<f64> = zit.by_ref().take(order).collect();
            let mut b = match zs.as_slice() {
                [] => [1.0, 0.0, 0.0],
                [z] => [1.0, -z, 0.0],
                [z, w] => [1.0, -(z + w), z * w],
                _ => unreachable!(),
            };
            let raw = Sos { b, a }.response(ref_z_inv).norm();
            if raw > 0.0 && raw.is_finite() {
                b.iter_mut().for_each(|c| *c /= raw);
                overall *= raw;
            }
            Sos { b, a }
        })
        .collect();
    (sections, overall)
}

/// Designs a digital Butterworth filter as a cascade of biquads.
pub fn design_filter(spec: &FilterSpec) -> Result<FilterStages> {
    let (lo, hi) = spec.validate()?;
    let rate = spec.rate_hz;
    let fs2 = 2.0 * rate;
    let warp = |f: f64| fs2 * (PI * f / rate).tan();
    let proto = butterworth_prototype(spec.order);
    let n = spec.order as i32;

    let (analog, ref_freq) = match spec.kind {
        FilterKind::Lowpass => {
            let wc = warp(hi.unwrap());
            (
                Zpk {
                    zeros: vec![],
                    poles: proto.iter().map(|p| p * wc).collect(),
                    gain: wc.powi(n),
                },
                0.0,
            )
        }
        FilterKind::Highpass => {
            let wc = warp(lo.unwrap());
            let prod: Complex64 = proto.iter().map(|p| -p).product();
            (
                Zpk {
                    zeros: vec![Complex64::new(0.0, 0.0); spec.order],
                    poles: proto.iter().map(|p| wc / p).collect(),
                    gain: 1.0 / prod.re,
                },
                rate / 2.0,
            )
        }
        FilterKind::Bandpass => {
            let (wl, wh) = (warp(lo.unwrap()), warp(hi.unwrap()));
            let w0 = (wl * wh).sqrt();
            let bw = wh - wl;
            let poles = proto
                .iter()
                .flat_map(|p| {
                    let half = p * (bw / 2.0);
                    let d = (half * half - w0 * w0).sqrt();
                    [half + d, half - d]
                })
                .collect();
            (
                Zpk {
                    zeros: vec![Complex64::new(0.0, 0.0); spec.order],
                    poles,
                    gain: bw.powi(n),
                },
                // Digital frequency of the analog geometric center.
                rate / PI * (w0 / fs2).atan(),
            )
        }
    };

    let digital = bilinear(analog, fs2);
    let ref_z_inv = Complex64::from_polar(1.0, -2.0 * PI * ref_freq / rate);
    let (sections, overall_gain) = zpk_to_sections(&digital, ref_z_inv);
    Ok(FilterStages {
        sections,
        overall_gain,
        rate_hz: rate,
        order: spec.order,
    })
}

/// Magnitude at `freq_hz`; squared when `zero_phase` (forward + backward).
pub fn frequency_response(stages: &FilterStages, freq_hz: f64, zero_phase: bool) -> Result<f64> {
    let nyquist = stages.rate_hz / 2.0;
    if !(freq_hz >= 0.0 && freq_hz <= nyquist) {
        return Err(Error::OutOfBand { freq_hz, nyquist_hz: nyquist });
    }
    let m = stages.response(freq_hz).norm();
    Ok(if zero_phase { m * m } else { m })
}

/// Forward-backward filtering with odd extension of [`FilterStages::pad_len`]
/// samples at each end and steady-state initial conditions.
pub fn apply_zero_phase(stages: &FilterStages, ts: &TimeSeries) -> Result<TimeSeries> {
    ts.ensure_contiguous()?;
    if (ts.rate_hz() - stages.rate_hz).abs() > 1e-9 * stages.rate_hz {
        return Err(Error::InvalidArgument(format!(
            "filter designed for {} Hz applied to a {} Hz series",
            stages.rate_hz,
            ts.rate_hz()
        )));
    }
    let x = ts.samples();
    let pad = stages.pad_len();
    let n = x.len();
    if n <= pad {
        return Err(Error::SeriesTooShort { len: n, required: pad });
    }
    let (first, last) = (x[0], x[n - 1]);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|k| 2.0 * first - x[k]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|k| 2.0 * last - x[n - 1 - k]));

    stages.filter_in_place(&mut ext);
    ext.reverse();
    stages.filter_in_place(&mut ext);
    ext.reverse();

    Ok(ts.with_samples(ext[pad..pad + n].to_vec()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub name: String,
    /// `None` means a low-pass band starting at 0 Hz.
    pub low_hz: Option<f64>,
    pub high_hz: f64,
}

impl BandSpec {
    pub fn new(low_hz: Option<f64>, high_hz: f64) -> Result<Self> {
        if let Some(lo) = low_hz {
            if !(lo < high_hz) {
                return Err(Error::InvalidArgument(format!(
                    "band requires low < high, got {lo} >= {high_hz}"
                )));
            }
        }
        let name = format!("{}-{}", low_hz.unwrap_or(0.0), high_hz);
        Ok(Self { name, low_hz, high_hz })
    }

    pub fn filter_spec(&self, order: usize, rate_hz: f64) -> FilterSpec {
        match self.low_hz {
            None => FilterSpec::lowpass(order, self.high_hz, rate_hz),
            Some(lo) => FilterSpec::bandpass(order, lo, self.high_hz, rate_hz),
        }
    }
}

impl std::str::FromStr for BandSpec {
    type Err = Error;

    /// `"26-50"` or `"0-25"` (a zero lower edge means low-pass).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse band {s:?}"));
        let (lo, hi) = s.trim().split_once('-').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        Self::new((lo > 0.0).then_some(lo), hi)
    }
}

/// 0–25 low-pass followed by the five 25 Hz wide band-passes up to 150 Hz.
pub fn default_bands() -> Vec<BandSpec> {
    [
        (None, 25.0),
        (Some(26.0), 50.0),
        (Some(51.0), 75.0),
        (Some(76.0), 100.0),
        (Some(101.0), 125.0),
        (Some(126.0), 150.0),
    ]
    .into_iter()
    .map(|(lo, hi)| BandSpec::new(lo, hi).expect("static band table"))
    .collect()
}

/// Designs one filter per band for the given rate.
pub fn design_bank(bands: &[BandSpec], order: usize, rate_hz: f64) -> Result<Vec<FilterStages>> {
    bands
        .iter()
        .map(|b| design_filter(&b.filter_spec(order, rate_hz)))
        .collect()
}

/// One zero-phase filtered copy of `ts` per band, in band order.
pub fn decompose_bands(ts: &TimeSeries, bands: &[BandSpec]) -> Result<Vec<TimeSeries>> {
    let bank = design_bank(bands, DEFAULT_ORDER, ts.rate_hz())?;
    apply_bank(&bank, ts)
}

pub fn apply_bank(bank: &[FilterStages], ts: &TimeSeries) -> Result<Vec<TimeSeries>> {
    bank.iter().map(|f| apply_zero_phase(f, ts)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub freq_hz: f64,
    pub magnitude_single_pass: f64,
    pub magnitude_zero_phase: f64,
}

/// Magnitude table over a frequency grid; rows outside `[0, rate/2]` error.
pub fn response_table(stages: &FilterStages, freqs: &[f64]) -> Result<Vec<ResponseRow>> {
    freqs
        .iter()
        .map(|&f| {
            let m = frequency_response(stages, f, false)?;
            Ok(ResponseRow {
                freq_hz: f,
                magnitude_single_pass: m,
                magnitude_zero_phase: m * m,
            })
        })
        .collect()
}
