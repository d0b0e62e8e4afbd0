//! Comparisons across filter conditions: paired t-test, difference curves
//! and confidence-interval overlap.

use serde::{Deserialize, Serialize};

use super::fit::{MainSequenceFit, Model};
use super::tdist;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: usize,
    pub p_two_tailed: f64,
}

/// Paired t-test on `d = x − y`.
pub fn paired_t_test(x: &[f64], y: &[f64]) -> Result<TTestResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), got: y.len() });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::SeriesTooShort { len: n, required: 2 });
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let df = n - 1;
    if d.iter().all(|&v| v == 0.0) {
        return Ok(TTestResult { t: 0.0, df, p_two_tailed: 1.0 });
    }
    let m = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - m).powi(2)).sum::<f64>() / df as f64;
    if d.iter().all(|&v| v == d[0]) || !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let t = m / (var.sqrt() / (n as f64).sqrt());
    Ok(TTestResult {
        t,
        df,
        p_two_tailed: tdist::two_tailed_p(t, df as f64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceCurve {
    pub reference_label: String,
    pub compare_label: String,
    pub amplitudes: Vec<f64>,
    /// `predict_ref(x) − predict_cmp(x)` on the grid.
    pub diff: Vec<f64>,
    pub crossovers: Vec<f64>,
}

/// Difference of two fitted curves on an ascending amplitude grid, with
/// sign changes located by linear interpolation. Exact zeros on the grid
/// count as crossings only when the sign on either side differs.
pub fn difference_curve(
    reference: &MainSequenceFit,
    compare: &MainSequenceFit,
    amplitudes: &[f64],
) -> Result<DifferenceCurve> {
    if amplitudes.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if reference.model != compare.model {
        return Err(Error::MixedModels);
    }
    if amplitudes.iter().any(|&x| !(x > 0.0)) || amplitudes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("amplitude grid must be positive and ascending".into()));
    }
    let diff: Vec<f64> = amplitudes
        .iter()
        .map(|&x| reference.predict(x) - compare.predict(x))
        .collect();
    let mut crossovers = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (i, (&x, &d)) in amplitudes.iter().zip(&diff).enumerate() {
        if d == 0.0 {
            continue;
        }
        if let Some((lx, ld)) = last {
            if ld.signum() != d.signum() {
                // Zeros between the two nonzero points: report the zero
                // itself when there is exactly one grid zero in between.
                let prev = i - 1;
                let crossing = if diff[prev] == 0.0 {
                    let zeros: Vec<f64> = amplitudes[..i]
                        .iter()
                        .zip(&diff[..i])
                        .rev()
                        .take_while(|(_, v)| **v == 0.0)
                        .map(|(x, _)| *x)
                        .collect();
                    zeros[zeros.len() / 2]
                } else {
                    lx + (x - lx) * ld / (ld - d)
                };
                crossovers.push(crossing);
            }
        }
        last = Some((x, d));
    }
    Ok(DifferenceCurve {
        reference_label: reference.condition_label.clone(),
        compare_label: compare.condition_label.clone(),
        amplitudes: amplitudes.to_vec(),
        diff,
        crossovers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overlap {
    Distinct,
    NotDistinct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientOverlap {
    pub name: String,
    pub reference_estimate: f64,
    pub ci95: [f64; 2],
    pub flag: Overlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionOverlap {
    pub condition_label: String,
    pub coefficients: Vec<CoefficientOverlap>,
}

impl ConditionOverlap {
    pub fn all_not_distinct(&self) -> bool {
        self.coefficients.iter().all(|c| c.flag == Overlap::NotDistinct)
    }
}

/// A condition's coefficient is not distinct from the reference when its
/// 95% interval contains the reference point estimate.
pub fn ci_overlap_report(reference: &MainSequenceFit, conditions: &[MainSequenceFit]) -> Result<Vec<ConditionOverlap>> {
    if conditions.iter().any(|c| c.model != reference.model) {
        return Err(Error::MixedModels);
    }
    let names = reference.model.coeff_names();
    Ok(conditions
        .iter()
        .map(|c| ConditionOverlap {
            condition_label: c.condition_label.clone(),
            coefficients: (0..2)
                .map(|k| {
                    let r = reference.coeffs[k];
                    let ci = c.ci95[k];
                    CoefficientOverlap {
                        name: names[k].to_string(),
                        reference_estimate: r,
                        ci95: ci,
                        flag: if ci[0] <= r && r <= ci[1] {
                            Overlap::NotDistinct
                        } else {
                            Overlap::Distinct
                        },
                    }
                })
                .collect(),
        })
        .collect())
}

/// A fit built directly from coefficients, for curves and reports that do
/// not come from data.
pub fn fixed_fit(model: Model, coeffs: [f64; 2], ci95: [[f64; 2]; 2], label: &str) -> MainSequenceFit {
    MainSequenceFit {
        model,
        coeffs,
        ci95,
        std_errors: [f64::NAN; 2],
        r2: f64::NAN,
        adj_r2: f64::NAN,
        sse: f64::NAN,
        n_points: 0,
        iterations: 0,
        condition_label: label.to_string(),
    }
}
