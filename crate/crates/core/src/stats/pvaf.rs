//! Percent of variance accounted for by each frequency band, from the
//! increments of R² as band-filtered copies enter an OLS regression on the
//! unfiltered signal one at a time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, mean, norm};
use crate::series::TimeSeries;

/// A regressor whose component orthogonal to the earlier ones (and the
/// intercept) is below this fraction of its centered norm adds nothing.
const COLLINEAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementalPvaf {
    /// `100 · ΔR²` per regressor, in entry order.
    pub pvaf: Vec<f64>,
    /// Set when a regressor was (numerically) in the span of earlier ones;
    /// its entry is then the minimum-norm increment, 0.
    pub rank_deficient: bool,
}

impl IncrementalPvaf {
    pub fn total(&self) -> f64 {
        self.pvaf.iter().sum()
    }
}

/// Stepwise ΔR² with intercept for series inputs.
pub fn incremental_pvaf(dependent: &TimeSeries, regressors: &[TimeSeries]) -> Result<IncrementalPvaf> {
    dependent.ensure_contiguous()?;
    for r in regressors {
        r.ensure_contiguous()?;
    }
    let xs: Vec<&[f64]> = regressors.iter().map(TimeSeries::samples).collect();
    incremental_pvaf_values(dependent.samples(), &xs)
}

/// Slice form of [`incremental_pvaf`].
///
/// Regressors are centered (absorbing the intercept) and orthogonalized
/// in entry order with two Gram-Schmidt passes; the increment of R² for
/// regressor k is the squared projection of the centered dependent onto
/// the new orthonormal direction, over the total sum of squares.
pub fn incremental_pvaf_values(y: &[f64], regressors: &[&[f64]]) -> Result<IncrementalPvaf> {
    let n = y.len();
    for r in regressors {
        if r.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: r.len() });
        }
    }
    if n < regressors.len() + 2 {
        return Err(Error::SeriesTooShort {
            len: n,
            required: regressors.len() + 2,
        });
    }
    if y.iter().chain(regressors.iter().flat_map(|r| r.iter())).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in regression input".into()));
    }
    let my = mean(y);
    let yc: Vec<f64> = y.iter().map(|v| v - my).collect();
    let sst = dot(&yc, &yc);
    if !(sst > 0.0) {
        return Err(Error::ConstantDependent);
    }

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(regressors.len());
    let mut pvaf = Vec::with_capacity(regressors.len());
    let mut rank_deficient = false;
    for r in regressors {
        let mr = mean(r);
        let mut q: Vec<f64> = r.iter().map(|v| v - mr).collect();
        let scale = norm(&q);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &q);
                q.iter_mut().zip(b).for_each(|(v, bv)| *v -= c * bv);
            }
        }
        let qn = norm(&q);
        if !(scale > 0.0) || qn <= COLLINEAR_TOL * scale {
            rank_deficient = true;
            pvaf.push(0.0);
            continue;
        }
        q.iter_mut().for_each(|v| *v /= qn);
        let proj = dot(&q, &yc);
        pvaf.push(100.0 * proj * proj / sst);
        basis.push(q);
    }
    Ok(IncrementalPvaf { pvaf, rank_deficient })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvafTable {
    pub band_names: Vec<String>,
    pub per_event_pvaf: Vec<Vec<f64>>,
    pub median_pvaf: Vec<f64>,
    pub mad_pvaf: Vec<f64>,
}

/// Median with the mean-of-middle-two convention for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Raw median absolute deviation (no normal-consistency factor).
pub fn mad(values: &[f64]) -> f64 {
    let m = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    median(&dev)
}

/// Columnwise median and MAD over per-event PVAF rows.
pub fn aggregate_pvaf(band_names: &[String], rows: Vec<Vec<f64>>) -> Result<PvafTable> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("no PVAF rows to aggregate"));
    }
    let width = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != width) {
        return Err(Error::LengthMismatch { expected: width, got: bad.len() });
    }
    if band_names.len() != width {
        return Err(Error::LengthMismatch { expected: width, got: band_names.len() });
    }
    let columns: Vec<Vec<f64>> = (0..width).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    Ok(PvafTable {
        band_names: band_names.to_vec(),
        median_pvaf: columns.iter().map(|c| median(c)).collect(),
        mad_pvaf: columns.iter().map(|c| mad(c)).collect(),
        per_event_pvaf: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Brute-force oracle: R² from the normal equations of each nested model.
    fn r2_normal_equations(y: &[f64], xs: &[&[f64]]) -> f64 {
        let n = y.len();
        let p = xs.len() + 1;
        let col = |j: usize, i: usize| if j == 0 { 1.0 } else { xs[j - 1][i] };
        let mut a = vec![0.0; p * p];
        let mut b = vec![0.0; p];
        for i in 0..n {
            for j in 0..p {
                b[j] += col(j, i) * y[i];
                for k in 0..p {
                    a[j * p + k] += col(j, i) * col(k, i);
                }
            }
        }
        let beta = crate::linalg::solve(a, b).unwrap();
        let my = mean(y);
        let (mut sse, mut sst) = (0.0, 0.0);
        for i in 0..n {
            let fit: f64 = (0..p).map(|j| beta[j] * col(j, i)).sum();
            sse += (y[i] - fit).powi(2);
            sst += (y[i] - my).powi(2);
        }
        1.0 - sse / sst
    }

    #[test]
    fn perfect_first_regressor() {
        let y = noise(1, 300);
        let (n1, n2) = (noise(2, 300), noise(3, 300));
        let out = incremental_pvaf_values(&y, &[&y, &n1, &n2]).unwrap();
        assert!((out.pvaf[0] - 100.0).abs() < 1e-6);
        assert!(out.pvaf[1].abs() < 1e-6 && out.pvaf[2].abs() < 1e-6);
        assert!(!out.rank_deficient);
    }

    #[test]
    fn orthogonal_halves() {
        let n = 400;
        let s1: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * 3.0 * i as f64 / n as f64).sin()).collect();
        let s2: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * 7.0 * i as f64 / n as f64).cos()).collect();
        let y: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| a + b).collect();
        let out = incremental_pvaf_values(&y, &[&s1, &s2]).unwrap();
        assert!((out.pvaf[0] - 50.0).abs() < 1e-6);
        assert!((out.pvaf[1] - 50.0).abs() < 1e-6);
    }

    #[test]
    fn matches_nested_normal_equations() {
        let y = noise(10, 120);
        let x1 = noise(11, 120);
        let x2: Vec<f64> = noise(12, 120).iter().zip(&y).map(|(a, b)| a + 0.5 * b).collect();
        let x3 = noise(13, 120);
        let out = incremental_pvaf_values(&y, &[&x1, &x2, &x3]).unwrap();
        let r = [
            r2_normal_equations(&y, &[&x1]),
            r2_normal_equations(&y, &[&x1, &x2]),
            r2_normal_equations(&y, &[&x1, &x2, &x3]),
        ];
        let want = [100.0 * r[0], 100.0 * (r[1] - r[0]), 100.0 * (r[2] - r[1])];
        for (g, w) in out.pvaf.iter().zip(want) {
            assert!((g - w).abs() < 1e-9, "{g} vs {w}");
        }
    }

    #[test]
    fn collinear_regressor_flagged() {
        let y = noise(4, 100);
        let x = noise(5, 100);
        let x2: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        let zero = vec![0.0; 100];
        let out = incremental_pvaf_values(&y, &[&x, &x2, &zero]).unwrap();
        assert!(out.rank_deficient);
        assert_eq!(out.pvaf[1], 0.0);
        assert_eq!(out.pvaf[2], 0.0);
    }

    #[test]
    fn errors() {
        let y = noise(6, 10);
        assert!(matches!(
            incremental_pvaf_values(&y, &[&y[..9]]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            incremental_pvaf_values(&[1.0; 10], &[&y]),
            Err(Error::ConstantDependent)
        ));
        let cols: Vec<&[f64]> = vec![&y; 9];
        assert!(matches!(
            incremental_pvaf_values(&y, &cols),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn aggregate_examples() {
        let names = vec!["a".to_string(), "b".to_string()];
        let t = aggregate_pvaf(&names, vec![vec![97.0, 3.0]]).unwrap();
        assert_eq!(t.median_pvaf, vec![97.0, 3.0]);
        assert_eq!(t.mad_pvaf, vec![0.0, 0.0]);

        let t = aggregate_pvaf(&names[..1], vec![vec![98.0], vec![100.0], vec![99.0]]).unwrap();
        assert_eq!(t.median_pvaf, vec![99.0]);
        assert_eq!(t.mad_pvaf, vec![1.0]);

        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(matches!(aggregate_pvaf(&names, vec![]), Err(Error::EmptyInput(_))));
        assert!(aggregate_pvaf(&names, vec![vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    proptest! {
        #[test]
        fn rows_nonnegative_and_bounded(seed in 0u64..10_000, k in 1usize..6) {
            let y = noise(seed, 80);
            let cols: Vec<Vec<f64>> = (0..k).map(|j| noise(seed * 31 + j as u64 + 1, 80)).collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let out = incremental_pvaf_values(&y, &refs).unwrap();
            prop_assert!(out.pvaf.iter().all(|&v| v >= -1e-9));
            prop_assert!(out.total() <= 100.0 + 1e-6);
        }

        #[test]
        fn affine_invariance(seed in 0u64..10_000, alpha in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0], beta in -100.0f64..100.0) {
            let y = noise(seed, 60);
            let x1 = noise(seed + 1, 60);
            let x2: Vec<f64> = noise(seed + 2, 60).iter().zip(&y).map(|(a, b)| a + b).collect();
            let base = incremental_pvaf_values(&y, &[&x1, &x2]).unwrap();
            let ty: Vec<f64> = y.iter().map(|v| alpha * v + beta).collect();
            let moved = incremental_pvaf_values(&ty, &[&x1, &x2]).unwrap();
            for (a, b) in base.pvaf.iter().zip(&moved.pvaf) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }
    }
}
