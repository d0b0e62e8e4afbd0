//! Small dense helpers. Problems here are tiny (SG windows, two-parameter
//! fits), so plain Gaussian elimination and Gram-Schmidt suffice.

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is row-major `n × n`. Returns `None` when a pivot vanishes.
pub(crate) fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() <= 1e-14 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row * n + row];
    }
    Some(x)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn mean(a: &[f64]) -> f64 {
    a.iter().sum::<f64>() / a.len() as f64
}

/// Thin QR of an `n × 2` matrix given as two columns: returns the
/// upper-triangular `[r11, r12, r22]` and orthonormal columns, or `None`
/// when the columns are numerically collinear.
pub(crate) fn qr2(c0: &[f64], c1: &[f64]) -> Option<([f64; 3], Vec<f64>, Vec<f64>)> {
    let r11 = norm(c0);
    if r11 == 0.0 || !r11.is_finite() {
        return None;
    }
    let q0: Vec<f64> = c0.iter().map(|v| v / r11).collect();
    let r12 = dot(&q0, c1);
    let mut q1: Vec<f64> = c1.iter().zip(&q0).map(|(v, q)| v - r12 * q).collect();
    // Second Gram-Schmidt pass.
    let corr = dot(&q0, &q1);
    q1.iter_mut().zip(&q0).for_each(|(v, q)| *v -= corr * q);
    let r12 = r12 + corr;
    let r22 = norm(&q1);
    let c1_norm = norm(c1);
    if !(r22 > 1e-10 * c1_norm) {
        return None;
    }
    q1.iter_mut().for_each(|v| *v /= r22);
    Some(([r11, r12, r22], q0, q1))
}
