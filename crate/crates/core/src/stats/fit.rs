//! Two-parameter main-sequence models fitted by damped Gauss-Newton in
//! linear velocity space, with Wald 95% confidence limits.

use serde::{Deserialize, Serialize};

use super::pvaf::median;
use super::tdist;
use crate::error::{Error, Result};
use crate::linalg::{dot, mean, qr2};

pub const MAX_ITERATIONS: usize = 200;
pub const PARAM_TOL: f64 = 1e-10;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `y = a · x^b`
    PowerLaw,
    /// `y = V_max · (1 − exp(−x / C))`
    Exponential,
}

impl Model {
    pub fn coeff_names(self) -> [&'static str; 2] {
        match self {
            Model::PowerLaw => ["a", "b"],
            Model::Exponential => ["v_max", "c"],
        }
    }

    pub fn eval(self, p: [f64; 2], x: f64) -> f64 {
        match self {
            Model::PowerLaw => p[0] * x.powf(p[1]),
            Model::Exponential => p[0] * -(-x / p[1]).exp_m1(),
        }
    }

    /// Partial derivatives with respect to both parameters.
    fn grad(self, p: [f64; 2], x: f64) -> [f64; 2] {
        match self {
            Model::PowerLaw => {
                let xb = x.powf(p[1]);
                [xb, p[0] * xb * x.ln()]
            }
            Model::Exponential => {
                let e = (-x / p[1]).exp();
                [1.0 - e, -p[0] * e * x / (p[1] * p[1])]
            }
        }
    }

    fn admissible(self, p: [f64; 2]) -> bool {
        p.iter().all(|v| v.is_finite())
            && match self {
                Model::PowerLaw => true,
                Model::Exponential => p[1] > 0.0,
            }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::PowerLaw => "power_law",
            Model::Exponential => "exponential",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainSequenceFit {
    pub model: Model,
    pub coeffs: [f64; 2],
    pub ci95: [[f64; 2]; 2],
    pub std_errors: [f64; 2],
    pub r2: f64,
    pub adj_r2: f64,
    pub sse: f64,
    pub n_points: usize,
    pub iterations: usize,
    pub condition_label: String,
}

impl MainSequenceFit {
    pub fn predict(&self, amplitude: f64) -> f64 {
        self.model.eval(self.coeffs, amplitude)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.condition_label = label.into();
        self
    }
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::SeriesTooShort { len: points.len(), required: 3 });
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::NonPositiveData);
    }
    Ok(())
}

fn sse(model: Model, p: [f64; 2], points: &[(f64, f64)]) -> f64 {
    points.iter().map(|&(x, y)| (y - model.eval(p, x)).powi(2)).sum()
}

fn jacobian(model: Model, p: [f64; 2], points: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    points.iter().map(|&(x, _)| model.grad(p, x)).map(|g| (g[0], g[1])).unzip()
}

/// Log-log ordinary least squares: `ln y = ln a + b ln x`.
fn power_law_start(points: &[(f64, f64)]) -> Result<[f64; 2]> {
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let scale: f64 = lx.iter().map(|v| v * v).sum();
    if !(sxx > 1e-20 * scale.max(1.0)) {
        return Err(Error::RankDeficient);
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    Ok([(my - b * mx).exp(), b])
}

fn exponential_start(points: &[(f64, f64)]) -> [f64; 2] {
    let vmax = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    [1.05 * vmax, median(&xs)]
}

fn gauss_newton(model: Model, start: [f64; 2], points: &[(f64, f64)]) -> Result<MainSequenceFit> {
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let n = points.len();
    let mut p = start;
    let mut cur = sse(model, p, points);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (j0, j1) = jacobian(model, p, points);
        let (r, q0, q1) = qr2(&j0, &j1).ok_or(Error::RankDeficient)?;
        let resid: Vec<f64> = points.iter().map(|&(x, y)| y - model.eval(p, x)).collect();
        // δ = R⁻¹ Qᵀ r
        let (z0, z1) = (dot(&q0, &resid), dot(&q1, &resid));
        let d1 = z1 / r[2];
        let d0 = (z0 - r[1] * d1) / r[0];
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = [p[0] + lambda * d0, p[1] + lambda * d1];
            if model.admissible(trial) {
                let s = sse(model, trial, points);
                if s <= cur {
                    accepted = Some((trial, s));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let rel = |step: f64, v: f64| step.abs() / v.abs().max(1e-300);
        match accepted {
            Some((trial, s)) => {
                let change = rel(trial[0] - p[0], p[0]).max(rel(trial[1] - p[1], p[1]));
                p = trial;
                cur = s;
                if change < PARAM_TOL {
                    converged = true;
                    break;
                }
            }
            None => {
                // No decrease along the Gauss-Newton direction even at a
                // negligible step: a stationary point within rounding.
                let change = rel(d0, p[0]).max(rel(d1, p[1])) * lambda;
                if change < PARAM_TOL || cur == 0.0 {
                    converged = true;
                    break;
                }
            }
        }
        if cur == 0.0 {
            converged = true;
            break;
        }
    }
    let (j0, j1) = jacobian(model, p, points);
    if !converged {
        let resid: Vec<f64> = points.iter().map(|&(x, y)| y - model.eval(p, x)).collect();
        let g = (dot(&j0, &resid).powi(2) + dot(&j1, &resid).powi(2)).sqrt();
        return Err(Error::NoConvergence { iterations, gradient_norm: g });
    }
    let (r, _, _) = qr2(&j0, &j1).ok_or(Error::RankDeficient)?;

    let my = mean(&ys);
    let sst: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sst > 0.0) {
        return Err(Error::ConstantDependent);
    }
    let r2 = 1.0 - cur / sst;
    let dof = (n - 2) as f64;
    let adj_r2 = 1.0 - (1.0 - r2) * (n - 1) as f64 / dof;

    // Cov = s² (RᵀR)⁻¹ with R⁻¹ = [[1/r11, −r12/(r11 r22)], [0, 1/r22]].
    let s2 = cur / dof;
    let var0 = s2 * (1.0 / (r[0] * r[0]) + (r[1] * r[1]) / (r[0] * r[0] * r[2] * r[2]));
    let var1 = s2 / (r[2] * r[2]);
    let se = [var0.sqrt(), var1.sqrt()];
    let tq = tdist::quantile(0.975, dof);
    let ci95 = [
        [p[0] - tq * se[0], p[0] + tq * se[0]],
        [p[1] - tq * se[1], p[1] + tq * se[1]],
    ];
    Ok(MainSequenceFit {
        model,
        coeffs: p,
        ci95,
        std_errors: se,
        r2,
        adj_r2,
        sse: cur,
        n_points: n,
        iterations,
        condition_label: String::new(),
    })
}

/// `peak_velocity = a · amplitude^b`, least squares in velocity units,
/// started from the log-log regression.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<MainSequenceFit> {
    check_points(points)?;
    gauss_newton(Model::PowerLaw, power_law_start(points)?, points)
}

/// `peak_velocity = V_max · (1 − exp(−amplitude / C))`, started from
/// `V_max = 1.05 · max velocity`, `C = median amplitude`.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<MainSequenceFit> {
    check_points(points)?;
    gauss_newton(Model::Exponential, exponential_start(points), points)
}

pub fn fit_model(model: Model, points: &[(f64, f64)]) -> Result<MainSequenceFit> {
    match model {
        Model::PowerLaw => fit_power_law(points),
        Model::Exponential => fit_exponential(points),
    }
}
