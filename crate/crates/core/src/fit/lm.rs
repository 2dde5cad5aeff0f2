//! Bounded Levenberg–Marquardt on weighted residuals.

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use super::FitError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitTolerances {
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub ftol: f64,
    /// Stop when a step moves the parameters by less than this fraction.
    pub xtol: f64,
    /// Stop when the projected gradient cosine falls below this.
    pub gtol: f64,
    /// Largest projected gradient cosine accepted as converged.
    pub grad_accept: f64,
    pub max_iter: usize,
}

impl Default for FitTolerances {
    fn default() -> Self {
        Self { ftol: 1e-12, xtol: 1e-12, gtol: 1e-10, grad_accept: 1e-4, max_iter: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Gradient,
    CostReduction,
    StepSize,
    MaxIterations,
    Stalled,
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
    pub n_iter: usize,
    pub reason: StopReason,
    pub grad_cos: f64,
}

type Residuals<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>, FitError> + 'a;

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

fn clamp(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter().zip(lo.iter().zip(hi)).map(|(v, (l, h))| v.clamp(*l, *h)).collect()
}

/// Forward-difference Jacobian of the residual vector, column-major
/// `jac[j][i] = ∂r_i/∂x_j`.
pub(crate) fn jacobian_forward(
    f: &Residuals<'_>,
    x: &[f64],
    r0: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> Result<Vec<Vec<f64>>, FitError> {
    (0..x.len())
        .map(|j| {
            let mut h = 1e-7 * x[j].abs().max(1e-2);
            if x[j] + h > hi[j] {
                h = -h;
            }
            let mut xp = x.to_vec();
            xp[j] = (x[j] + h).clamp(lo[j], hi[j]);
            let h = xp[j] - x[j];
            let rp = f(&xp)?;
            Ok(rp.iter().zip(r0).map(|(a, b)| (a - b) / h).collect())
        })
        .collect()
}

/// Second-order Jacobian: central differences, or three-point one-sided
/// differences next to a bound.
pub(crate) fn jacobian_central(
    f: &Residuals<'_>,
    x: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> Result<Vec<Vec<f64>>, FitError> {
    (0..x.len())
        .map(|j| {
            let h = 1e-5 * x[j].abs().max(1e-2);
            let at = |v: f64| -> Result<Vec<f64>, FitError> {
                let mut xp = x.to_vec();
                xp[j] = v;
                f(&xp)
            };
            if x[j] - h >= lo[j] && x[j] + h <= hi[j] {
                let (a, b) = (at(x[j] + h)?, at(x[j] - h)?);
                Ok(a.iter().zip(&b).map(|(p, m)| (p - m) / (2.0 * h)).collect())
            } else {
                let s = if x[j] + 2.0 * h <= hi[j] { h } else { -h };
                let (f0, f1, f2) = (at(x[j])?, at(x[j] + s)?, at(x[j] + 2.0 * s)?);
                Ok((0..f0.len()).map(|i| (-3.0 * f0[i] + 4.0 * f1[i] - f2[i]) / (2.0 * s)).collect())
            }
        })
        .collect()
}

pub(crate) fn normal_matrix(jac: &[Vec<f64>]) -> Mat<f64> {
    let p = jac.len();
    Mat::from_fn(p, p, |a, b| jac[a].iter().zip(&jac[b]).map(|(x, y)| x * y).sum())
}

fn gradient(jac: &[Vec<f64>], r: &[f64]) -> Vec<f64> {
    jac.iter().map(|col| col.iter().zip(r).map(|(a, b)| a * b).sum()).collect()
}

/// Largest cosine between the residual and a Jacobian column, ignoring
/// directions blocked by an active bound.
fn projected_gradient_cosine(jac: &[Vec<f64>], r: &[f64], g: &[f64], x: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rn == 0.0 {
        return 0.0;
    }
    (0..x.len())
        .map(|j| {
            let blocked = (x[j] <= lo[j] && g[j] > 0.0) || (x[j] >= hi[j] && g[j] < 0.0);
            let cn = jac[j].iter().map(|v| v * v).sum::<f64>().sqrt();
            if blocked || cn == 0.0 {
                0.0
            } else {
                g[j].abs() / (cn * rn)
            }
        })
        .fold(0.0, f64::max)
}

pub(crate) fn minimize(
    f: &Residuals<'_>,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    tol: &FitTolerances,
) -> Result<LmOutcome, FitError> {
    let p = x0.len();
    let mut x = clamp(x0, lo, hi);
    let mut r = f(&x)?;
    let mut c = cost(&r);
    let mut mu = -1.0;
    let mut nu = 2.0;
    let mut n_iter = 0;
    let mut grad_cos;
    let reason = loop {
        let jac = jacobian_forward(f, &x, &r, lo, hi)?;
        let a = normal_matrix(&jac);
        let g = gradient(&jac, &r);
        grad_cos = projected_gradient_cosine(&jac, &r, &g, &x, lo, hi);
        if grad_cos <= tol.gtol {
            break StopReason::Gradient;
        }
        if n_iter >= tol.max_iter {
            break StopReason::MaxIterations;
        }
        let max_diag = (0..p).map(|i| a[(i, i)]).fold(0.0, f64::max);
        if !(max_diag > 0.0) {
            return Err(FitError::SingularJacobian);
        }
        if mu < 0.0 {
            mu = 1e-3 * max_diag;
        }
        // variables held on a bound by the gradient stay put this iteration
        let blocked: Vec<bool> =
            (0..p).map(|j| (x[j] <= lo[j] && g[j] > 0.0) || (x[j] >= hi[j] && g[j] < 0.0)).collect();
        let mut accepted = false;
        let mut small_step = false;
        let mut small_gain = false;
        for _ in 0..40 {
            let mut m = a.clone();
            for i in 0..p {
                m[(i, i)] += mu * a[(i, i)].max(1e-12 * max_diag);
            }
            for j in (0..p).filter(|&j| blocked[j]) {
                for k in 0..p {
                    m[(j, k)] = 0.0;
                    m[(k, j)] = 0.0;
                }
                m[(j, j)] = 1.0;
            }
            let rhs = Mat::from_fn(p, 1, |i, _| if blocked[i] { 0.0 } else { -g[i] });
            let delta = m.partial_piv_lu().solve(&rhs);
            let trial: Vec<f64> = (0..p).map(|i| x[i] + delta[(i, 0)]).collect();
            let x_new = clamp(&trial, lo, hi);
            let step: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let step_norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
            let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if step_norm <= tol.xtol * (x_norm + tol.xtol) {
                small_step = true;
                break;
            }
            let r_new = f(&x_new)?;
            let c_new = cost(&r_new);
            let a_step: Vec<f64> = (0..p).map(|i| (0..p).map(|k| a[(i, k)] * step[k]).sum()).collect();
            let predicted = -(0..p).map(|i| step[i] * (g[i] + 0.5 * a_step[i])).sum::<f64>();
            let rho = if predicted > 0.0 { (c - c_new) / predicted } else { -1.0 };
            if rho > 0.0 && c_new.is_finite() {
                small_gain = c - c_new <= tol.ftol * c;
                x = x_new;
                r = r_new;
                c = c_new;
                mu *= (1.0_f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                accepted = true;
                break;
            }
            mu *= nu;
            nu *= 2.0;
        }
        if small_step {
            break StopReason::StepSize;
        }
        if !accepted {
            break StopReason::Stalled;
        }
        n_iter += 1;
        if small_gain {
            let jac = jacobian_forward(f, &x, &r, lo, hi)?;
            let g = gradient(&jac, &r);
            grad_cos = projected_gradient_cosine(&jac, &r, &g, &x, lo, hi);
            break StopReason::CostReduction;
        }
    };
    Ok(LmOutcome { x, residuals: r, n_iter, reason, grad_cos })
}
