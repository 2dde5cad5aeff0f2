//! Least-squares estimation of model parameters from correlation or DCP
//! curves, and the DCP visibility estimator.

mod lm;
mod visibility;

use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bloch::dcp_damped;
use crate::correlator::{CorrelationCurve, Correlator};
use crate::liouville::{build_level_model, Variant};
use crate::spin::Polarization;
use crate::units::{PhysicalParams, PARAM_NAMES};

pub use lm::{FitTolerances, StopReason};
pub use visibility::{visibility_estimate, VisibilityEstimate, VisibilityOptions};

/// Parameters of the analytic DCP model.
pub const SHAPE_PARAMS: [&str; 4] = ["A_V", "T_D", "theta_B", "delta2"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("unknown fit parameter `{0}`")]
    UnknownParameter(String),
    #[error("invalid bounds for `{0}`")]
    InvalidBounds(String),
    #[error("initial value of `{0}` is missing or outside its bounds")]
    InitOutOfBounds(String),
    #[error("need at least {needed} data points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("data, grid and weights differ in length")]
    LengthMismatch,
    #[error("fit did not converge after {} iterations ({:?})", .0.n_iter, .0.reason)]
    DidNotConverge(Box<FitResult>),
    #[error("Jacobian is singular at the solution")]
    SingularJacobian,
    #[error("model evaluation failed: {0}")]
    Model(String),
}

/// Which curve column a numeric model is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveColumn {
    G2Par,
    G2Cross,
    #[default]
    Dcp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitModel {
    /// Damped analytic DCP with parameters [`SHAPE_PARAMS`].
    DcpDamped,
    /// Full-solver curve; free parameters are [`PhysicalParams`] fields.
    G2Numeric { base: PhysicalParams, variant: Variant, first: Polarization, column: CurveColumn },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    pub model: FitModel,
    pub free: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    /// Values of model parameters that are not free.
    pub fixed: BTreeMap<String, f64>,
    pub taus: Vec<f64>,
    pub data: Vec<f64>,
    pub weights: Option<Vec<f64>>,
}

/// Default box for an analytic-model parameter. θ_B enters only through
/// cos 2θ_B, so its box is [0, π/2].
pub fn default_bounds(name: &str) -> Option<(f64, f64)> {
    match name {
        "A_V" => Some((0.0, 1.0)),
        "T_D" => Some((1e-2, 1e6)),
        "theta_B" => Some((0.0, std::f64::consts::FRAC_PI_2)),
        "delta2" => Some((1e-3, 100.0)),
        _ => None,
    }
}

impl FitProblem {
    /// Analytic DCP fit with all four shape parameters free.
    pub fn dcp_damped(taus: Vec<f64>, data: Vec<f64>) -> Self {
        Self {
            model: FitModel::DcpDamped,
            free: SHAPE_PARAMS.iter().map(|s| s.to_string()).collect(),
            bounds: SHAPE_PARAMS.iter().map(|s| default_bounds(s).unwrap()).collect(),
            fixed: BTreeMap::new(),
            taus,
            data,
            weights: None,
        }
    }

    /// Analytic DCP fit to the unmasked points of a curve. Raw counts, when
    /// present, give Poisson weights `1/max(counts, 1)`.
    pub fn from_curve(curve: &CorrelationCurve) -> Self {
        let mut taus = Vec::new();
        let mut data = Vec::new();
        let mut weights = Vec::new();
        for (k, d) in curve.dcp.iter().enumerate() {
            if let Some(d) = d {
                taus.push(curve.taus[k]);
                data.push(*d);
                if let Some(c) = &curve.counts {
                    weights.push(1.0 / c[k].max(1.0));
                }
            }
        }
        let mut p = Self::dcp_damped(taus, data);
        if curve.counts.is_some() {
            p.weights = Some(weights);
        }
        p
    }

    /// Restrict the free set, fixing the others at the given values.
    pub fn with_free(mut self, free: &[(&str, (f64, f64))], fixed: &[(&str, f64)]) -> Self {
        self.free = free.iter().map(|(n, _)| n.to_string()).collect();
        self.bounds = free.iter().map(|(_, b)| *b).collect();
        self.fixed = fixed.iter().map(|(n, v)| (n.to_string(), *v)).collect();
        self
    }

    pub fn validate(&self) -> Result<(), FitError> {
        for (name, (lo, hi)) in self.free.iter().zip(&self.bounds) {
            let known = match self.model {
                FitModel::DcpDamped => SHAPE_PARAMS.contains(&name.as_str()),
                FitModel::G2Numeric { .. } => PARAM_NAMES.contains(&name.as_str()),
            };
            if !known {
                return Err(FitError::UnknownParameter(name.clone()));
            }
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(FitError::InvalidBounds(name.clone()));
            }
        }
        if self.free.len() != self.bounds.len() || self.taus.len() != self.data.len() {
            return Err(FitError::LengthMismatch);
        }
        if let Some(w) = &self.weights {
            if w.len() != self.data.len() || w.iter().any(|x| !(*x >= 0.0)) {
                return Err(FitError::LengthMismatch);
            }
        }
        if self.model == FitModel::DcpDamped {
            for name in SHAPE_PARAMS {
                if !self.free.iter().any(|f| f == name) && !self.fixed.contains_key(name) {
                    return Err(FitError::InitOutOfBounds(name.to_string()));
                }
            }
        }
        let needed = 2 * self.free.len();
        if self.data.len() < needed {
            return Err(FitError::TooFewPoints { needed, got: self.data.len() });
        }
        Ok(())
    }

    fn value_of(&self, name: &str, x: &[f64]) -> f64 {
        match self.free.iter().position(|f| f == name) {
            Some(i) => x[i],
            None => self.fixed[name],
        }
    }

    /// Model prediction on the data grid for free-parameter vector `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, FitError> {
        match &self.model {
            FitModel::DcpDamped => {
                let [a_v, t_d, theta, delta2] = SHAPE_PARAMS.map(|n| self.value_of(n, x));
                self.taus
                    .iter()
                    .map(|&t| dcp_damped(t, delta2, theta, a_v, t_d).map_err(|e| FitError::Model(e.to_string())))
                    .collect()
            }
            FitModel::G2Numeric { base, variant, first, column } => {
                let mut p = *base;
                for (name, v) in self.fixed.iter().chain(self.free.iter().zip(x.iter())) {
                    p.set(name, *v).map_err(|e| FitError::Model(e.to_string()))?;
                }
                let model = build_level_model(&p, *variant);
                let curve = Correlator::new(&model)
                    .and_then(|c| c.curve(*first, &self.taus))
                    .map_err(|e| FitError::Model(e.to_string()))?;
                Ok(match column {
                    CurveColumn::G2Par => curve.g2_par,
                    CurveColumn::G2Cross => curve.g2_cross,
                    CurveColumn::Dcp => curve.dcp.into_iter().map(|d| d.unwrap_or(0.0)).collect(),
                })
            }
        }
    }

    /// Weighted residuals `sqrt(w)·(model − data)`.
    pub fn residuals(&self, x: &[f64]) -> Result<Vec<f64>, FitError> {
        let m = self.evaluate(x)?;
        Ok(m.iter()
            .zip(&self.data)
            .enumerate()
            .map(|(i, (a, b))| {
                let w = self.weights.as_ref().map_or(1.0, |w| w[i]);
                w.sqrt() * (a - b)
            })
            .collect())
    }

    /// Weighted residual sum of squares.
    pub fn objective(&self, x: &[f64]) -> Result<f64, FitError> {
        Ok(self.residuals(x)?.iter().map(|r| r * r).sum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    /// Row-major `s²·(JᵀWJ)⁻¹` with `s² = RSS/(m − p)`, taken over the
    /// parameters off their bounds. Rows and columns of pinned parameters
    /// are NaN.
    pub covariance: Vec<Vec<f64>>,
    /// Estimate sits on a bound.
    pub at_bound: Vec<bool>,
    /// sqrt of the weighted RSS.
    pub residual_norm: f64,
    pub rss: f64,
    pub n_points: usize,
    pub n_iter: usize,
    pub converged: bool,
    pub reason: StopReason,
    /// Projected gradient cosine at the solution.
    pub gradient_norm: f64,
    /// Relative difference of the forward and central Jacobians.
    pub jacobian_rel_error: f64,
}

impl FitResult {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.estimates[i])
    }

    /// NaN for a parameter pinned on a bound.
    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| {
            let v = self.covariance[i][i];
            if v.is_nan() {
                v
            } else {
                v.max(0.0).sqrt()
            }
        })
    }

    pub fn is_at_bound(&self, name: &str) -> Option<bool> {
        self.index(name).map(|i| self.at_bound[i])
    }

    pub fn as_map(&self) -> BTreeMap<String, f64> {
        self.names.iter().cloned().zip(self.estimates.iter().copied()).collect()
    }
}

/// Levenberg–Marquardt fit of `problem` from `init`.
pub fn fit(problem: &FitProblem, init: &BTreeMap<String, f64>, tol: &FitTolerances) -> Result<FitResult, FitError> {
    let (result, singular) = solve(problem, init, tol)?;
    if singular {
        Err(FitError::SingularJacobian)
    } else if result.converged {
        Ok(result)
    } else {
        Err(FitError::DidNotConverge(Box::new(result)))
    }
}

/// Best iterate regardless of convergence; the flag reports a singular
/// normal matrix over the unpinned parameters, in which case the whole
/// covariance is NaN.
pub fn solve(
    problem: &FitProblem,
    init: &BTreeMap<String, f64>,
    tol: &FitTolerances,
) -> Result<(FitResult, bool), FitError> {
    problem.validate()?;
    let lo: Vec<f64> = problem.bounds.iter().map(|b| b.0).collect();
    let hi: Vec<f64> = problem.bounds.iter().map(|b| b.1).collect();
    let x0 = problem
        .free
        .iter()
        .zip(&problem.bounds)
        .map(|(n, (l, h))| match init.get(n) {
            Some(v) if v >= l && v <= h => Ok(*v),
            _ => Err(FitError::InitOutOfBounds(n.clone())),
        })
        .collect::<Result<Vec<f64>, _>>()?;

    let f = |x: &[f64]| problem.residuals(x);
    let out = lm::minimize(&f, &x0, &lo, &hi, tol)?;

    let jc = lm::jacobian_central(&f, &out.x, &lo, &hi)?;
    let jf = lm::jacobian_forward(&f, &out.x, &out.residuals, &lo, &hi)?;
    let diff: f64 = jc.iter().zip(&jf).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2))).sum();
    let norm: f64 = jc.iter().flat_map(|a| a.iter().map(|x| x * x)).sum();
    let jacobian_rel_error = if norm > 0.0 { (diff / norm).sqrt() } else { 0.0 };

    let rss: f64 = out.residuals.iter().map(|r| r * r).sum();
    let m = problem.data.len();
    let p = out.x.len();
    let at_bound: Vec<bool> = (0..p).map(|i| out.x[i] <= lo[i] || out.x[i] >= hi[i]).collect();
    let inner: Vec<usize> = (0..p).filter(|&i| !at_bound[i]).collect();
    let jc_inner: Vec<Vec<f64>> = inner.iter().map(|&i| jc[i].clone()).collect();
    let x_inner: Vec<f64> = inner.iter().map(|&i| out.x[i]).collect();
    let mut cov = vec![vec![f64::NAN; p]; p];
    let singular = match covariance(&jc_inner, &x_inner, rss / (m - p).max(1) as f64) {
        Ok(c) => {
            for (a, &i) in inner.iter().enumerate() {
                for (b, &j) in inner.iter().enumerate() {
                    cov[i][j] = c[a][b];
                }
            }
            false
        }
        Err(_) => true,
    };

    let converged = matches!(out.reason, StopReason::Gradient | StopReason::CostReduction | StopReason::StepSize)
        && out.grad_cos <= tol.grad_accept;
    let result = FitResult {
        names: problem.free.clone(),
        estimates: out.x,
        covariance: cov,
        at_bound,
        residual_norm: rss.sqrt(),
        rss,
        n_points: m,
        n_iter: out.n_iter,
        converged,
        reason: out.reason,
        gradient_norm: out.grad_cos,
        jacobian_rel_error,
    };
    Ok((result, singular))
}

/// `s²·(JᵀJ)⁻¹`. Rank is judged on the Jacobian taken with respect to the
/// log of each parameter, so the test does not depend on parameter units.
fn covariance(jac: &[Vec<f64>], x: &[f64], s2: f64) -> Result<Vec<Vec<f64>>, FitError> {
    let p = jac.len();
    if p == 0 {
        return Ok(vec![]);
    }
    let scale: Vec<f64> = x.iter().map(|v| if *v != 0.0 { v.abs() } else { 1.0 }).collect();
    let scaled: Vec<Vec<f64>> = jac.iter().zip(&scale).map(|(c, s)| c.iter().map(|v| v * s).collect()).collect();
    let a = lm::normal_matrix(&scaled);
    let sv = a.singular_values().map_err(|_| FitError::SingularJacobian)?;
    if sv.is_empty() || !(sv[p - 1] > 1e-14 * sv[0]) {
        return Err(FitError::SingularJacobian);
    }
    let inv = a.partial_piv_lu().solve(Mat::<f64>::identity(p, p));
    Ok((0..p).map(|i| (0..p).map(|j| s2 * inv[(i, j)] * scale[i] * scale[j]).collect()).collect())
}
