use std::collections::HashMap;

use faer::c64;
use faer::linalg::solvers::Solve;

use crate::linalg::{expm, identity, max_abs, scale_re, trace, unvectorize, CMat, ONE};

use super::{DensityMatrix, LiouvilleError, Liouvillian};

/// Largest accepted condition number of the eigenvector matrix.
const MAX_EIGENBASIS_CONDITION: f64 = 1e8;
/// Largest accepted relative error of `R Λ R⁻¹` against `L`.
const MAX_RECONSTRUCTION_ERROR: f64 = 1e-9;
/// Trace drift that aborts a propagation.
pub const TRACE_DRIFT_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
struct Spectral {
    lambda: Vec<c64>,
    r: CMat,
    r_inv: CMat,
}

/// `exp(L τ)` evaluator. Uses the eigendecomposition of `L` when it is well
/// conditioned and falls back to the Padé matrix exponential otherwise.
#[derive(Debug, Clone)]
pub struct Propagator {
    n: usize,
    l: CMat,
    spectral: Option<Spectral>,
}

impl Propagator {
    pub fn new(l: &Liouvillian) -> Self {
        let spectral = spectral_decomposition(l.matrix());
        Self { n: l.dim(), l: l.matrix().clone(), spectral }
    }

    /// Force the matrix-exponential route.
    pub fn dense(l: &Liouvillian) -> Self {
        Self { n: l.dim(), l: l.matrix().clone(), spectral: None }
    }

    pub fn is_spectral(&self) -> bool {
        self.spectral.is_some()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `exp(L τ) v` for a vectorized state `v`.
    pub fn apply(&self, v: &CMat, tau: f64) -> CMat {
        match &self.spectral {
            Some(s) => {
                let c = &s.r_inv * v;
                let scaled = CMat::from_fn(c.nrows(), 1, |k, _| c[(k, 0)] * (s.lambda[k] * tau).exp());
                &s.r * &scaled
            }
            None => &expm(&scale_re(&self.l, tau)) * v,
        }
    }

    /// `exp(L τ_k) v` for every τ of a sorted grid.
    pub fn evolve_grid(&self, v: &CMat, taus: &[f64]) -> Vec<CMat> {
        match &self.spectral {
            Some(_) => taus.iter().map(|&t| self.apply(v, t)).collect(),
            None => {
                let mut cache: HashMap<u64, CMat> = HashMap::new();
                let mut out = Vec::with_capacity(taus.len());
                let mut prev_t = 0.0;
                let mut cur = v.clone();
                for &t in taus {
                    let dt = t - prev_t;
                    if dt != 0.0 {
                        let step = cache.entry(dt.to_bits()).or_insert_with(|| expm(&scale_re(&self.l, dt)));
                        cur = &*step * &cur;
                    }
                    prev_t = t;
                    out.push(cur.clone());
                }
                out
            }
        }
    }

    /// `Tr[O exp(L τ) ρ]` for each τ, with `obs` the row from
    /// [`observable_row`].
    pub fn expectation(&self, obs: &[c64], v: &CMat, taus: &[f64]) -> Vec<c64> {
        match &self.spectral {
            Some(s) => {
                let modes = self.mode_weights(s, obs, v);
                taus.iter().map(|&t| modes.iter().map(|&(lam, w)| w * (lam * t).exp()).sum()).collect()
            }
            None => self.evolve_grid(v, taus).iter().map(|x| dot(obs, x)).collect(),
        }
    }

    /// `∫_a^b Tr[O exp(L τ) ρ] dτ`.
    pub fn expectation_integral(&self, obs: &[c64], v: &CMat, a: f64, b: f64) -> c64 {
        match &self.spectral {
            Some(s) => self
                .mode_weights(s, obs, v)
                .iter()
                .map(|&(lam, w)| {
                    if lam.norm() * (b - a).abs() < 1e-10 {
                        w * (lam * a).exp() * (b - a)
                    } else {
                        w * ((lam * b).exp() - (lam * a).exp()) / lam
                    }
                })
                .sum(),
            None => {
                // exp([[L, u], [0, 0]] t) carries ∫_0^t exp(L s) u ds in its last column
                let u = self.apply(v, a);
                let nn = u.nrows();
                let aug = CMat::from_fn(nn + 1, nn + 1, |i, j| match (i < nn, j < nn) {
                    (true, true) => self.l[(i, j)],
                    (true, false) => u[(i, 0)],
                    _ => c64::new(0.0, 0.0),
                });
                let e = expm(&scale_re(&aug, b - a));
                (0..nn).map(|k| obs[k] * e[(k, nn)]).sum()
            }
        }
    }

    fn mode_weights(&self, s: &Spectral, obs: &[c64], v: &CMat) -> Vec<(c64, c64)> {
        let c = &s.r_inv * v;
        (0..s.lambda.len())
            .map(|m| {
                let w: c64 = (0..obs.len()).map(|k| obs[k] * s.r[(k, m)]).sum();
                (s.lambda[m], w * c[(m, 0)])
            })
            .collect()
    }
}

fn spectral_decomposition(l: &CMat) -> Option<Spectral> {
    let eig = l.eigen().ok()?;
    let nn = l.nrows();
    let r = CMat::from_fn(nn, nn, |i, j| eig.U()[(i, j)]);
    let lambda: Vec<c64> = (0..nn).map(|k| eig.S().column_vector()[k]).collect();
    let sv = r.singular_values().ok()?;
    let (hi, lo) = (sv[0], sv[nn - 1]);
    if !(lo > 0.0) || hi / lo > MAX_EIGENBASIS_CONDITION {
        return None;
    }
    let r_inv = r.partial_piv_lu().solve(&identity(nn));
    let scaled = CMat::from_fn(nn, nn, |i, j| r[(i, j)] * lambda[j]);
    let err = max_abs(&(&(&scaled * &r_inv) - l));
    if err > MAX_RECONSTRUCTION_ERROR * max_abs(l).max(1.0) {
        return None;
    }
    Some(Spectral { lambda, r, r_inv })
}

/// Row `o` with `o · vec(ρ) = Tr[O ρ]` under column stacking.
pub fn observable_row(o: &CMat) -> Vec<c64> {
    let n = o.nrows();
    (0..n * n).map(|k| o[(k / n, k % n)]).collect()
}

fn dot(row: &[c64], col: &CMat) -> c64 {
    row.iter().enumerate().map(|(k, &o)| o * col[(k, 0)]).sum()
}

/// Validate a propagation grid: finite, non-negative and sorted.
pub fn check_grid(taus: &[f64]) -> Result<(), LiouvilleError> {
    if taus.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(LiouvilleError::InvalidGrid("times must be finite and non-negative".into()));
    }
    if taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(LiouvilleError::InvalidGrid("times must be sorted".into()));
    }
    Ok(())
}

/// `ρ(τ) = exp(L τ) ρ0` on a grid.
pub fn propagate(l: &Liouvillian, rho0: &DensityMatrix, taus: &[f64]) -> Result<Vec<DensityMatrix>, LiouvilleError> {
    propagate_with(&Propagator::new(l), rho0, taus)
}

/// [`propagate`] with a prebuilt propagator.
pub fn propagate_with(
    prop: &Propagator,
    rho0: &DensityMatrix,
    taus: &[f64],
) -> Result<Vec<DensityMatrix>, LiouvilleError> {
    check_grid(taus)?;
    let n = prop.dim();
    let v0 = rho0.vec();
    let out = prop.evolve_grid(&v0, taus);
    out.into_iter()
        .zip(taus)
        .map(|(v, &t)| {
            if t == 0.0 {
                return Ok(rho0.clone());
            }
            let m = unvectorize(&v, n);
            let drift = (trace(&m) - ONE).norm();
            if drift > TRACE_DRIFT_TOL || !drift.is_finite() {
                return Err(LiouvilleError::PropagationUnstable { tau: t, drift });
            }
            Ok(DensityMatrix::from_matrix_unchecked(m))
        })
        .collect()
}
