use faer::linalg::solvers::Solve;
use faer::{c64, Side};

use crate::linalg::{
    conj, dagger, hermiticity_error, identity, kron, max_abs, scale, trace, transpose, unvectorize, vectorize, CMat, I,
    ONE, ZERO,
};
use crate::units::HBAR;

use super::{LevelModel, LiouvilleError};

/// Tolerances of the [`DensityMatrix`] invariants.
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Hermitian, unit-trace, positive semidefinite state.
#[derive(Debug, Clone)]
pub struct DensityMatrix(CMat);

impl DensityMatrix {
    pub fn new(m: CMat) -> Result<Self, LiouvilleError> {
        Self::check(&m, HERMITIAN_TOL, TRACE_TOL, POSITIVITY_TOL)?;
        Ok(Self(m))
    }

    /// Validate against explicit tolerances.
    pub fn check(m: &CMat, herm: f64, tr: f64, pos: f64) -> Result<(), LiouvilleError> {
        if m.nrows() != m.ncols() {
            return Err(LiouvilleError::NotADensityMatrix("not square".into()));
        }
        let h = hermiticity_error(m);
        if h > herm {
            return Err(LiouvilleError::NotADensityMatrix(format!("Hermiticity error {h:.2e}")));
        }
        let t = trace(m);
        if (t - ONE).norm() > tr {
            return Err(LiouvilleError::NotADensityMatrix(format!("trace {t}")));
        }
        let lo = min_eigenvalue(m);
        if lo < -pos {
            return Err(LiouvilleError::NotADensityMatrix(format!("eigenvalue {lo:.2e}")));
        }
        Ok(())
    }

    /// Wrap without checks. Callers guarantee the invariants up to round-off.
    pub fn from_matrix_unchecked(m: CMat) -> Self {
        Self(m)
    }

    /// Projector onto basis state `i`.
    pub fn pure_level(n: usize, i: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        m[(i, i)] = ONE;
        Self(m)
    }

    /// `|ψ⟩⟨ψ|` for a normalized column `psi`.
    pub fn from_pure(psi: &CMat) -> Result<Self, LiouvilleError> {
        Self::new(psi * dagger(psi))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    pub fn population(&self, i: usize) -> f64 {
        self.0[(i, i)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.population(i)).collect()
    }

    pub fn trace(&self) -> c64 {
        trace(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0)
    }

    pub fn vec(&self) -> CMat {
        vectorize(&self.0)
    }

    /// Largest entry-wise distance.
    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        max_abs(&(&self.0 - &other.0))
    }
}

fn min_eigenvalue(m: &CMat) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let herm = CMat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    herm.self_adjoint_eigenvalues(Side::Lower).map(|v| v[0]).unwrap_or(f64::NAN)
}

/// Lindblad generator acting on column-stacked density matrices, rad/ns.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    n: usize,
    matrix: CMat,
}

impl Liouvillian {
    /// Wrap an n²×n² superoperator.
    pub fn from_matrix(n: usize, matrix: CMat) -> Self {
        assert_eq!(matrix.nrows(), n * n);
        assert_eq!(matrix.ncols(), n * n);
        Self { n, matrix }
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// `L[ρ]` as a matrix.
    pub fn apply(&self, rho: &CMat) -> CMat {
        unvectorize(&(&self.matrix * &vectorize(rho)), self.n)
    }

    /// Largest |Σ_i L[(i,i), k]| over columns k: zero for a trace-preserving
    /// generator.
    pub fn trace_functional_residual(&self) -> f64 {
        let n = self.n;
        (0..n * n).map(|k| (0..n).map(|i| self.matrix[(i + n * i, k)]).sum::<c64>().norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Result<Vec<c64>, LiouvilleError> {
        self.matrix.eigenvalues().map_err(|e| LiouvilleError::Eigen(format!("{e:?}")))
    }
}

/// Vectorized Lindblad generator of a level model.
pub fn build_liouvillian(m: &LevelModel) -> Liouvillian {
    let n = m.dim();
    let id = identity(n);
    let h = m.h.matrix();
    let mi = ZERO - I * (1.0 / HBAR);
    let mut l = scale(&(&kron(&id, h) - &kron(&transpose(h), &id)), mi);
    for c in m.active_channels() {
        let op = c.lindblad_operator(n);
        let ldl = &dagger(&op) * &op;
        let term = &(&kron(&conj(&op), &op) - &scale(&kron(&id, &ldl), ONE * 0.5))
            - &scale(&kron(&transpose(&ldl), &id), ONE * 0.5);
        l = &l + &term;
    }
    Liouvillian { n, matrix: l }
}

/// Singular values below this fraction of the largest count as kernel.
pub const KERNEL_TOL: f64 = 1e-11;
/// Largest tolerated negative eigenvalue of the steady state.
pub const STEADY_STATE_NEGATIVITY: f64 = 1e-7;

/// Unique stationary state of `l`.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix, LiouvilleError> {
    let n = l.dim();
    let nn = n * n;
    let sv = l.matrix.singular_values().map_err(|e| LiouvilleError::Eigen(format!("{e:?}")))?;
    let top = sv.first().copied().unwrap_or(0.0);
    let kernel = sv.iter().filter(|&&s| s <= KERNEL_TOL * top.max(f64::MIN_POSITIVE)).count();
    if kernel != 1 {
        return Err(LiouvilleError::DegenerateKernel(kernel));
    }

    // Replace the first population equation by the trace condition.
    let mut a = l.matrix.clone();
    for k in 0..nn {
        a[(0, k)] = ZERO;
    }
    for i in 0..n {
        a[(0, i + n * i)] = ONE;
    }
    let mut b = CMat::zeros(nn, 1);
    b[(0, 0)] = ONE;
    let x = a.partial_piv_lu().solve(&b);
    let rho = unvectorize(&x, n);
    let rho = CMat::from_fn(n, n, |i, j| (rho[(i, j)] + rho[(j, i)].conj()) * 0.5);

    let residual = max_abs(&l.apply(&rho));
    if residual > 1e-10 * max_abs(&l.matrix) {
        return Err(LiouvilleError::NonPhysicalSteadyState(format!("residual {residual:.2e}")));
    }
    let lo = min_eigenvalue(&rho);
    if lo < -STEADY_STATE_NEGATIVITY {
        return Err(LiouvilleError::NonPhysicalSteadyState(format!("eigenvalue {lo:.2e}")));
    }
    Ok(DensityMatrix(rho))
}
