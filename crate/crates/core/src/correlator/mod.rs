//! Polarization-resolved g²(τ) from the quantum regression theorem, the DCP,
//! detector response and Fourier analysis of the precession.

mod irf;
mod pairs;
mod spectrum;

use faer::c64;
use thiserror::Error;

use crate::linalg::{dagger, scale_re, trace, CMat};
use crate::liouville::{
    build_liouvillian, check_grid, observable_row, steady_state, DensityMatrix, LevelModel, LiouvilleError,
    Liouvillian, Propagator,
};
use crate::spin::Polarization;

pub use irf::{convolve_gaussian, convolve_irf, DEFAULT_IRF_FWHM};
pub use pairs::{compare_pairs, pair_histogram, PairComparison, PairHistogram};
pub use spectrum::{fft_spectrum, SpectralPeak, SpectrumOptions, SpectrumResult, Window};

/// Denominators at or below this mask the DCP.
pub const DCP_DENOMINATOR_FLOOR: f64 = 1e-12;
/// Heralding rates below this are treated as zero.
pub const MIN_DETECTION_RATE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrelatorError {
    #[error("no {0}-polarized photons in the steady state to herald on")]
    ZeroDetectionRate(Polarization),
    #[error("τ grids differ")]
    GridMismatch,
    #[error("τ grid is not uniform")]
    NonUniformGrid,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Solver(#[from] LiouvilleError),
}

/// One polarization-resolved correlation `g²_{first,second}(τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct G2Series {
    pub first: Polarization,
    pub second: Polarization,
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    /// Steady-state detection rate of the second photon, ns⁻¹.
    pub rate_second: f64,
}

/// Co- and cross-polarized correlations with their DCP.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    pub taus: Vec<f64>,
    pub g2_par: Vec<f64>,
    pub g2_cross: Vec<f64>,
    /// `None` where `g2_par + g2_cross` ≤ [`DCP_DENOMINATOR_FLOOR`].
    pub dcp: Vec<Option<f64>>,
    /// Steady-state detection rates (R, L), ns⁻¹.
    pub normalization: [f64; 2],
    /// Raw coincidence counts, when the curve comes from a measurement.
    pub counts: Option<Vec<f64>>,
}

impl CorrelationCurve {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// Unmasked (τ, DCP) pairs.
    pub fn dcp_points(&self) -> (Vec<f64>, Vec<f64>) {
        self.taus.iter().zip(&self.dcp).filter_map(|(&t, d)| d.map(|d| (t, d))).unzip()
    }

    /// Recompute the DCP column from the g² columns.
    pub fn refresh_dcp(&mut self) {
        self.dcp = self.g2_par.iter().zip(&self.g2_cross).map(|(&a, &b)| dcp_point(a, b)).collect();
    }
}

fn dcp_point(par: f64, cross: f64) -> Option<f64> {
    let den = par + cross;
    (den > DCP_DENOMINATOR_FLOOR).then(|| (par - cross) / den)
}

/// Pointwise DCP `(g∥ − g⊥)/(g∥ + g⊥)`.
pub fn dcp_from_g2(par: &G2Series, cross: &G2Series) -> Result<CorrelationCurve, CorrelatorError> {
    if par.taus != cross.taus {
        return Err(CorrelatorError::GridMismatch);
    }
    let mut normalization = [0.0; 2];
    for s in [par, cross] {
        normalization[(s.second == Polarization::L) as usize] = s.rate_second;
    }
    let mut c = CorrelationCurve {
        taus: par.taus.clone(),
        g2_par: par.values.clone(),
        g2_cross: cross.values.clone(),
        dcp: vec![],
        normalization,
        counts: None,
    };
    c.refresh_dcp();
    Ok(c)
}

/// Steady state, propagator and heralding operators of one level model,
/// built once and reused for every correlation.
#[derive(Debug, Clone)]
pub struct Correlator {
    model: LevelModel,
    liouvillian: Liouvillian,
    propagator: Propagator,
    rho_ss: DensityMatrix,
}

impl Correlator {
    pub fn new(model: &LevelModel) -> Result<Self, CorrelatorError> {
        let liouvillian = build_liouvillian(model);
        let rho_ss = steady_state(&liouvillian)?;
        let propagator = Propagator::new(&liouvillian);
        Ok(Self { model: model.clone(), liouvillian, propagator, rho_ss })
    }

    pub fn model(&self) -> &LevelModel {
        &self.model
    }

    pub fn liouvillian(&self) -> &Liouvillian {
        &self.liouvillian
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn steady_state(&self) -> &DensityMatrix {
        &self.rho_ss
    }

    /// Heralding operator `J = sqrt(γ) |to⟩⟨from|` of a polarization.
    pub fn jump_operator(&self, pol: Polarization) -> CMat {
        self.model.emission(pol).lindblad_operator(self.model.dim())
    }

    /// Steady-state photon rate `Tr[J†J ρ_ss]`, ns⁻¹.
    pub fn detection_rate(&self, pol: Polarization) -> f64 {
        let j = self.jump_operator(pol);
        trace(&(&(&dagger(&j) * &j) * self.rho_ss.matrix())).re
    }

    /// State right after detecting a `pol` photon.
    pub fn conditional_state(&self, pol: Polarization) -> Result<DensityMatrix, CorrelatorError> {
        self.conditional_state_with(&self.jump_operator(pol), pol)
    }

    fn conditional_state_with(&self, j: &CMat, pol: Polarization) -> Result<DensityMatrix, CorrelatorError> {
        let jj = &(j * self.rho_ss.matrix()) * &dagger(j);
        let norm = trace(&jj).re;
        if norm < MIN_DETECTION_RATE {
            return Err(CorrelatorError::ZeroDetectionRate(pol));
        }
        Ok(DensityMatrix::from_matrix_unchecked(scale_re(&jj, 1.0 / norm)))
    }

    /// `g²_{first,second}(τ)` normalized by steady-state rates.
    pub fn g2(&self, first: Polarization, second: Polarization, taus: &[f64]) -> Result<G2Series, CorrelatorError> {
        self.g2_with_herald(&self.jump_operator(first), first, second, taus)
    }

    /// [`Self::g2`] with an explicit heralding operator.
    pub fn g2_with_herald(
        &self,
        herald: &CMat,
        first: Polarization,
        second: Polarization,
        taus: &[f64],
    ) -> Result<G2Series, CorrelatorError> {
        check_grid(taus)?;
        let rho_c = self.conditional_state_with(herald, first)?;
        let (obs, rate) = self.detector(second)?;
        let values = self.propagator.expectation(&obs, &rho_c.vec(), taus).into_iter().map(|z| z.re / rate).collect();
        Ok(G2Series { first, second, taus: taus.to_vec(), values, rate_second: rate })
    }

    /// Expected number of `second` photons in `[a, b)` after a `first`
    /// herald, per herald.
    pub fn expected_photons(
        &self,
        first: Polarization,
        second: Polarization,
        a: f64,
        b: f64,
    ) -> Result<f64, CorrelatorError> {
        let rho_c = self.conditional_state(first)?;
        let j = self.jump_operator(second);
        let obs = observable_row(&(&dagger(&j) * &j));
        Ok(self.propagator.expectation_integral(&obs, &rho_c.vec(), a, b).re)
    }

    fn detector(&self, pol: Polarization) -> Result<(Vec<c64>, f64), CorrelatorError> {
        let j = self.jump_operator(pol);
        let n_op = &dagger(&j) * &j;
        let rate = trace(&(&n_op * self.rho_ss.matrix())).re;
        if rate < MIN_DETECTION_RATE {
            return Err(CorrelatorError::ZeroDetectionRate(pol));
        }
        Ok((observable_row(&n_op), rate))
    }

    /// Co-polarized (`first`,`first`) and cross-polarized (`first`, other)
    /// correlations and their DCP.
    pub fn curve(&self, first: Polarization, taus: &[f64]) -> Result<CorrelationCurve, CorrelatorError> {
        let par = self.g2(first, first, taus)?;
        let cross = self.g2(first, first.other(), taus)?;
        let mut c = dcp_from_g2(&par, &cross)?;
        c.normalization = [self.detection_rate(Polarization::R), self.detection_rate(Polarization::L)];
        Ok(c)
    }
}

/// `g²_{first,second}(τ)` of a level model.
pub fn g2_polarized(
    model: &LevelModel,
    first: Polarization,
    second: Polarization,
    taus: &[f64],
) -> Result<G2Series, CorrelatorError> {
    Correlator::new(model)?.g2(first, second, taus)
}

/// Co/cross correlation curve heralded by `first`.
pub fn correlation_curve(
    model: &LevelModel,
    first: Polarization,
    taus: &[f64],
) -> Result<CorrelationCurve, CorrelatorError> {
    Correlator::new(model)?.curve(first, taus)
}

/// `n` points `0, dt, …, (n−1)·dt`.
pub fn uniform_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt + 1e-9).floor() as usize + 1;
    (0..n).map(|k| k as f64 * dt).collect()
}
