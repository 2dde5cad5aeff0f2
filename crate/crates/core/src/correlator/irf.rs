use super::{CorrelationCurve, CorrelatorError};

/// Default detector-pair response width, ns.
pub const DEFAULT_IRF_FWHM: f64 = 0.45;

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

pub(super) fn uniform_step(taus: &[f64]) -> Result<f64, CorrelatorError> {
    if taus.len() < 2 {
        return Err(CorrelatorError::TooFewPoints { needed: 2, got: taus.len() });
    }
    let dt = (taus[taus.len() - 1] - taus[0]) / (taus.len() - 1) as f64;
    if !(dt > 0.0) || taus.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(CorrelatorError::NonUniformGrid);
    }
    Ok(dt)
}

fn reflect(i: isize, n: usize) -> usize {
    let last = n as isize - 1;
    if last == 0 {
        return 0;
    }
    let period = 2 * last;
    let mut k = i.rem_euclid(period);
    if k > last {
        k = period - k;
    }
    k as usize
}

/// Convolve samples on a uniform grid with a unit-sum Gaussian of the given
/// FWHM, reflecting the signal at both ends.
pub fn convolve_gaussian(taus: &[f64], values: &[f64], fwhm: f64) -> Result<Vec<f64>, CorrelatorError> {
    if !(fwhm >= 0.0) {
        return Err(CorrelatorError::InvalidArgument(format!("IRF FWHM must be ≥ 0, got {fwhm}")));
    }
    if fwhm == 0.0 {
        return Ok(values.to_vec());
    }
    if taus.len() != values.len() {
        return Err(CorrelatorError::GridMismatch);
    }
    let dt = uniform_step(taus)?;
    let sigma = fwhm / FWHM_PER_SIGMA / dt;
    let half = (6.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-half..=half).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= sum);
    let n = values.len();
    Ok((0..n as isize)
        .map(|i| kernel.iter().zip(-half..=half).map(|(w, k)| w * values[reflect(i - k, n)]).sum())
        .collect())
}

/// Apply the detector response to both g² columns and rebuild the DCP.
pub fn convolve_irf(c: &CorrelationCurve, irf_fwhm: f64) -> Result<CorrelationCurve, CorrelatorError> {
    let mut out = c.clone();
    if irf_fwhm == 0.0 {
        return Ok(out);
    }
    out.g2_par = convolve_gaussian(&c.taus, &c.g2_par, irf_fwhm)?;
    out.g2_cross = convolve_gaussian(&c.taus, &c.g2_cross, irf_fwhm)?;
    if let Some(counts) = &c.counts {
        out.counts = Some(convolve_gaussian(&c.taus, counts, irf_fwhm)?);
    }
    out.refresh_dcp();
    Ok(out)
}
