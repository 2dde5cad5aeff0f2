use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::irf::uniform_step;
use super::CorrelatorError;

pub const MIN_SPECTRUM_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    None,
    #[default]
    Hann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOptions {
    pub window: Window,
    /// Value subtracted before transforming. `None` uses the mean of the
    /// last 10 % of the samples.
    pub asymptote: Option<f64>,
    /// Zero-padding factor before the FFT.
    pub zero_pad: usize,
    /// A peak must exceed this fraction of the largest spectral amplitude.
    pub min_relative_height: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { window: Window::Hann, asymptote: None, zero_pad: 16, min_relative_height: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub freq_mhz: f64,
    /// Full width at half maximum of the power spectrum, MHz. `None` when a
    /// half-maximum crossing lies outside the spectrum.
    pub fwhm_mhz: Option<f64>,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub freqs_mhz: Vec<f64>,
    pub amplitude: Vec<f64>,
    /// `None` signals that no peak rises above the DC lobe.
    pub peak: Option<SpectralPeak>,
}

impl SpectrumResult {
    pub fn no_peak(&self) -> bool {
        self.peak.is_none()
    }

    pub fn peak_freq(&self) -> Option<f64> {
        self.peak.map(|p| p.freq_mhz)
    }

    pub fn fwhm(&self) -> Option<f64> {
        self.peak.and_then(|p| p.fwhm_mhz)
    }
}

/// Magnitude spectrum of a curve sampled on a uniform τ grid (ns), minus
/// its asymptote. Frequencies are in MHz.
pub fn fft_spectrum(taus: &[f64], values: &[f64], opts: &SpectrumOptions) -> Result<SpectrumResult, CorrelatorError> {
    let n = values.len();
    if taus.len() != n {
        return Err(CorrelatorError::GridMismatch);
    }
    if n < MIN_SPECTRUM_POINTS {
        return Err(CorrelatorError::TooFewPoints { needed: MIN_SPECTRUM_POINTS, got: n });
    }
    let dt = uniform_step(taus)?;
    let asym = opts.asymptote.unwrap_or_else(|| {
        let tail = &values[n - (n / 10).max(1)..];
        tail.iter().sum::<f64>() / tail.len() as f64
    });
    let centred: Vec<f64> = values.iter().map(|v| v - asym).collect();
    let n_pad = (n * opts.zero_pad.max(1)).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = centred
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = match opts.window {
                Window::None => 1.0,
                Window::Hann => 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos()),
            };
            Complex::new(v * w, 0.0)
        })
        .collect();
    buf.resize(n_pad, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n_pad).process(&mut buf);

    let half = n_pad / 2 + 1;
    let df = 1e3 / (n_pad as f64 * dt);
    let freqs_mhz: Vec<f64> = (0..half).map(|k| k as f64 * df).collect();
    let amplitude: Vec<f64> = buf[..half].iter().map(|z| z.norm() * dt).collect();

    let scale = centred.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let flat = scale <= 1e-12 * asym.abs().max(1.0);
    let peak = if flat { None } else { find_peak(&amplitude, df, opts.min_relative_height) };
    Ok(SpectrumResult { freqs_mhz, amplitude, peak })
}

fn find_peak(amp: &[f64], df: f64, min_rel: f64) -> Option<SpectralPeak> {
    let half = amp.len();
    let mut k0 = 0;
    while k0 + 1 < half && amp[k0 + 1] <= amp[k0] {
        k0 += 1;
    }
    let global = amp.iter().cloned().fold(0.0, f64::max);
    let k = (k0 + 1..half.saturating_sub(1))
        .filter(|&k| amp[k] >= amp[k - 1] && amp[k] >= amp[k + 1])
        .max_by(|&a, &b| amp[a].total_cmp(&amp[b]))?;
    if !(amp[k] > min_rel * global) {
        return None;
    }
    let (a, b, c) = (amp[k - 1], amp[k], amp[k + 1]);
    let den = a - 2.0 * b + c;
    let shift = if den.abs() > 0.0 { (0.5 * (a - c) / den).clamp(-0.5, 0.5) } else { 0.0 };

    let power: Vec<f64> = amp.iter().map(|x| x * x).collect();
    let level = power[k] / 2.0;
    let left = (1..=k).rev().find(|&i| power[i - 1] < level).map(|i| {
        let (p0, p1) = (power[i - 1], power[i]);
        (i - 1) as f64 + (level - p0) / (p1 - p0)
    });
    let right = (k..half - 1).find(|&i| power[i + 1] < level).map(|i| {
        let (p0, p1) = (power[i], power[i + 1]);
        i as f64 + (p0 - level) / (p0 - p1)
    });
    let fwhm_mhz = match (left, right) {
        (Some(l), Some(r)) => Some((r - l) * df),
        _ => None,
    };
    Some(SpectralPeak { freq_mhz: (k as f64 + shift) * df, fwhm_mhz, amplitude: b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlator::uniform_grid;
    use std::f64::consts::TAU;

    #[test]
    fn damped_cosine_peak() {
        let taus = uniform_grid(60.0, 0.01);
        let v: Vec<f64> = taus.iter().map(|t| (TAU * 0.417 * t).cos() * (-t / 8.0).exp()).collect();
        let s = fft_spectrum(&taus, &v, &SpectrumOptions { asymptote: Some(0.0), ..Default::default() }).unwrap();
        let f = s.peak_freq().unwrap();
        let resolution = 1e3 / 60.0;
        assert!((f - 417.0).abs() < resolution, "{f}");
        assert!((f - 417.0).abs() < 1.0, "{f}");
    }

    #[test]
    fn lorentzian_linewidth() {
        let taus = uniform_grid(60.0, 0.01);
        let t_d = 8.0;
        let v: Vec<f64> = taus.iter().map(|t| (TAU * 0.417 * t).cos() * (-t / t_d).exp()).collect();
        let opts = SpectrumOptions { window: Window::None, asymptote: Some(0.0), ..Default::default() };
        let s = fft_spectrum(&taus, &v, &opts).unwrap();
        let want = 1e3 / (PI * t_d);
        let got = s.fwhm().unwrap();
        assert!((got - want).abs() < 0.03 * want, "{got} vs {want}");
    }

    #[test]
    fn constant_has_no_peak() {
        let taus = uniform_grid(10.0, 0.1);
        let v = vec![1.3; taus.len()];
        let s = fft_spectrum(&taus, &v, &SpectrumOptions::default()).unwrap();
        assert!(s.no_peak());
    }

    #[test]
    fn input_validation() {
        let taus = uniform_grid(1.0, 0.1);
        let v = vec![0.0; taus.len()];
        assert!(matches!(
            fft_spectrum(&taus, &v, &SpectrumOptions::default()),
            Err(CorrelatorError::TooFewPoints { .. })
        ));
        let mut taus = uniform_grid(10.0, 0.1);
        taus[5] += 0.03;
        let v = vec![0.0; taus.len()];
        assert_eq!(fft_spectrum(&taus, &v, &SpectrumOptions::default()), Err(CorrelatorError::NonUniformGrid));
    }
}
