use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::bloch::dcp_damped;
use crate::correlator::{fft_spectrum, SpectrumOptions};
use crate::units::HBAR;

use super::{solve, FitError, FitProblem, FitResult, FitTolerances};

/// Starting values of θ_B tried by the visibility fit.
const THETA_STARTS: [f64; 3] = [0.15, 0.6, 1.1];

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityOptions {
    /// Δ₂ seed in µeV. `None` seeds from the FFT peak of the data.
    pub delta2_hint: Option<f64>,
    pub spectrum: SpectrumOptions,
    pub tolerances: FitTolerances,
    /// Model amplitudes `A_V·cos²θ_B` below this count as no oscillation.
    pub min_amplitude: f64,
}

impl Default for VisibilityOptions {
    fn default() -> Self {
        Self {
            delta2_hint: None,
            spectrum: SpectrumOptions::default(),
            tolerances: FitTolerances::default(),
            min_amplitude: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityEstimate {
    /// Half the difference between the second peak and the first valley.
    pub visibility: f64,
    /// Set when no valley was found; `visibility` is then 0.
    pub no_oscillation: bool,
    pub valley_tau: Option<f64>,
    pub peak_tau: Option<f64>,
    /// Best damped-DCP fit, when one was attempted.
    pub fit: Option<FitResult>,
}

impl VisibilityEstimate {
    fn flagged(fit: Option<FitResult>) -> Self {
        Self { visibility: 0.0, no_oscillation: true, valley_tau: None, peak_tau: None, fit }
    }

    pub fn t_d(&self) -> Option<f64> {
        self.fit.as_ref().and_then(|f| f.get("T_D"))
    }
}

/// Fit the damped DCP model to `(taus, dcp)` and read the visibility off the
/// fitted curve.
pub fn visibility_estimate(
    taus: &[f64],
    dcp: &[f64],
    opts: &VisibilityOptions,
) -> Result<VisibilityEstimate, FitError> {
    if taus.len() != dcp.len() {
        return Err(FitError::LengthMismatch);
    }
    let seed = match opts.delta2_hint {
        Some(d) => Some(d),
        None => fft_spectrum(taus, dcp, &opts.spectrum)
            .map_err(|e| FitError::Model(e.to_string()))?
            .peak_freq()
            .map(|f| HBAR * TAU * f * 1e-3),
    };
    let Some(delta2) = seed.filter(|d| *d > 0.0) else {
        return Ok(VisibilityEstimate::flagged(None));
    };

    let span = taus.iter().cloned().fold(0.0, f64::max);
    let problem = FitProblem::dcp_damped(taus.to_vec(), dcp.to_vec()).with_free(
        &[
            ("A_V", (0.0, 1.0)),
            ("T_D", (0.05, 1e6)),
            ("theta_B", (0.0, FRAC_PI_2)),
            ("delta2", (0.7 * delta2, 1.3 * delta2)),
        ],
        &[],
    );
    let a0 = dcp.iter().fold(0.0_f64, |m, v| m.max(v.abs())).clamp(0.05, 1.0);
    let mut best: Option<FitResult> = None;
    for theta in THETA_STARTS {
        let init: BTreeMap<String, f64> =
            [("A_V", a0), ("T_D", (span / 2.0).clamp(0.1, 1e5)), ("theta_B", theta), ("delta2", delta2)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect();
        let (r, _) = solve(&problem, &init, &opts.tolerances)?;
        if best.as_ref().is_none_or(|b| r.rss < b.rss) {
            best = Some(r);
        }
    }
    let Some(best) = best else {
        return Ok(VisibilityEstimate::flagged(None));
    };

    let [a_v, t_d, theta, d2] = ["A_V", "T_D", "theta_B", "delta2"].map(|n| best.get(n).unwrap());
    if a_v * theta.cos().powi(2) < opts.min_amplitude {
        return Ok(VisibilityEstimate::flagged(Some(best)));
    }
    let period = TAU * HBAR / d2;
    let step = period / 2000.0;
    let n = (span.max(2.0 * period) / step).ceil() as usize + 1;
    let model: Vec<f64> = (0..n).map(|k| dcp_damped(k as f64 * step, d2, theta, a_v, t_d).unwrap_or(0.0)).collect();
    let valley = (1..n - 1).find(|&k| model[k] < model[k - 1] && model[k] <= model[k + 1]);
    let peak = valley.and_then(|v| (v + 1..n - 1).find(|&k| model[k] > model[k - 1] && model[k] >= model[k + 1]));
    match (valley, peak) {
        (Some(v), Some(p)) => Ok(VisibilityEstimate {
            visibility: (model[p] - model[v]) / 2.0,
            no_oscillation: false,
            valley_tau: Some(v as f64 * step),
            peak_tau: Some(p as f64 * step),
            fit: Some(best),
        }),
        _ => Ok(VisibilityEstimate::flagged(Some(best))),
    }
}
