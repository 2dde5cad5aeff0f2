//! Closed-form qubit precession on the Bloch sphere and the analytic DCP
//! model used both standalone and as the fit function.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use faer::c64;
use thiserror::Error;

use crate::spin::Polarization;
use crate::units::HBAR;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlochError {
    #[error("domain error: {0}")]
    DomainError(String),
}

/// Pure qubit state `cos(θ/2)|d⟩ + e^{−iφ} sin(θ/2)|u⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub theta: f64,
    pub phi: f64,
}

impl BlochState {
    /// Polar angle is clamped to [0, π] and φ reduced to [0, 2π).
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta: theta.clamp(0.0, PI), phi: phi.rem_euclid(TAU) }
    }

    /// Amplitudes on (|d⟩, |u⟩).
    pub fn amplitudes(&self) -> [c64; 2] {
        let (s, c) = (self.theta / 2.0).sin_cos();
        [c64::new(c, 0.0), c64::from_polar(s, -self.phi)]
    }

    /// Cartesian Bloch vector.
    pub fn vector(&self) -> [f64; 3] {
        let st = self.theta.sin();
        [st * self.phi.cos(), st * self.phi.sin(), self.theta.cos()]
    }
}

/// Shortest signed distance between two angles, in (−π, π].
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Free precession about the eigenaxis for time `t` (ns) with splitting
/// `delta` (µeV).
pub fn bloch_evolve(s: BlochState, delta: f64, t: f64) -> BlochState {
    BlochState::new(s.theta, s.phi - delta / HBAR * t)
}

/// Qubit state right after a photon of polarization `pol` heralds the DE.
pub fn heralded_initial_state(pol: Polarization, theta_b: f64) -> BlochState {
    match pol {
        Polarization::R => BlochState::new(FRAC_PI_2 - theta_b, 0.0),
        Polarization::L => BlochState::new(FRAC_PI_2 + theta_b, PI),
    }
}

/// Undamped DCP after heralding.
pub fn dcp_ideal(tau: f64, delta2: f64, theta_b: f64) -> f64 {
    let (s, c) = (delta2 * tau / (2.0 * HBAR)).sin_cos();
    c * c - s * s * (2.0 * theta_b).cos()
}

/// DCP with amplitude prefactor `a_v` and exponential decay time `t_d`.
pub fn dcp_damped(tau: f64, delta2: f64, theta_b: f64, a_v: f64, t_d: f64) -> Result<f64, BlochError> {
    if !(t_d > 0.0) {
        return Err(BlochError::DomainError(format!("T_D must be positive, got {t_d}")));
    }
    Ok(a_v * dcp_ideal(tau, delta2, theta_b) * (-tau / t_d).exp())
}

/// Oscillation visibility `A'·cos²θ_B`.
pub fn visibility(theta_b: f64, a_v_prime: f64) -> f64 {
    a_v_prime * (1.0 + (2.0 * theta_b).cos()) / 2.0
}
