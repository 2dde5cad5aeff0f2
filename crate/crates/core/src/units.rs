//! Physical constants, unit conventions and the validated parameter set.
//!
//! Energies are µeV, times ns, rates ns⁻¹, angular frequencies rad/ns and
//! magnetic fields T. ħ is kept explicit so that an angular frequency ω
//! corresponds to the energy `HBAR * ω` in µeV.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bohr magneton, µeV/T.
pub const MU_B: f64 = 57.883_818_0;

/// Reduced Planck constant, µeV·ns.
pub const HBAR: f64 = 0.658_212_0;

/// Measured XX⁰_T3 line splitting at 0.2 T, µeV. Negative: opposite in sign
/// to the X± splitting.
pub const XX_T3_SPLIT_AT_0P2T: f64 = -13.6;

/// Zeeman energy μ_B·g·B in µeV.
pub fn magnetic_energy(g: f64, b_field: f64) -> f64 {
    MU_B * g * b_field
}

/// Energy (µeV) of an angular frequency (rad/ns).
pub fn energy_of(omega: f64) -> f64 {
    HBAR * omega
}

/// Angular frequency (rad/ns) of an energy (µeV).
pub fn omega_of(energy: f64) -> f64 {
    energy / HBAR
}

/// Every model input. Field names double as config keys and fit parameter
/// names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Electron g-factor.
    pub g_e: f64,
    /// Ground heavy-hole g-factor.
    pub g_h: f64,
    /// Triplet two-hole g-factor.
    pub g_2h: f64,
    /// Excited-level hole g-factor (enters the XX⁰_T3 line splitting only).
    pub g_h_star: f64,
    /// DE zero-field precession rate, rad/ns.
    pub omega2: f64,
    /// XX⁰_T3 zero-field precession rate, rad/ns.
    pub omega3: f64,
    /// DE–biexciton energy gap Δ of the static Hamiltonian, µeV.
    pub delta_xx: f64,
    /// Biexciton radiative rate, ns⁻¹.
    pub gamma_xx: f64,
    /// DE radiative rate, ns⁻¹.
    pub gamma_x: f64,
    /// Excited-biexciton phonon relaxation rate, ns⁻¹.
    pub gamma_relax: f64,
    /// Non-resonant carrier generation rate G_b, ns⁻¹.
    pub g_b: f64,
    /// Charging rate in units of G_b.
    pub c_charge: f64,
    /// Discharging rate in units of G_b.
    pub c_discharge: f64,
    /// Right-circular Rabi rate, rad/ns.
    pub omega_r: f64,
    /// Left-circular Rabi rate, rad/ns.
    pub omega_l: f64,
    /// Laser detuning δ, µeV.
    pub detuning: f64,
    /// Magnetic field along the growth axis, T.
    pub b_field: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        let g_e = 0.72;
        let g_2h = -0.578;
        Self {
            g_e,
            g_h: 0.41,
            g_2h,
            g_h_star: g_2h + g_e - XX_T3_SPLIT_AT_0P2T / (MU_B * 0.2),
            omega2: TAU / 2.39,
            omega3: TAU / 6.25,
            delta_xx: 0.0,
            gamma_xx: 1.0 / 0.7,
            gamma_x: 1.0 / 1000.0,
            gamma_relax: 1.0 / 0.07,
            g_b: 0.05,
            c_charge: 1.0,
            c_discharge: 1.0,
            omega_r: 0.05,
            omega_l: 0.05,
            detuning: 0.0,
            b_field: 0.0,
        }
    }
}

/// Parameter names accepted by [`PhysicalParams::get`] and
/// [`PhysicalParams::set`].
pub const PARAM_NAMES: [&str; 17] = [
    "g_e",
    "g_h",
    "g_2h",
    "g_h_star",
    "omega2",
    "omega3",
    "delta_xx",
    "gamma_xx",
    "gamma_x",
    "gamma_relax",
    "g_b",
    "c_charge",
    "c_discharge",
    "omega_r",
    "omega_l",
    "detuning",
    "b_field",
];

const RATE_NAMES: [&str; 10] =
    ["omega2", "omega3", "gamma_xx", "gamma_x", "gamma_relax", "g_b", "c_charge", "c_discharge", "omega_r", "omega_l"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("{0} must be non-negative")]
    NegativeRate(&'static str),
    #[error("{0} is not finite")]
    NonFiniteValue(&'static str),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}

/// Complete list of violations found by [`validate_params`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct InvalidParams(pub Vec<ParamError>);

impl fmt::Display for InvalidParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameters:")?;
        for e in &self.0 {
            write!(f, " {e};")?;
        }
        Ok(())
    }
}

impl PhysicalParams {
    fn slot(&mut self, name: &str) -> Option<(&'static str, &mut f64)> {
        let idx = PARAM_NAMES.iter().position(|n| *n == name)?;
        let key = PARAM_NAMES[idx];
        let field = match idx {
            0 => &mut self.g_e,
            1 => &mut self.g_h,
            2 => &mut self.g_2h,
            3 => &mut self.g_h_star,
            4 => &mut self.omega2,
            5 => &mut self.omega3,
            6 => &mut self.delta_xx,
            7 => &mut self.gamma_xx,
            8 => &mut self.gamma_x,
            9 => &mut self.gamma_relax,
            10 => &mut self.g_b,
            11 => &mut self.c_charge,
            12 => &mut self.c_discharge,
            13 => &mut self.omega_r,
            14 => &mut self.omega_l,
            15 => &mut self.detuning,
            _ => &mut self.b_field,
        };
        Some((key, field))
    }

    pub fn get(&self, name: &str) -> Result<f64, ParamError> {
        let mut copy = *self;
        copy.slot(name).map(|(_, v)| *v).ok_or_else(|| ParamError::UnknownParameter(name.to_string()))
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ParamError> {
        let (_, slot) = self.slot(name).ok_or_else(|| ParamError::UnknownParameter(name.to_string()))?;
        *slot = value;
        Ok(())
    }

    pub fn with(mut self, name: &str, value: f64) -> Result<Self, ParamError> {
        self.set(name, value)?;
        Ok(self)
    }

    pub fn with_field(mut self, b_field: f64) -> Self {
        self.b_field = b_field;
        self
    }

    /// β₂ = μ_B (g_e − g_h) B, µeV.
    pub fn beta_de(&self) -> f64 {
        magnetic_energy(self.g_e - self.g_h, self.b_field)
    }

    /// β₃ = μ_B g_2h B, µeV.
    pub fn beta_xx(&self) -> f64 {
        magnetic_energy(self.g_2h, self.b_field)
    }

    /// Ω_B = μ_B B / 2, µeV.
    pub fn omega_b(&self) -> f64 {
        MU_B * self.b_field / 2.0
    }
}

/// Check every invariant of [`PhysicalParams`], reporting all violations.
pub fn validate_params(p: PhysicalParams) -> Result<PhysicalParams, InvalidParams> {
    let mut errors = Vec::new();
    let mut probe = p;
    for name in PARAM_NAMES {
        let (key, value) = probe.slot(name).expect("listed name");
        let value = *value;
        if !value.is_finite() {
            errors.push(ParamError::NonFiniteValue(key));
        } else if RATE_NAMES.contains(&key) && value < 0.0 {
            errors.push(ParamError::NegativeRate(key));
        }
    }
    if errors.is_empty() {
        Ok(p)
    } else {
        Err(InvalidParams(errors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constants_ratio() {
        let ratio = MU_B / HBAR;
        assert!((ratio - 87.9408).abs() < 5e-4, "{ratio}");
    }

    #[test]
    fn magnetic_energy_examples() {
        // μ_B·0.31·0.2
        assert!((magnetic_energy(0.31, 0.2) - 3.589).abs() < 5e-4);
        assert_eq!(magnetic_energy(123.0, 0.0), 0.0);
        assert!((magnetic_energy(1.13, 0.2) - 13.08).abs() < 5e-3);
    }

    #[test]
    fn defaults_match_table() {
        let p = PhysicalParams::default();
        assert!((p.gamma_xx - 1.0 / 0.7).abs() < 1e-15);
        assert!((p.gamma_x - 1e-3).abs() < 1e-15);
        assert!((p.omega3 - TAU / 6.25).abs() < 1e-15);
        assert!((p.omega2 - TAU / 2.39).abs() < 1e-15);
        assert_eq!((p.g_e, p.g_h, p.g_2h), (0.72, 0.41, -0.578));
        assert!(validate_params(p).is_ok());
    }

    #[test]
    fn g_h_star_reproduces_measured_xx_split() {
        let p = PhysicalParams::default();
        let split = magnetic_energy(p.g_2h + p.g_e - p.g_h_star, 0.2);
        assert!((split - XX_T3_SPLIT_AT_0P2T).abs() < 1e-12);
        // g_2h - g_h* negative with magnitude above g_e
        assert!(p.g_2h - p.g_h_star < -p.g_e);
    }

    #[test]
    fn negative_rate_reported() {
        let p = PhysicalParams { gamma_xx: -1.0, ..Default::default() };
        let err = validate_params(p).unwrap_err();
        assert_eq!(err.0, vec![ParamError::NegativeRate("gamma_xx")]);
    }

    #[test]
    fn non_finite_reported() {
        let p = PhysicalParams { omega_r: f64::NAN, ..Default::default() };
        let err = validate_params(p).unwrap_err();
        assert_eq!(err.0, vec![ParamError::NonFiniteValue("omega_r")]);
    }

    #[test]
    fn all_violations_listed() {
        let p = PhysicalParams { gamma_x: -2.0, g_b: -0.1, g_e: f64::INFINITY, ..Default::default() };
        let err = validate_params(p).unwrap_err();
        assert_eq!(err.0.len(), 3);
        assert!(err.0.contains(&ParamError::NonFiniteValue("g_e")));
        assert!(err.0.contains(&ParamError::NegativeRate("gamma_x")));
        assert!(err.0.contains(&ParamError::NegativeRate("g_b")));
    }

    #[test]
    fn negative_field_and_g_are_allowed() {
        let p = PhysicalParams { b_field: -0.3, g_2h: -1.0, detuning: -4.0, ..Default::default() };
        assert!(validate_params(p).is_ok());
    }

    #[test]
    fn get_set_by_name() {
        let mut p = PhysicalParams::default();
        p.set("omega_l", 0.3).unwrap();
        assert_eq!(p.get("omega_l").unwrap(), 0.3);
        assert!(matches!(p.set("nope", 1.0), Err(ParamError::UnknownParameter(_))));
        for name in PARAM_NAMES {
            assert!(p.get(name).is_ok());
        }
    }

    proptest! {
        #[test]
        fn magnetic_energy_is_linear(g in -5.0f64..5.0, b in -10.0f64..10.0) {
            let one = magnetic_energy(g, b);
            let two = magnetic_energy(g, 2.0 * b);
            prop_assert!((two - 2.0 * one).abs() <= 1e-12 * one.abs().max(1.0));
        }

        #[test]
        fn validate_is_idempotent(g_b in 0.0f64..10.0, om in 0.0f64..5.0, b in -1.0f64..1.0) {
            let p = PhysicalParams { g_b, omega_r: om, b_field: b, ..Default::default() };
            let once = validate_params(p).unwrap();
            let twice = validate_params(once).unwrap();
            prop_assert_eq!(once, twice);
            prop_assert_eq!(once, p);
        }
    }
}
