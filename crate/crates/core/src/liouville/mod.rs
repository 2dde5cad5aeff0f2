//! Dissipative level model, Lindblad superoperator, steady states,
//! propagation and quantum-jump trajectories.
//!
//! Density matrices are vectorized by column stacking, `vec[i + n·j] =
//! ρ[i, j]`, so that `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

mod jumps;
mod model;
mod propagate;
mod superop;

use thiserror::Error;

pub use jumps::{mc_trajectories, photon_histogram, JumpRecord, McOptions, McRun};
pub use model::{build_level_model, ChannelKind, CollapseChannel, Level, LevelModel, Variant};
pub use propagate::{check_grid, observable_row, propagate, propagate_with, Propagator, TRACE_DRIFT_TOL};
pub use superop::{
    build_liouvillian, steady_state, DensityMatrix, Liouvillian, HERMITIAN_TOL, POSITIVITY_TOL, TRACE_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiouvilleError {
    #[error("steady state is not unique: kernel dimension {0}")]
    DegenerateKernel(usize),
    #[error("steady state is not physical: {0}")]
    NonPhysicalSteadyState(String),
    #[error("propagation unstable at τ = {tau} ns: trace drift {drift:.2e}")]
    PropagationUnstable { tau: f64, drift: f64 },
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid level model: {0}")]
    InvalidModel(String),
    #[error("not a density matrix: {0}")]
    NotADensityMatrix(String),
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::PhysicalParams;

    /// Populations of the undriven model from the rate equations of the
    /// level graph: V → DE± (G_b/2 each), DE± → V (γ_x), DE± → C (c·G_b),
    /// C → V (d·G_b).
    fn rate_equation_populations(p: &PhysicalParams) -> (f64, f64, f64) {
        let out_de = p.gamma_x + p.c_charge * p.g_b;
        // p_de = g_b p_v / out_de ; p_c = c g_b p_de / (d g_b)
        let de_per_v = p.g_b / out_de;
        let c_per_v = p.c_charge * p.g_b * de_per_v / (p.c_discharge * p.g_b);
        let v = 1.0 / (1.0 + de_per_v + c_per_v);
        (v, de_per_v * v, c_per_v * v)
    }

    #[test]
    fn steady_state_matches_rate_equations() {
        for (g_b, c_charge, c_discharge, b) in [(0.05, 1.0, 1.0, 0.0), (0.3, 0.2, 2.0, 0.1), (0.01, 3.0, 0.5, -0.05)] {
            let p = PhysicalParams {
                g_b,
                c_charge,
                c_discharge,
                omega_r: 0.0,
                omega_l: 0.0,
                b_field: b,
                ..Default::default()
            };
            let m = build_level_model(&p, Variant::Resonant);
            let ss = steady_state(&build_liouvillian(&m)).unwrap();
            let (v, de, c) = rate_equation_populations(&p);
            let idx = |l| m.index_of(l).unwrap();
            assert!((ss.population(idx(Level::Vacuum)) - v).abs() < 1e-10);
            assert!((ss.population(idx(Level::DePlus2)) + ss.population(idx(Level::DeMinus2)) - de).abs() < 1e-10);
            assert!((ss.population(idx(Level::Charge)) - c).abs() < 1e-10);
        }
    }

    #[test]
    fn weak_drive_keeps_biexciton_sparse() {
        let m = build_level_model(&PhysicalParams::default(), Variant::Resonant);
        let ss = steady_state(&build_liouvillian(&m)).unwrap();
        let de = ss.population(1) + ss.population(2);
        let xx = ss.population(3) + ss.population(4);
        // detailed balance of the weak optical pump: XX/DE ≈ (4Ω²/γ_xx)/γ_xx
        let p = PhysicalParams::default();
        let ratio = 4.0 * p.omega_r.powi(2) / p.gamma_xx.powi(2);
        assert!(xx / de < 2.0 * ratio && xx / de > 0.1 * ratio, "{}", xx / de);
    }

    #[test]
    fn quasi_resonant_limit() {
        let base = PhysicalParams::default();
        let taus: Vec<f64> = (0..=400).map(|k| k as f64 * 0.05).collect();
        let res = build_level_model(&base, Variant::Resonant);
        let rho_res = DensityMatrix::pure_level(res.dim(), 1);
        let a = propagate(&build_liouvillian(&res), &rho_res, &taus).unwrap();
        for fac in [100.0, 300.0] {
            let gamma_relax = fac * base.gamma_xx;
            let scale = (gamma_relax / base.gamma_xx).sqrt();
            let q =
                PhysicalParams { gamma_relax, omega_r: base.omega_r * scale, omega_l: base.omega_l * scale, ..base };
            let qm = build_level_model(&q, Variant::QuasiResonant);
            let rho_q = DensityMatrix::pure_level(qm.dim(), 1);
            let b = propagate(&build_liouvillian(&qm), &rho_q, &taus).unwrap();
            let worst = a
                .iter()
                .zip(&b)
                .flat_map(|(x, y)| [1, 2].map(|i| (x.population(i) - y.population(i)).abs()))
                .fold(0.0, f64::max);
            assert!(worst < 0.02, "Γ = {fac}·γ_xx: {worst}");
        }
    }
}
