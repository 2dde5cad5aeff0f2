//! Steady-state level populations of the driven model.

use dexsim::liouville::{build_level_model, build_liouvillian, steady_state, Variant};
use dexsim::PhysicalParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for variant in [Variant::Resonant, Variant::QuasiResonant] {
        let p = PhysicalParams { omega_r: 0.3, omega_l: 0.3, ..Default::default() };
        let model = build_level_model(&p, variant);
        let rho = steady_state(&build_liouvillian(&model))?;
        println!("{variant:?}");
        for (level, pop) in model.levels.iter().zip(rho.populations()) {
            println!("  {:<6} {pop:.6}", level.label());
        }
    }
    Ok(())
}
