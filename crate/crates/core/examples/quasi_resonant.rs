//! Resonant and quasi-resonant excitation give the same DE dynamics when the
//! excited biexciton relaxes fast.

use dexsim::liouville::{build_level_model, build_liouvillian, propagate, DensityMatrix, Level, Variant};
use dexsim::PhysicalParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = PhysicalParams::default();
    let taus: Vec<f64> = (0..=10).map(|k| k as f64).collect();
    let run = |p: &PhysicalParams, v: Variant| -> Result<Vec<f64>, Box<dyn std::error::Error>> {
        let m = build_level_model(p, v);
        let i = m.index_of(Level::DePlus2).unwrap();
        let rho0 = DensityMatrix::pure_level(m.dim(), i);
        let out = propagate(&build_liouvillian(&m), &rho0, &taus)?;
        Ok(out.iter().map(|r| r.population(i)).collect())
    };
    let res = run(&base, Variant::Resonant)?;
    for factor in [10.0, 100.0, 300.0] {
        let gamma = factor * base.gamma_xx;
        let scale = (gamma / base.gamma_xx).sqrt();
        let p =
            PhysicalParams { gamma_relax: gamma, omega_r: base.omega_r * scale, omega_l: base.omega_l * scale, ..base };
        let q = run(&p, Variant::QuasiResonant)?;
        let dev = res.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("γ_relax = {factor:>5}·γ_xx  max |ΔP(+2)| = {dev:.4}");
    }
    Ok(())
}
