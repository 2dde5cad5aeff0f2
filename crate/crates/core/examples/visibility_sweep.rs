//! DCP visibility of the full model against cos²θ_B over a field sweep.

use dexsim::correlator::{correlation_curve, uniform_grid};
use dexsim::fit::{visibility_estimate, VisibilityOptions};
use dexsim::liouville::{build_level_model, Variant};
use dexsim::spin::{mixing_angle, Polarization, Qubit};
use dexsim::PhysicalParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let taus = uniform_grid(30.0, 0.01);
    let mut v0 = None;
    for b in [0.0, 0.004, 0.008, 0.016, 0.032, 0.064, 0.2] {
        let p = PhysicalParams::default().with_field(b);
        let curve = correlation_curve(&build_level_model(&p, Variant::Resonant), Polarization::R, &taus)?;
        let (t, d) = curve.dcp_points();
        let est = visibility_estimate(&t, &d, &VisibilityOptions::default())?;
        let v0 = *v0.get_or_insert(est.visibility);
        let cos2 = mixing_angle(Qubit::DarkExciton, &p).cos().powi(2);
        println!(
            "B = {b:.3} T  V = {:.4}  V/V(0) = {:.4}  cos²θ_B = {cos2:.4}  T_D = {:?}",
            est.visibility,
            est.visibility / v0,
            est.t_d()
        );
    }
    Ok(())
}
