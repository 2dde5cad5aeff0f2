//! Analytic DCP after an R herald at a few fields.

use dexsim::bloch::{dcp_damped, visibility};
use dexsim::spin::{qubit_eigensystem, Qubit};
use dexsim::PhysicalParams;

fn main() {
    for b in [0.0, 0.016, 0.064, 0.2] {
        let e = qubit_eigensystem(Qubit::DarkExciton, &PhysicalParams::default().with_field(b));
        let row: Vec<String> = (0..=8)
            .map(|k| {
                let tau = k as f64 * 0.6;
                format!("{:+.3}", dcp_damped(tau, e.delta_b, e.theta_b, 0.84, 8.0).unwrap())
            })
            .collect();
        println!("B = {b:.3} T  V = {:.3}  D(τ = 0, 0.6, … 4.8 ns): {}", visibility(e.theta_b, 0.84), row.join(" "));
    }
}
