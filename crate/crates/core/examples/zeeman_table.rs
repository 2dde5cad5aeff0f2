//! Line splittings and qubit gaps at 0.2 T next to the measured values.

use dexsim::spin::{qubit_eigensystem, zeeman_line_splitting, Qubit, ZeemanLine};
use dexsim::PhysicalParams;

fn main() {
    let p = PhysicalParams::default().with_field(0.2);
    let measured = [("X0", 30.0, 3.0), ("Xpm", 13.6, 3.0), ("XXT3", -13.6, 3.0), ("XD", 3.6, 1.0)];
    println!("{:<6} {:>10} {:>14}", "line", "model µeV", "measured µeV");
    for (line, (_, m, err)) in ZeemanLine::ALL.into_iter().zip(measured) {
        let s = zeeman_line_splitting(line, &p, 27.0);
        println!("{:<6} {:>10.3} {:>8.1} ± {err}", line.name(), s, m);
    }
    for q in [Qubit::DarkExciton, Qubit::Biexciton] {
        let e = qubit_eigensystem(q, &p);
        println!("{q:?}: Δ(B) = {:.3} µeV, θ_B = {:.4} rad", e.delta_b, e.theta_b);
    }
}
