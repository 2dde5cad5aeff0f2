//! Quantum-jump photon pairs against the regression-theorem prediction.

use dexsim::correlator::{compare_pairs, pair_histogram, uniform_grid, Correlator};
use dexsim::liouville::{build_level_model, mc_trajectories, McOptions, Variant};
use dexsim::spin::Polarization;
use dexsim::PhysicalParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = PhysicalParams { omega_r: 0.2, omega_l: 0.2, ..Default::default() };
    let model = build_level_model(&p, Variant::Resonant);
    let corr = Correlator::new(&model)?;
    let opts = McOptions { t_max: 100.0, n_traj: 20_000, seed: 3, sample_times: vec![] };
    let run = mc_trajectories(&model, corr.steady_state(), &opts)?;
    let edges = uniform_grid(10.0, 0.5);
    for second in [Polarization::R, Polarization::L] {
        let cmp = compare_pairs(&corr, pair_histogram(&run, Polarization::R, second, &edges))?;
        println!(
            "R{second}: {} heralds, max deviation {:.2} σ",
            cmp.histogram.n_heralds,
            cmp.max_abs_z.unwrap_or(f64::NAN)
        );
        for k in 0..cmp.expected.len() {
            println!(
                "  [{:4.1}, {:4.1})  {:5}  expected {:8.2}",
                edges[k],
                edges[k + 1],
                cmp.histogram.counts[k],
                cmp.expected[k]
            );
        }
    }
    Ok(())
}
