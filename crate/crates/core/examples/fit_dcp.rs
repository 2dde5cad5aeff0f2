//! Recover damped-DCP parameters from noisy synthetic data.

use std::collections::BTreeMap;

use dexsim::bloch::dcp_damped;
use dexsim::correlator::uniform_grid;
use dexsim::fit::{fit, FitProblem, FitTolerances, SHAPE_PARAMS};
use dexsim::units::energy_of;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = [0.84, 8.0, 0.3, energy_of(std::f64::consts::TAU / 2.39)];
    let taus = uniform_grid(20.0, 0.05);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.01)?;
    let data = taus
        .iter()
        .map(|&t| dcp_damped(t, truth[3], truth[2], truth[0], truth[1]).map(|d| d + noise.sample(&mut rng)))
        .collect::<Result<Vec<_>, _>>()?;
    let init: BTreeMap<String, f64> =
        SHAPE_PARAMS.iter().zip([0.7, 5.0, 0.5, truth[3] * 1.02]).map(|(n, v)| (n.to_string(), v)).collect();
    let r = fit(&FitProblem::dcp_damped(taus, data), &init, &FitTolerances::default())?;
    for (name, t) in SHAPE_PARAMS.iter().zip(truth) {
        let (x, s) = (r.get(name).unwrap(), r.std_error(name).unwrap());
        println!("{name:<8} {x:9.5} ± {s:.5}  (truth {t:.5}, {:.2} σ)", (x - t) / s);
    }
    println!("{} iterations, {:?}", r.n_iter, r.reason);
    Ok(())
}
