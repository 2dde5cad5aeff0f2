//! Zero-field correlations and the precession frequency from their spectrum.

use dexsim::correlator::{correlation_curve, fft_spectrum, uniform_grid, SpectrumOptions};
use dexsim::liouville::{build_level_model, Variant};
use dexsim::spin::Polarization;
use dexsim::PhysicalParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = build_level_model(&PhysicalParams::default(), Variant::Resonant);
    let taus = uniform_grid(60.0, 0.01);
    let curve = correlation_curve(&model, Polarization::R, &taus)?;
    for k in (0..=600).step_by(40) {
        let d = curve.dcp[k].map(|d| format!("{d:+.3}")).unwrap_or_else(|| "  -".into());
        println!(
            "τ = {:5.2} ns  g²_RR = {:6.3}  g²_RL = {:6.3}  DCP = {d}",
            taus[k], curve.g2_par[k], curve.g2_cross[k]
        );
    }
    let s = fft_spectrum(&taus, &curve.g2_par, &SpectrumOptions::default())?;
    if let Some(peak) = s.peak {
        println!("precession peak {:.1} MHz, FWHM {:?} MHz", peak.freq_mhz, peak.fwhm_mhz);
    }
    Ok(())
}
