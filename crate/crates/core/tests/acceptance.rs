//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use dexsim::bloch::dcp_damped;
use dexsim::cli::{cmd_fit, cmd_g2, cmd_mc, cmd_spectrum};
use dexsim::config::RunConfig;
use dexsim::correlator::{uniform_grid, CorrelationCurve, Correlator};
use dexsim::fit::{solve, FitProblem, FitTolerances};
use dexsim::io::{write_curve_csv, CsvMeta, CURVE_UNITS};
use dexsim::linalg::{hermiticity_error, max_abs};
use dexsim::liouville::{build_level_model, propagate_with, DensityMatrix, Propagator, Variant};
use dexsim::spin::{qubit_eigensystem, Polarization, Qubit, ZeemanLine};
use dexsim::units::{energy_of, validate_params, PhysicalParams};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn preset_in(name: &str, dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::preset(name).expect("preset");
    cfg.output.dir = dir.to_path_buf();
    cfg
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn zeeman_table() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.output.dir = dir.path().to_path_buf();
    cfg.grid.b_sweep = vec![0.2];
    let (rows, elapsed) = timed(|| cmd_spectrum(&cfg));
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("error: {e}")),
    };
    let want = [(ZeemanLine::X0, 30.0, 3.0), (ZeemanLine::Xpm, 13.08, 3.0), (ZeemanLine::XD, 3.59, 1.0)];
    let mut pass = elapsed < Duration::from_secs(1);
    let mut detail = Vec::new();
    for (line, value, bar) in want {
        let got = rows.iter().find(|r| r.line == line).map(|r| r.split_uev.abs());
        let ok = got.is_some_and(|g| (g - value).abs() <= bar);
        pass &= ok;
        detail.push(format!("{} {:.4} µeV (want {value} ± {bar})", line.name(), got.unwrap_or(f64::NAN)));
    }
    detail.push(format!("{:.1} ms", elapsed.as_secs_f64() * 1e3));
    Outcome::new(pass, detail.join(", "))
}

fn fine_structure() -> Outcome {
    let p = PhysicalParams::default();
    let split = energy_of(p.omega2);
    let quoted = (split * 100.0).round() / 100.0;
    let pass = (split - 1.73).abs() < 0.005 && (quoted - 1.7).abs() <= 0.03 + 1e-12;
    Outcome::new(
        pass,
        format!("ħω₂ = {split:.5} µeV (quoted {quoted:.2}; |Δ − 1.7| = {:.4}, tolerance 0.03)", (split - 1.7).abs()),
    )
}

fn field_mixed_splitting() -> Outcome {
    let e = qubit_eigensystem(Qubit::DarkExciton, &PhysicalParams::default().with_field(0.2));
    Outcome::new((e.delta_b - 4.0).abs() <= 0.1, format!("Δ₂(0.2 T) = {:.4} µeV (want 4 ± 0.1)", e.delta_b))
}

fn precession_frequency() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = preset_in("fig3_zero_field", dir.path());
    let (points, elapsed) = timed(|| cmd_g2(&cfg, 0));
    let peak = points.ok().and_then(|p| p[0].spectrum.as_ref().and_then(|s| s.peak_freq()));
    let pass = peak.is_some_and(|f| (f - 417.0).abs() <= 3.0) && elapsed < Duration::from_secs(30);
    Outcome::new(
        pass,
        format!(
            "peak {} MHz (want 417 ± 3), {:.2} s on 0–{} ns",
            peak.map(|f| format!("{f:.1}")).unwrap_or_else(|| "none".into()),
            elapsed.as_secs_f64(),
            cfg.grid.t_max
        ),
    )
}

fn visibility_law_and_coherence() -> (Outcome, Outcome) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = preset_in("fig5_resonant_sweep", dir.path());
    let points = match cmd_g2(&cfg, 0) {
        Ok(p) => p,
        Err(e) => {
            let o = || Outcome::new(false, format!("error: {e}"));
            return (o(), o());
        }
    };
    let v0 = points[0].visibility.visibility;
    let mut law = v0 > 0.0;
    let mut rows = Vec::new();
    for p in &points {
        let norm = p.visibility.visibility / v0;
        let cos2 = p.theta_b.cos().powi(2);
        law &= (norm - cos2).abs() <= 0.05;
        rows.push(format!("{:.0} mT {norm:.3}/{cos2:.3}", p.b_field * 1e3));
    }
    let high = points.iter().find(|p| (p.b_field - 0.2).abs() < 1e-12).map(|p| p.visibility.visibility);
    let high_ok = high.is_some_and(|v| v < 0.05);
    let law_outcome = Outcome::new(
        law && high_ok,
        format!("V/V₀ vs cos²θ_B: {}; V(0.2 T) = {:.4}", rows.join(", "), high.unwrap_or(f64::NAN)),
    );

    let t_d: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| !p.visibility.no_oscillation)
        .filter_map(|p| p.visibility.t_d().map(|t| (p.b_field, t)))
        .collect();
    let n = t_d.len() as f64;
    let mean = t_d.iter().map(|x| x.1).sum::<f64>() / n;
    let sd = (t_d.iter().map(|x| (x.1 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let rsd = sd / mean;
    let listed: Vec<String> = t_d.iter().map(|(b, t)| format!("{:.0} mT {t:.4e}", b * 1e3)).collect();
    let coherence =
        Outcome::new(t_d.len() >= 2 && rsd < 0.15, format!("T_D ns: {}; RSD {:.1}%", listed.join(", "), rsd * 100.0));
    (law_outcome, coherence)
}

fn analytic_equivalence() -> Outcome {
    let cfg = RunConfig::preset("fig3_zero_field").unwrap();
    let taus = uniform_grid(10.0, 0.01);
    let mut worst = 0.0_f64;
    let mut detail = Vec::new();
    for b in [0.0, 0.008] {
        let p = cfg.params.with_field(b);
        let e = qubit_eigensystem(Qubit::DarkExciton, &p);
        let curve = match Correlator::new(&build_level_model(&p, Variant::Resonant))
            .and_then(|c| c.curve(Polarization::R, &taus))
        {
            Ok(c) => c,
            Err(err) => return Outcome::new(false, format!("error: {err}")),
        };
        let (t, d) = curve.dcp_points();
        let problem = FitProblem::dcp_damped(t.clone(), d.clone())
            .with_free(&[("A_V", (0.0, 1.0)), ("T_D", (0.05, 1e6))], &[("theta_B", e.theta_b), ("delta2", e.delta_b)]);
        let init: BTreeMap<String, f64> = [("A_V".to_string(), 0.8), ("T_D".to_string(), 20.0)].into();
        let r = match solve(&problem, &init, &FitTolerances::default()) {
            Ok((r, _)) => r,
            Err(err) => return Outcome::new(false, format!("fit error: {err}")),
        };
        let (a_v, t_dec) = (r.get("A_V").unwrap(), r.get("T_D").unwrap());
        let dev = t
            .iter()
            .zip(&d)
            .map(|(&tau, &y)| (y - dcp_damped(tau, e.delta_b, e.theta_b, a_v, t_dec).unwrap()).abs())
            .fold(0.0, f64::max);
        worst = worst.max(dev);
        detail.push(format!("{:.0} mT: A_V {a_v:.3}, T_D {t_dec:.3e} ns, max |Δ| {dev:.3}", b * 1e3));
    }
    Outcome::new(worst <= 0.05, format!("{} (want ≤ 0.05)", detail.join("; ")))
}

fn monte_carlo_oracle() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = preset_in("fig3_zero_field", dir.path());
    let (points, elapsed) = timed(|| cmd_mc(&cfg, 0));
    let points = match points {
        Ok(p) => p,
        Err(e) => return Outcome::new(false, format!("error: {e}")),
    };
    let z = points.iter().map(|p| p.max_abs_z()).try_fold(0.0_f64, |m, z| z.map(|z| m.max(z)));
    let heralds: u64 = points.iter().flat_map(|p| p.pairs.iter().map(|c| c.histogram.n_heralds)).max().unwrap_or(0);
    let pass = z.is_some_and(|z| z < 5.0) && elapsed < Duration::from_secs(300);
    Outcome::new(
        pass,
        format!(
            "{} trajectories, {heralds} heralds, max deviation {} σ (want < 5), {:.1} s",
            cfg.mc.n_traj,
            z.map(|z| format!("{z:.2}")).unwrap_or_else(|| "n/a".into()),
            elapsed.as_secs_f64()
        ),
    )
}

fn random_params(rng: &mut ChaCha8Rng) -> PhysicalParams {
    let d = PhysicalParams::default();
    let mut log = |x: f64, span: f64| x * span.powf(rng.random_range(-1.0..1.0));
    let mut p = PhysicalParams {
        omega2: log(d.omega2, 2.0),
        omega3: log(d.omega3, 2.0),
        gamma_xx: log(d.gamma_xx, 3.0),
        gamma_x: log(d.gamma_x, 10.0),
        gamma_relax: log(d.gamma_relax, 3.0),
        g_b: log(0.05, 10.0),
        c_charge: log(1.0, 10.0),
        c_discharge: log(1.0, 10.0),
        omega_r: log(0.1, 5.0),
        omega_l: log(0.1, 5.0),
        ..d
    };
    p.g_e += rng.random_range(-0.3..0.3);
    p.g_h += rng.random_range(-0.3..0.3);
    p.g_2h += rng.random_range(-0.3..0.3);
    p.detuning = rng.random_range(-3.0..3.0);
    p.b_field = rng.random_range(-0.3..0.3);
    validate_params(p).expect("draw is valid")
}

fn physicality_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = [0.0_f64; 5];
    let mut failures = Vec::new();
    for draw in 0..100 {
        let p = random_params(&mut rng);
        let variant = if rng.random_bool(0.5) { Variant::Resonant } else { Variant::QuasiResonant };
        let model = build_level_model(&p, variant);
        let corr = match Correlator::new(&model) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("draw {draw}: {e}"));
                continue;
            }
        };
        let l = corr.liouvillian();
        let scale = max_abs(l.matrix());
        let rho_ss = corr.steady_state();

        let prop = Propagator::new(l);
        let start = DensityMatrix::pure_level(model.dim(), 0);
        let states = propagate_with(&prop, &start, &[0.0, 0.3, 2.0, 20.0, 200.0]).unwrap_or_default();
        let trace = states.iter().chain([rho_ss]).map(|r| (r.trace().re - 1.0).abs()).fold(0.0, f64::max);
        let herm = states.iter().chain([rho_ss]).map(|r| hermiticity_error(r.matrix())).fold(0.0, f64::max);
        let residual = max_abs(&l.apply(rho_ss.matrix())) / scale;
        let eig = l.eigenvalues().unwrap_or_default();
        let max_re = eig.iter().map(|z| z.re).fold(f64::MIN, f64::max);
        let slowest = eig.iter().filter(|z| z.norm() > 1e-9 * scale).map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
        let tau = 50.0 / slowest;
        let g2_inf = [Polarization::R, Polarization::L]
            .into_iter()
            .flat_map(|a| [Polarization::R, Polarization::L].map(|b| (a, b)))
            .map(|(a, b)| corr.g2(a, b, &[tau]).map(|g| (g.values[0] - 1.0).abs()).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        let values = [trace, herm, residual, g2_inf, max_re];
        let limits = [1e-9, 1e-10, 1e-10, 1e-4, 1e-10];
        if states.len() != 5 || values.iter().zip(&limits).any(|(v, l)| !(v <= l)) {
            failures.push(format!("draw {draw}: {values:?}"));
        }
        for (w, v) in worst.iter_mut().zip(values) {
            *w = w.max(v);
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "worst trace {:.1e}, hermiticity {:.1e}, residual {:.1e}, |g²(∞) − 1| {:.1e}, max Re λ {:.1e}{}",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            worst[4],
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(" | ")) }
        ),
    )
}

fn fit_round_trip() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.output.dir = dir.path().to_path_buf();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let taus = uniform_grid(20.0, 0.05);
    let mut misses = Vec::new();
    let mut worst_z = 0.0_f64;
    for draw in 0..20 {
        let truth = [
            ("A_V", rng.random_range(0.5..1.0)),
            ("T_D", rng.random_range(3.0..20.0)),
            ("theta_B", rng.random_range(0.05..1.1)),
            ("delta2", rng.random_range(1.2..2.4)),
        ];
        let [a_v, t_d, theta, d2] = truth.map(|x| x.1);
        let dcp: Vec<Option<f64>> =
            taus.iter().map(|&t| Some(dcp_damped(t, d2, theta, a_v, t_d).unwrap() + noise.sample(&mut rng))).collect();
        let curve = CorrelationCurve {
            taus: taus.clone(),
            g2_par: dcp.iter().map(|d| 1.0 + d.unwrap()).collect(),
            g2_cross: dcp.iter().map(|d| 1.0 - d.unwrap()).collect(),
            dcp,
            normalization: [1.0, 1.0],
            counts: None,
        };
        let path = dir.path().join(format!("synthetic_{draw:02}.csv"));
        write_curve_csv(&path, &curve, &CsvMeta::new(&cfg, None, CURVE_UNITS), 12).unwrap();
        let result = match cmd_fit(&cfg, &[path], 1) {
            Ok(mut points) => points.remove(0).result,
            Err(e) => {
                misses.push(format!("draw {draw}: {e}"));
                continue;
            }
        };
        for (name, value) in truth {
            let z = (result.get(name).unwrap() - value).abs() / result.std_error(name).unwrap();
            worst_z = worst_z.max(z);
            if !(z <= 3.0) {
                misses.push(format!("draw {draw} {name}: {z:.2} σ"));
            }
        }
    }
    Outcome::new(
        misses.is_empty(),
        format!(
            "20 draws × 4 parameters, worst {worst_z:.2} σ (want ≤ 3){}",
            if misses.is_empty() { String::new() } else { format!("; misses: {}", misses.join(", ")) }
        ),
    )
}

fn main() -> ExitCode {
    let (law, coherence) = visibility_law_and_coherence();
    let outcomes = [
        ("1 Zeeman table", zeeman_table()),
        ("2 DE fine structure", fine_structure()),
        ("3 field-mixed splitting", field_mixed_splitting()),
        ("4 precession frequency", precession_frequency()),
        ("5 visibility law", law),
        ("6 field-independent coherence", coherence),
        ("7 analytic-numeric equivalence", analytic_equivalence()),
        ("8 Monte Carlo oracle", monte_carlo_oracle()),
        ("9 physicality suite", physicality_suite()),
        ("10 fit round-trip", fit_round_trip()),
    ];
    let mut failed = 0;
    for (name, o) in &outcomes {
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria pass", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
