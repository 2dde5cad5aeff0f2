//! `dexsim` command line front end.
//!
//! ```text
//! dexsim spectrum --preset fig3_zero_field --out out/
//! dexsim g2 --config run.toml --jobs 4
//! dexsim fit --preset fig7_8mT out/g2_B0.0080T.csv
//! dexsim mc --config run.toml --seed 11
//! ```
//!
//! Exit codes: 0 success, 1 I/O failure, 2 config or input error, 3 solver
//! error, 4 fit non-convergence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, FieldErrors, FitModelKind, RunConfig};
use crate::correlator::{
    compare_pairs, convolve_irf, fft_spectrum, pair_histogram, uniform_grid, CorrelationCurve, Correlator,
    PairComparison, SpectrumOptions, SpectrumResult,
};
use crate::fit::{
    solve, visibility_estimate, CurveColumn, FitModel, FitProblem, FitResult, VisibilityEstimate, VisibilityOptions,
};
use crate::io::{
    fmt_num, read_curve_csv, write_curve_csv, write_effective_config, write_spectrum_csv, write_table, CsvMeta,
    IoError, SchemaError, CURVE_UNITS, SPECTRUM_UNITS,
};
use crate::liouville::{build_level_model, mc_trajectories, McOptions};
use crate::spin::{qubit_eigensystem, zeeman_line_splitting, Qubit, ZeemanLine};
use crate::units::{energy_of, PhysicalParams};

#[derive(Debug, Parser)]
#[command(name = "dexsim", version, about = "Dark exciton and biexciton photon-correlation simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration, merged over the preset if both are given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in configuration (fig3_zero_field, fig5_resonant_sweep,
    /// fig6_quasiresonant_sweep, fig7_8mT).
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for field sweeps and trajectories (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Zeeman splittings, qubit energies and mixing angles against B.
    Spectrum(Common),
    /// Polarization-resolved g²(τ) and DCP for each field of the sweep.
    G2(Common),
    /// Fit curve CSVs and report visibility and T_D.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Curve CSVs (appended to `fit.data`).
        data: Vec<PathBuf>,
    },
    /// Quantum-jump trajectories compared with the regression-theorem g².
    Mc(Common),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("fit did not converge: {0}")]
    FitNonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) | CliError::Schema(_) => 2,
            CliError::Solver(_) => 3,
            CliError::FitNonConvergence(_) => 4,
        }
    }
}

fn solver<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Solver(e.to_string())
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(ConfigError::Invalid(FieldErrors(vec![msg.into()])))
}

/// File-name tag of a field value.
pub fn field_tag(b: f64) -> String {
    format!("B{b:.4}T")
}

fn prepare(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir).map_err(|source| IoError::Io { path: dir.clone(), source })?;
    write_effective_config(&dir, cfg)?;
    Ok(dir)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(solver)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeemanRow {
    pub b_field: f64,
    pub line: ZeemanLine,
    pub split_uev: f64,
}

/// Spectral line splittings and qubit eigensystems for every field.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Vec<ZeemanRow>, CliError> {
    if cfg.grid.b_sweep.is_empty() {
        return Err(invalid("grid.b_sweep: at least one field value is required"));
    }
    let dir = prepare(cfg)?;
    let digits = cfg.output.precision;
    let mut rows = Vec::new();
    for line in ZeemanLine::ALL {
        for &b in &cfg.grid.b_sweep {
            let p = cfg.params.with_field(b);
            rows.push(ZeemanRow {
                b_field: b,
                line,
                split_uev: zeeman_line_splitting(line, &p, cfg.spectrum.be_split_uev),
            });
        }
    }
    let meta = CsvMeta::new(cfg, None, "B_T[T] line split_ueV[µeV]");
    write_table(
        &dir.join("zeeman.csv"),
        &meta,
        &["B_T", "line", "split_ueV"],
        rows.iter().map(|r| vec![fmt_num(r.b_field, digits), r.line.to_string(), fmt_num(r.split_uev, digits)]),
    )?;
    let meta = CsvMeta::new(cfg, None, "B_T[T] qubit e_minus_ueV[µeV] e_plus_ueV[µeV] delta_ueV[µeV] theta_B[rad]");
    let eigen_rows = [(Qubit::DarkExciton, "DE"), (Qubit::Biexciton, "XX")].into_iter().flat_map(|(q, name)| {
        cfg.grid.b_sweep.iter().map(move |&b| {
            let e = qubit_eigensystem(q, &cfg.params.with_field(b));
            vec![
                fmt_num(b, digits),
                name.to_string(),
                fmt_num(e.e_minus, digits),
                fmt_num(e.e_plus, digits),
                fmt_num(e.delta_b, digits),
                fmt_num(e.theta_b, digits),
            ]
        })
    });
    write_table(
        &dir.join("eigen.csv"),
        &meta,
        &["B_T", "qubit", "e_minus_ueV", "e_plus_ueV", "delta_ueV", "theta_B"],
        eigen_rows,
    )?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct G2Point {
    pub b_field: f64,
    pub theta_b: f64,
    pub curve: CorrelationCurve,
    pub convolved: CorrelationCurve,
    /// Spectrum of the co-polarized g², when requested.
    pub spectrum: Option<SpectrumResult>,
    pub visibility: VisibilityEstimate,
}

fn params_at(cfg: &RunConfig, b: f64) -> PhysicalParams {
    cfg.params.with_field(b)
}

/// Correlation curve, spectrum and visibility at one field.
pub fn g2_point(cfg: &RunConfig, b: f64) -> Result<G2Point, CliError> {
    let p = params_at(cfg, b);
    let model = build_level_model(&p, cfg.model.variant);
    let taus = cfg.taus();
    let curve = Correlator::new(&model).and_then(|c| c.curve(cfg.model.first, &taus)).map_err(solver)?;
    let convolved = convolve_irf(&curve, cfg.detector.irf_fwhm).map_err(solver)?;
    let opts = SpectrumOptions { window: cfg.spectrum.window, ..Default::default() };
    let spectrum =
        if cfg.spectrum.fft { Some(fft_spectrum(&curve.taus, &curve.g2_par, &opts).map_err(solver)?) } else { None };
    let (t, d) = curve.dcp_points();
    let visibility = visibility_estimate(
        &t,
        &d,
        &VisibilityOptions { spectrum: opts, tolerances: cfg.fit.tolerances, ..Default::default() },
    )
    .map_err(solver)?;
    Ok(G2Point {
        b_field: b,
        theta_b: qubit_eigensystem(Qubit::DarkExciton, &p).theta_b,
        curve,
        convolved,
        spectrum,
        visibility,
    })
}

pub fn cmd_g2(cfg: &RunConfig, jobs: usize) -> Result<Vec<G2Point>, CliError> {
    if cfg.grid.b_sweep.is_empty() {
        return Err(invalid("grid.b_sweep: at least one field value is required"));
    }
    let dir = prepare(cfg)?;
    let digits = cfg.output.precision;
    let points = pool(jobs)?.install(|| {
        cfg.grid
            .b_sweep
            .par_iter()
            .map(|&b| {
                let pt = g2_point(cfg, b)?;
                let tag = field_tag(b);
                let meta = CsvMeta::new(cfg, Some(b), CURVE_UNITS);
                write_curve_csv(&dir.join(format!("g2_{tag}.csv")), &pt.curve, &meta, digits)?;
                write_curve_csv(&dir.join(format!("g2_{tag}_irf.csv")), &pt.convolved, &meta, digits)?;
                if let Some(s) = &pt.spectrum {
                    let meta = CsvMeta::new(cfg, Some(b), SPECTRUM_UNITS);
                    write_spectrum_csv(&dir.join(format!("spectrum_{tag}.csv")), s, &meta, digits)?;
                }
                Ok(pt)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let opt = |x: Option<f64>| x.map(|v| fmt_num(v, digits)).unwrap_or_default();
    write_table(
        &dir.join("g2_summary.csv"),
        &CsvMeta::new(
            cfg,
            None,
            "B_T[T] theta_B[rad] peak_MHz[MHz] fwhm_MHz[MHz] visibility[1] no_oscillation T_D_ns[ns]",
        ),
        &["B_T", "theta_B", "peak_MHz", "fwhm_MHz", "visibility", "no_oscillation", "T_D_ns"],
        points.iter().map(|p| {
            vec![
                fmt_num(p.b_field, digits),
                fmt_num(p.theta_b, digits),
                opt(p.spectrum.as_ref().and_then(|s| s.peak_freq())),
                opt(p.spectrum.as_ref().and_then(|s| s.fwhm())),
                fmt_num(p.visibility.visibility, digits),
                p.visibility.no_oscillation.to_string(),
                opt(p.visibility.t_d()),
            ]
        }),
    )?;
    Ok(points)
}

#[derive(Debug, Clone)]
pub struct FitPoint {
    pub file: PathBuf,
    pub b_field: Option<f64>,
    pub result: FitResult,
    /// Normal matrix was singular at the solution; covariance is NaN.
    pub singular: bool,
    pub visibility: Option<VisibilityEstimate>,
}

impl FitPoint {
    pub fn ok(&self) -> bool {
        self.result.converged && !self.singular
    }
}

#[derive(Debug, Serialize)]
struct FitReport<'a> {
    file: String,
    b_field: Option<f64>,
    model: FitModelKind,
    converged: bool,
    singular_jacobian: bool,
    reason: crate::fit::StopReason,
    n_iter: usize,
    n_points: usize,
    residual_norm: f64,
    gradient_cosine: f64,
    jacobian_rel_error: f64,
    estimates: BTreeMap<String, f64>,
    std_errors: BTreeMap<String, f64>,
    /// Parameters pinned on a bound; their errors are NaN.
    at_bound: Vec<String>,
    covariance: &'a [Vec<f64>],
    visibility: Option<f64>,
    no_oscillation: Option<bool>,
}

fn build_problem(cfg: &RunConfig, curve: &CorrelationCurve, b: f64) -> Result<FitProblem, CliError> {
    let f = &cfg.fit;
    let free = f.free_names();
    let bounds = free
        .iter()
        .map(|n| f.bounds_of(n).ok_or_else(|| invalid(format!("fit.bounds.{n}: required"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut problem = match f.model {
        FitModelKind::DcpDamped => FitProblem::from_curve(curve),
        FitModelKind::G2Numeric => {
            let column = f.column;
            let keep: Vec<usize> =
                (0..curve.len()).filter(|&k| column != CurveColumn::Dcp || curve.dcp[k].is_some()).collect();
            let value = |k: usize| match column {
                CurveColumn::G2Par => curve.g2_par[k],
                CurveColumn::G2Cross => curve.g2_cross[k],
                CurveColumn::Dcp => curve.dcp[k].unwrap_or(0.0),
            };
            FitProblem {
                model: FitModel::G2Numeric {
                    base: params_at(cfg, b),
                    variant: cfg.model.variant,
                    first: cfg.model.first,
                    column,
                },
                free: vec![],
                bounds: vec![],
                fixed: BTreeMap::new(),
                taus: keep.iter().map(|&k| curve.taus[k]).collect(),
                data: keep.iter().map(|&k| value(k)).collect(),
                weights: curve.counts.as_ref().map(|c| keep.iter().map(|&k| 1.0 / c[k].max(1.0)).collect()),
            }
        }
    };
    problem.free = free;
    problem.bounds = bounds;
    problem.fixed = f.fixed.clone();
    problem.validate().map_err(|e| invalid(format!("fit: {e}")))?;
    Ok(problem)
}

/// Fit one curve: the FFT-seeded visibility fit provides the visibility and
/// any missing initial values of the analytic model.
pub fn fit_curve(cfg: &RunConfig, file: &Path, curve: &CorrelationCurve, b: f64) -> Result<FitPoint, CliError> {
    let problem = build_problem(cfg, curve, b)?;
    let mut init = BTreeMap::new();
    let mut vis = None;
    match cfg.fit.model {
        FitModelKind::DcpDamped => {
            let (t, d) = curve.dcp_points();
            let hint = cfg.fit.init.get("delta2").or(cfg.fit.fixed.get("delta2")).copied();
            let v = visibility_estimate(
                &t,
                &d,
                &VisibilityOptions { delta2_hint: hint, tolerances: cfg.fit.tolerances, ..Default::default() },
            )
            .map_err(solver)?;
            let fallback = [("A_V", 0.5), ("T_D", 10.0), ("theta_B", 0.3), ("delta2", energy_of(cfg.params.omega2))];
            for (name, x) in fallback {
                let from_vis = v.fit.as_ref().and_then(|r| r.get(name));
                init.insert(name.to_string(), from_vis.unwrap_or(x));
            }
            vis = Some(v);
        }
        FitModelKind::G2Numeric => {
            let p = params_at(cfg, b);
            for name in &problem.free {
                init.insert(name.clone(), p.get(name).map_err(|e| invalid(format!("fit: {e}")))?);
            }
        }
    }
    init.extend(cfg.fit.init.iter().map(|(k, v)| (k.clone(), *v)));
    for (name, (lo, hi)) in problem.free.iter().zip(&problem.bounds) {
        if let Some(x) = init.get_mut(name) {
            *x = x.clamp(*lo, *hi);
        }
    }
    let (result, singular) = solve(&problem, &init, &cfg.fit.tolerances).map_err(|e| match e {
        crate::fit::FitError::Model(m) => CliError::Solver(m),
        other => invalid(format!("fit: {other}")),
    })?;
    Ok(FitPoint { file: file.to_path_buf(), b_field: Some(b), result, singular, visibility: vis })
}

pub fn cmd_fit(cfg: &RunConfig, data: &[PathBuf], jobs: usize) -> Result<Vec<FitPoint>, CliError> {
    let files: Vec<PathBuf> = cfg.fit.data.iter().chain(data).cloned().collect();
    if files.is_empty() {
        return Err(invalid("fit.data: no curve files given"));
    }
    let dir = prepare(cfg)?;
    let digits = cfg.output.precision;
    let curves = files.iter().map(|f| read_curve_csv(f)).collect::<Result<Vec<_>, _>>()?;
    let points = pool(jobs)?.install(|| {
        files
            .par_iter()
            .zip(&curves)
            .map(|(file, loaded)| {
                let b = loaded.meta.b_field.unwrap_or(cfg.params.b_field);
                let pt = fit_curve(cfg, file, &loaded.curve, b)?;
                let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "curve".into());
                write_fit_outputs(cfg, &dir, &stem, &pt, &loaded.curve)?;
                Ok(pt)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;

    let names = points[0].result.names.clone();
    let mut header: Vec<String> = vec!["file".into(), "B_T".into()];
    for n in &names {
        header.push(n.clone());
        header.push(format!("{n}_err"));
    }
    header.extend(["visibility", "no_oscillation", "converged"].map(String::from));
    let rows = points.iter().map(|p| {
        let mut row = vec![p.file.display().to_string(), p.b_field.map(|b| fmt_num(b, digits)).unwrap_or_default()];
        for n in &names {
            row.push(p.result.get(n).map(|v| fmt_num(v, digits)).unwrap_or_default());
            row.push(p.result.std_error(n).map(|v| fmt_num(v, digits)).unwrap_or_default());
        }
        row.push(p.visibility.as_ref().map(|v| fmt_num(v.visibility, digits)).unwrap_or_default());
        row.push(p.visibility.as_ref().map(|v| v.no_oscillation.to_string()).unwrap_or_default());
        row.push(p.ok().to_string());
        row
    });
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(
        &dir.join("fit_summary.csv"),
        &CsvMeta::new(cfg, None, "estimates in parameter units"),
        &header_refs,
        rows,
    )?;

    let failed: Vec<String> = points.iter().filter(|p| !p.ok()).map(|p| p.file.display().to_string()).collect();
    if failed.is_empty() {
        Ok(points)
    } else {
        Err(CliError::FitNonConvergence(failed.join(", ")))
    }
}

fn write_fit_outputs(
    cfg: &RunConfig,
    dir: &Path,
    stem: &str,
    pt: &FitPoint,
    curve: &CorrelationCurve,
) -> Result<(), CliError> {
    let r = &pt.result;
    let report = FitReport {
        file: pt.file.display().to_string(),
        b_field: pt.b_field,
        model: cfg.fit.model,
        converged: pt.ok(),
        singular_jacobian: pt.singular,
        reason: r.reason,
        n_iter: r.n_iter,
        n_points: r.n_points,
        residual_norm: r.residual_norm,
        gradient_cosine: r.gradient_norm,
        jacobian_rel_error: r.jacobian_rel_error,
        estimates: r.as_map(),
        std_errors: r.names.iter().map(|n| (n.clone(), r.std_error(n).unwrap_or(f64::NAN))).collect(),
        at_bound: r.names.iter().zip(&r.at_bound).filter(|(_, b)| **b).map(|(n, _)| n.clone()).collect(),
        covariance: &r.covariance,
        visibility: pt.visibility.as_ref().map(|v| v.visibility),
        no_oscillation: pt.visibility.as_ref().map(|v| v.no_oscillation),
    };
    let path = dir.join(format!("fit_{stem}.toml"));
    let text = format!(
        "# dexsim {} config_sha256={}\n{}",
        crate::io::VERSION,
        cfg.hash(),
        toml::to_string(&report).map_err(solver)?
    );
    std::fs::write(&path, text).map_err(|source| IoError::Io { path: path.clone(), source })?;

    let problem = build_problem(cfg, curve, pt.b_field.unwrap_or(0.0))?;
    let model = problem.evaluate(&r.estimates).map_err(solver)?;
    let digits = cfg.output.precision;
    let rows = (0..model.len()).map(|k| {
        vec![
            fmt_num(problem.taus[k], digits),
            fmt_num(problem.data[k], digits),
            fmt_num(model[k], digits),
            fmt_num(model[k] - problem.data[k], digits),
        ]
    });
    write_table(
        &dir.join(format!("fit_{stem}_residuals.csv")),
        &CsvMeta::new(cfg, pt.b_field, "tau_ns[ns] data[1] model[1] residual[1]"),
        &["tau_ns", "data", "model", "residual"],
        rows,
    )?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct McPoint {
    pub b_field: f64,
    pub n_traj: usize,
    pub n_records: usize,
    /// Co- then cross-polarized comparison.
    pub pairs: Vec<PairComparison>,
}

impl McPoint {
    /// Largest deviation in units of σ, `None` without heralds.
    pub fn max_abs_z(&self) -> Option<f64> {
        self.pairs.iter().map(|p| p.max_abs_z).try_fold(0.0_f64, |m, z| z.map(|z| m.max(z)))
    }

    pub fn insufficient_statistics(&self) -> bool {
        self.pairs.iter().any(|p| p.insufficient_statistics())
    }
}

pub fn cmd_mc(cfg: &RunConfig, jobs: usize) -> Result<Vec<McPoint>, CliError> {
    if cfg.grid.b_sweep.is_empty() {
        return Err(invalid("grid.b_sweep: at least one field value is required"));
    }
    let dir = prepare(cfg)?;
    let digits = cfg.output.precision;
    let mc = &cfg.mc;
    let n_bins = (mc.max_delay / mc.bin_width).round().max(1.0) as usize;
    let edges: Vec<f64> = uniform_grid(n_bins as f64 * mc.bin_width, mc.bin_width);
    let pool = pool(jobs)?;
    let mut points = Vec::new();
    for &b in &cfg.grid.b_sweep {
        let model = build_level_model(&params_at(cfg, b), cfg.model.variant);
        let corr = Correlator::new(&model).map_err(solver)?;
        let opts = McOptions { t_max: mc.t_max, n_traj: mc.n_traj, seed: cfg.seed, sample_times: vec![] };
        let run = pool.install(|| mc_trajectories(&model, corr.steady_state(), &opts)).map_err(solver)?;
        let first = cfg.model.first;
        let pairs = [first, first.other()]
            .into_iter()
            .map(|second| compare_pairs(&corr, pair_histogram(&run, first, second, &edges)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(solver)?;
        let tag = field_tag(b);
        if mc.write_jumps {
            write_table(
                &dir.join(format!("jumps_{tag}.csv")),
                &CsvMeta::new(cfg, Some(b), "trajectory time_ns[ns] channel"),
                &["trajectory", "time_ns", "channel"],
                run.records
                    .iter()
                    .map(|r| vec![r.trajectory.to_string(), fmt_num(r.time, digits), r.channel.to_string()]),
            )?;
        }
        let rows = pairs.iter().flat_map(|c| {
            let h = &c.histogram;
            let pair = format!("{}{}", h.first, h.second);
            (0..h.counts.len()).map(move |k| {
                vec![
                    pair.clone(),
                    fmt_num(h.edges[k], digits),
                    fmt_num(h.edges[k + 1], digits),
                    h.counts[k].to_string(),
                    fmt_num(c.expected[k], digits),
                    fmt_num(c.z[k], digits),
                ]
            })
        });
        write_table(
            &dir.join(format!("mc_{tag}.csv")),
            &CsvMeta::new(cfg, Some(b), "pair tau_lo_ns[ns] tau_hi_ns[ns] counts expected z[σ]"),
            &["pair", "tau_lo_ns", "tau_hi_ns", "counts", "expected", "z"],
            rows,
        )?;
        points.push(McPoint { b_field: b, n_traj: run.n_traj, n_records: run.records.len(), pairs });
    }
    write_table(
        &dir.join("mc_report.csv"),
        &CsvMeta::new(cfg, None, "B_T[T] pair n_heralds max_abs_z[σ] insufficient_statistics"),
        &["B_T", "pair", "n_heralds", "max_abs_z", "insufficient_statistics"],
        points.iter().flat_map(|p| {
            p.pairs.iter().map(move |c| {
                vec![
                    fmt_num(p.b_field, digits),
                    format!("{}{}", c.histogram.first, c.histogram.second),
                    c.histogram.n_heralds.to_string(),
                    c.max_abs_z.map(|z| fmt_num(z, digits)).unwrap_or_default(),
                    c.insufficient_statistics().to_string(),
                ]
            })
        }),
    )?;
    Ok(points)
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(common.preset.as_deref(), common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Spectrum(c) => {
            let cfg = load(c)?;
            for r in cmd_spectrum(&cfg)? {
                println!("B = {:.4} T  {:<5} {:>10.4} µeV", r.b_field, r.line.name(), r.split_uev);
            }
        }
        Command::G2(c) => {
            let cfg = load(c)?;
            for p in cmd_g2(&cfg, c.jobs)? {
                let peak = p.spectrum.as_ref().and_then(|s| s.peak_freq());
                println!(
                    "B = {:.4} T  θ_B = {:.4}  peak = {}  visibility = {:.4}{}",
                    p.b_field,
                    p.theta_b,
                    peak.map(|f| format!("{f:.1} MHz")).unwrap_or_else(|| "none".into()),
                    p.visibility.visibility,
                    if p.visibility.no_oscillation { " (no oscillation)" } else { "" }
                );
            }
        }
        Command::Fit { common, data } => {
            let cfg = load(common)?;
            let points = cmd_fit(&cfg, data, common.jobs);
            let list = match &points {
                Ok(p) => p.clone(),
                Err(_) => Vec::new(),
            };
            for p in &list {
                let v = p.visibility.as_ref().map(|v| v.visibility);
                let t_d = p.result.get("T_D");
                println!(
                    "{}  visibility = {}  T_D = {}",
                    p.file.display(),
                    v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
                    t_d.map(|t| format!("{t:.3} ± {:.3} ns", p.result.std_error("T_D").unwrap_or(f64::NAN)))
                        .unwrap_or_else(|| "-".into())
                );
            }
            points?;
        }
        Command::Mc(c) => {
            let cfg = load(c)?;
            for p in cmd_mc(&cfg, c.jobs)? {
                match p.max_abs_z() {
                    Some(z) => println!("B = {:.4} T  {} trajectories  max deviation {z:.2} σ", p.b_field, p.n_traj),
                    None => println!("B = {:.4} T  {} trajectories  insufficient statistics", p.b_field, p.n_traj),
                }
            }
        }
    }
    Ok(())
}

/// Parse arguments, run, and map failures to exit codes.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
