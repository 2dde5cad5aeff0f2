use faer::linalg::solvers::Solve;
use faer::{c64, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::linalg::{expm, identity, max_abs, scale, CMat, I, ONE, ZERO};
use crate::spin::Polarization;
use crate::units::HBAR;

use super::{ChannelKind, DensityMatrix, LevelModel, LiouvilleError};

/// Trajectories are simulated in fixed blocks and reduced in block order so
/// that results do not depend on the thread count.
const BLOCK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    pub trajectory: u32,
    pub time: f64,
    pub channel: ChannelKind,
}

impl JumpRecord {
    pub fn photon(&self) -> Option<Polarization> {
        self.channel.photon()
    }
}

#[derive(Debug, Clone)]
pub struct McOptions {
    pub t_max: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Times at which ensemble populations are accumulated.
    pub sample_times: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct McRun {
    pub n_traj: usize,
    pub t_max: f64,
    /// Sorted by trajectory, then time.
    pub records: Vec<JumpRecord>,
    pub sample_times: Vec<f64>,
    /// `mean_populations[k][i]`: ensemble mean of level `i` at sample `k`.
    pub mean_populations: Vec<Vec<f64>>,
}

impl McRun {
    pub fn photons(&self, pol: Polarization) -> impl Iterator<Item = &JumpRecord> {
        self.records.iter().filter(move |r| r.photon() == Some(pol))
    }
}

/// Photon counts of polarization `pol` in the bins `[edges[k], edges[k+1])`
/// pooled over all trajectories.
pub fn photon_histogram(run: &McRun, pol: Polarization, edges: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; edges.len().saturating_sub(1)];
    for r in run.photons(pol) {
        let k = edges.partition_point(|&e| e <= r.time);
        if k >= 1 && k < edges.len() {
            counts[k - 1] += 1;
        }
    }
    counts
}

/// No-jump evolution `exp(K t) ψ` with `K = −iH/ħ − ½ Σ L†L`.
#[derive(Debug, Clone)]
enum Evolver {
    Eigen { v: CMat, v_inv: CMat, d: Vec<c64>, gram: CMat },
    Dense { k: CMat },
}

impl Evolver {
    fn new(k: CMat) -> Self {
        let n = k.nrows();
        let Ok(eig) = k.eigen() else {
            return Evolver::Dense { k };
        };
        let v = CMat::from_fn(n, n, |i, j| eig.U()[(i, j)]);
        let d: Vec<c64> = (0..n).map(|i| eig.S().column_vector()[i]).collect();
        let sv = v.singular_values().unwrap_or_default();
        if sv.is_empty() || !(sv[n - 1] > 0.0) || sv[0] / sv[n - 1] > 1e8 {
            return Evolver::Dense { k };
        }
        let v_inv = v.partial_piv_lu().solve(&identity(n));
        let rebuilt = &CMat::from_fn(n, n, |i, j| v[(i, j)] * d[j]) * &v_inv;
        if max_abs(&(&rebuilt - &k)) > 1e-10 * max_abs(&k).max(1.0) {
            return Evolver::Dense { k };
        }
        let gram = &v.adjoint().to_owned() * &v;
        Evolver::Eigen { v, v_inv, d, gram }
    }

    fn start(&self, psi: &CMat) -> Segment<'_> {
        match self {
            Evolver::Eigen { v_inv, d, gram, .. } => {
                let a = v_inv * psi;
                let n = d.len();
                let mut terms = Vec::with_capacity(n * n);
                for j in 0..n {
                    for k in 0..n {
                        let c = a[(j, 0)].conj() * a[(k, 0)] * gram[(j, k)];
                        terms.push((c, d[j].conj() + d[k]));
                    }
                }
                Segment { evolver: self, psi: psi.clone(), a: Some(a), terms }
            }
            Evolver::Dense { .. } => Segment { evolver: self, psi: psi.clone(), a: None, terms: vec![] },
        }
    }
}

struct Segment<'a> {
    evolver: &'a Evolver,
    psi: CMat,
    a: Option<CMat>,
    terms: Vec<(c64, c64)>,
}

impl Segment<'_> {
    fn state(&self, t: f64) -> CMat {
        match (self.evolver, &self.a) {
            (Evolver::Eigen { v, d, .. }, Some(a)) => {
                let x = CMat::from_fn(d.len(), 1, |i, _| a[(i, 0)] * (d[i] * t).exp());
                v * &x
            }
            (Evolver::Dense { k }, _) => &expm(&scale(k, ONE * t)) * &self.psi,
            _ => unreachable!(),
        }
    }

    fn norm2(&self, t: f64) -> f64 {
        if self.a.is_some() {
            self.terms.iter().map(|&(c, r)| (c * (r * t).exp()).re).sum()
        } else {
            let s = self.state(t);
            (0..s.nrows()).map(|i| s[(i, 0)].norm_sqr()).sum()
        }
    }
}

fn effective_hamiltonian(m: &LevelModel) -> CMat {
    let mut k = scale(m.h.matrix(), ZERO - I * (1.0 / HBAR));
    for c in m.active_channels() {
        k[(c.from, c.from)] -= ONE * (0.5 * c.rate);
    }
    k
}

fn sample_initial(ensemble: &[(f64, CMat)], rng: &mut ChaCha8Rng) -> CMat {
    let total: f64 = ensemble.iter().map(|e| e.0).sum();
    let mut u = rng.random::<f64>() * total;
    for (w, psi) in ensemble {
        if u < *w {
            return psi.clone();
        }
        u -= w;
    }
    ensemble.last().expect("non-empty ensemble").1.clone()
}

fn pure_ensemble(rho0: &DensityMatrix) -> Result<Vec<(f64, CMat)>, LiouvilleError> {
    let n = rho0.dim();
    let m = rho0.matrix();
    let herm = CMat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let eig = herm.self_adjoint_eigen(Side::Lower).map_err(|e| LiouvilleError::Eigen(format!("{e:?}")))?;
    let out: Vec<(f64, CMat)> = (0..n)
        .filter_map(|k| {
            let w = eig.S().column_vector()[k].re;
            (w > 1e-14).then(|| (w, CMat::from_fn(n, 1, |i, _| eig.U()[(i, k)])))
        })
        .collect();
    if out.is_empty() {
        return Err(LiouvilleError::NotADensityMatrix("no positive weight".into()));
    }
    Ok(out)
}

struct BlockResult {
    records: Vec<JumpRecord>,
    pop_sums: Vec<Vec<f64>>,
}

/// Quantum-jump unraveling by the waiting-time algorithm.
///
/// Each trajectory draws from its own ChaCha8 stream selected by its index,
/// so results are reproducible for a given seed regardless of threading.
pub fn mc_trajectories(m: &LevelModel, rho0: &DensityMatrix, opts: &McOptions) -> Result<McRun, LiouvilleError> {
    let n = m.dim();
    if rho0.dim() != n {
        return Err(LiouvilleError::InvalidModel("initial state dimension".into()));
    }
    if !(opts.t_max >= 0.0) {
        return Err(LiouvilleError::InvalidGrid("t_max must be non-negative".into()));
    }
    super::check_grid(&opts.sample_times)?;
    let ensemble = pure_ensemble(rho0)?;
    let evolver = Evolver::new(effective_hamiltonian(m));
    let channels: Vec<_> = m.active_channels().copied().collect();
    let samples = &opts.sample_times;

    let n_blocks = opts.n_traj.div_ceil(BLOCK);
    let blocks: Vec<BlockResult> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut out = BlockResult { records: Vec::new(), pop_sums: vec![vec![0.0; n]; samples.len()] };
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(opts.n_traj);
            for traj in lo..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(traj as u64);
                let psi0 = sample_initial(&ensemble, &mut rng);
                run_one(traj as u32, psi0, &evolver, &channels, opts.t_max, samples, &mut rng, &mut out);
            }
            out
        })
        .collect();

    let mut records = Vec::new();
    let mut sums = vec![vec![0.0; n]; samples.len()];
    for blk in blocks {
        records.extend(blk.records);
        for (acc, s) in sums.iter_mut().zip(blk.pop_sums) {
            for (a, x) in acc.iter_mut().zip(s) {
                *a += x;
            }
        }
    }
    let denom = opts.n_traj.max(1) as f64;
    let mean_populations = sums.into_iter().map(|row| row.into_iter().map(|x| x / denom).collect()).collect();
    Ok(McRun { n_traj: opts.n_traj, t_max: opts.t_max, records, sample_times: samples.clone(), mean_populations })
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    traj: u32,
    mut psi: CMat,
    evolver: &Evolver,
    channels: &[super::CollapseChannel],
    t_max: f64,
    samples: &[f64],
    rng: &mut ChaCha8Rng,
    out: &mut BlockResult,
) {
    let mut t = 0.0;
    let mut next_sample = 0;
    loop {
        let seg = evolver.start(&psi);
        // uniform on (0, 1]
        let r = 1.0 - rng.random::<f64>();
        let horizon = t_max - t;
        let jump_at = if seg.norm2(horizon) > r {
            None
        } else {
            let (mut lo, mut hi) = (0.0, horizon);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if seg.norm2(mid) > r {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-13 * hi.max(1e-3) {
                    break;
                }
            }
            Some(hi)
        };
        let end = jump_at.map_or(t_max, |dt| t + dt);
        while next_sample < samples.len()
            && (samples[next_sample] < end || (jump_at.is_none() && samples[next_sample] <= t_max))
        {
            let s = seg.state(samples[next_sample] - t);
            let norm: f64 = (0..s.nrows()).map(|i| s[(i, 0)].norm_sqr()).sum();
            for (i, acc) in out.pop_sums[next_sample].iter_mut().enumerate() {
                *acc += s[(i, 0)].norm_sqr() / norm;
            }
            next_sample += 1;
        }
        let Some(dt) = jump_at else { break };
        let state = seg.state(dt);
        let weights: Vec<f64> = channels.iter().map(|c| c.rate * state[(c.from, 0)].norm_sqr()).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            break;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = channels.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            if u < *w {
                pick = k;
                break;
            }
            u -= w;
        }
        let c = channels[pick];
        t = end;
        out.records.push(JumpRecord { trajectory: traj, time: t, channel: c.kind });
        psi = CMat::zeros(psi.nrows(), 1);
        psi[(c.to, 0)] = ONE;
    }
}
