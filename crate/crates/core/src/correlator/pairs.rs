use crate::liouville::McRun;
use crate::spin::Polarization;

use super::{Correlator, CorrelatorError};

/// All-pairs delay histogram of (`first`, `second`) photons from jump
/// records, with the number of heralds that could see the whole window.
#[derive(Debug, Clone, PartialEq)]
pub struct PairHistogram {
    pub first: Polarization,
    pub second: Polarization,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_heralds: u64,
}

/// Histogram delays from each `first` photon to every later `second` photon
/// of the same trajectory. Heralds later than `t_max − max(edges)` are
/// skipped so every herald contributes to every bin.
pub fn pair_histogram(run: &McRun, first: Polarization, second: Polarization, edges: &[f64]) -> PairHistogram {
    let mut counts = vec![0u64; edges.len().saturating_sub(1)];
    let mut n_heralds = 0;
    let (lo, hi) = match (edges.first(), edges.last()) {
        (Some(&lo), Some(&hi)) if edges.len() >= 2 => (lo, hi),
        _ => return PairHistogram { first, second, edges: edges.to_vec(), counts, n_heralds },
    };
    let latest = run.t_max - hi;
    let records = &run.records;
    let mut start = 0;
    while start < records.len() {
        let traj = records[start].trajectory;
        let end = start + records[start..].iter().take_while(|r| r.trajectory == traj).count();
        let photons: Vec<(f64, Polarization)> =
            records[start..end].iter().filter_map(|r| r.photon().map(|p| (r.time, p))).collect();
        for (i, &(t0, p0)) in photons.iter().enumerate() {
            if p0 != first || t0 > latest {
                continue;
            }
            n_heralds += 1;
            for &(t1, p1) in &photons[i + 1..] {
                let d = t1 - t0;
                if d >= hi {
                    break;
                }
                if p1 != second || d < lo {
                    continue;
                }
                let k = edges.partition_point(|e| *e <= d) - 1;
                counts[k] += 1;
            }
        }
        start = end;
    }
    PairHistogram { first, second, edges: edges.to_vec(), counts, n_heralds }
}

/// Per-bin comparison of a pair histogram with the regression-theorem
/// expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct PairComparison {
    pub histogram: PairHistogram,
    /// Expected counts `n_heralds·∫ rate·g²(τ) dτ` per bin.
    pub expected: Vec<f64>,
    /// `(counts − expected)/√expected`.
    pub z: Vec<f64>,
    /// `None` when there were no heralds.
    pub max_abs_z: Option<f64>,
}

impl PairComparison {
    pub fn insufficient_statistics(&self) -> bool {
        self.max_abs_z.is_none()
    }
}

pub fn compare_pairs(c: &Correlator, h: PairHistogram) -> Result<PairComparison, CorrelatorError> {
    let n = h.n_heralds as f64;
    let expected = h
        .edges
        .windows(2)
        .map(|w| Ok(n * c.expected_photons(h.first, h.second, w[0], w[1])?.max(0.0)))
        .collect::<Result<Vec<f64>, CorrelatorError>>()?;
    let z: Vec<f64> = h
        .counts
        .iter()
        .zip(&expected)
        .map(|(&k, &e)| {
            let d = k as f64 - e;
            if e > 0.0 {
                d / e.sqrt()
            } else if k == 0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let max_abs_z = (h.n_heralds > 0).then(|| z.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    Ok(PairComparison { histogram: h, expected, z, max_abs_z })
}
