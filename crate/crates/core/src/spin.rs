//! Static and laser-driven Hamiltonians of the DE / XX⁰_T3 Π-system, the
//! qubit eigensystems, and the Zeeman splittings of the spectral lines.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use faer::c64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermiticity_error, CMat, ZERO};
use crate::units::{energy_of, magnetic_energy, PhysicalParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpinError {
    #[error("unknown spectral line `{0}` (expected X0, Xpm, XXT3 or XD)")]
    UnknownLine(String),
    #[error("matrix is not Hermitian (max deviation {0:.3e} µeV)")]
    NotHermitian(f64),
}

/// Ordered basis {|+2⟩, |−2⟩, |+3⟩, |−3⟩} of the Π-system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinBasis4 {
    Plus2 = 0,
    Minus2 = 1,
    Plus3 = 2,
    Minus3 = 3,
}

impl SpinBasis4 {
    pub const ALL: [SpinBasis4; 4] = [Self::Plus2, Self::Minus2, Self::Plus3, Self::Minus3];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Circular polarization of a photon. R couples |+2⟩↔|+3⟩, L couples
/// |−2⟩↔|−3⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    R,
    L,
}

impl Polarization {
    pub fn other(self) -> Self {
        match self {
            Self::R => Self::L,
            Self::L => Self::R,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::R => "R",
            Self::L => "L",
        })
    }
}

/// Complex matrix that is Hermitian to within 1e−12 (µeV).
#[derive(Debug, Clone)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(m: CMat) -> Result<Self, SpinError> {
        let err = hermiticity_error(&m);
        if m.nrows() != m.ncols() || err > Self::TOLERANCE {
            return Err(SpinError::NotHermitian(err));
        }
        Ok(Self(m))
    }

    /// Build from the upper triangle, mirroring it into the lower one.
    pub fn from_upper(n: usize, mut entry: impl FnMut(usize, usize) -> c64) -> Self {
        let mut m = CMat::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = if i == j { c64::new(entry(i, j).re, 0.0) } else { entry(i, j) };
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.0[(i, j)]
    }
}

fn real(x: f64) -> c64 {
    c64::new(x, 0.0)
}

/// Static Hamiltonian of the DE and XX⁰_T3 qubits (no optical coupling).
///
/// The biexciton diagonal carries Δ ± β₃/2, so that each block's gap is
/// `sqrt(β_i² + (ħω_i)²)` for both qubits, consistent with the driven
/// Hamiltonian of [`build_h_driven`].
pub fn build_h4(p: &PhysicalParams) -> HermitianMatrix {
    let b2 = p.beta_de();
    let b3 = p.beta_xx();
    let w2 = energy_of(p.omega2) / 2.0;
    let w3 = energy_of(p.omega3) / 2.0;
    HermitianMatrix::from_upper(4, |i, j| match (i, j) {
        (0, 0) => real(-b2 / 2.0),
        (1, 1) => real(b2 / 2.0),
        (0, 1) => real(w2),
        (2, 2) => real(p.delta_xx + b3 / 2.0),
        (3, 3) => real(p.delta_xx - b3 / 2.0),
        (2, 3) => real(w3),
        _ => ZERO,
    })
}

/// Rotating-frame Hamiltonian under CW circularly polarized driving.
pub fn build_h_driven(p: &PhysicalParams) -> HermitianMatrix {
    let om_b = p.omega_b();
    let de = om_b * (p.g_e - p.g_h);
    let xx = om_b * p.g_2h;
    let w2 = energy_of(p.omega2) / 2.0;
    let w3 = energy_of(p.omega3) / 2.0;
    HermitianMatrix::from_upper(4, |i, j| match (i, j) {
        (0, 0) => real(-de),
        (1, 1) => real(de),
        (0, 1) => real(w2),
        (0, 2) => real(energy_of(p.omega_r)),
        (1, 3) => real(energy_of(p.omega_l)),
        (2, 2) => real(p.detuning + xx),
        (3, 3) => real(p.detuning - xx),
        (2, 3) => real(w3),
        _ => ZERO,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Qubit {
    /// Dark exciton, basis {|+2⟩, |−2⟩}.
    DarkExciton,
    /// Spin-blockaded biexciton, basis {|+3⟩, |−3⟩}.
    Biexciton,
}

/// Eigen-decomposition of one qubit block. Vectors are written in the
/// {|+i⟩, |−i⟩} basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitEigenpair {
    pub e_minus: f64,
    pub e_plus: f64,
    pub v_minus: [c64; 2],
    pub v_plus: [c64; 2],
    pub theta_b: f64,
    pub delta_b: f64,
}

impl Qubit {
    /// (β, ħω, block centre) in µeV, where β is the diagonal difference
    /// H[−,−] − H[+,+] of the block. For the DE this is β₂. The biexciton
    /// diagonal is ordered the other way round, so its β is −β₃.
    fn block(self, p: &PhysicalParams) -> (f64, f64, f64) {
        match self {
            Qubit::DarkExciton => (p.beta_de(), energy_of(p.omega2), 0.0),
            Qubit::Biexciton => (-p.beta_xx(), energy_of(p.omega3), p.delta_xx),
        }
    }
}

/// Mixing angle θ_B = atan(β_i / ħω_i), with θ_B = 0 in the fully
/// degenerate case ω_i = 0, B = 0.
pub fn mixing_angle(q: Qubit, p: &PhysicalParams) -> f64 {
    let (beta, w, _) = q.block(p);
    if beta == 0.0 && w == 0.0 {
        0.0
    } else {
        beta.atan2(w)
    }
}

/// Zeeman splitting Δ_i(B) = sqrt(β_i² + (ħω_i)²), µeV.
pub fn zeeman_splitting(q: Qubit, p: &PhysicalParams) -> f64 {
    let (beta, w, _) = q.block(p);
    beta.hypot(w)
}

/// Closed-form eigensystem of one qubit block.
pub fn qubit_eigensystem(q: Qubit, p: &PhysicalParams) -> QubitEigenpair {
    let (beta, w, centre) = q.block(p);
    let delta_b = beta.hypot(w);
    let (theta_b, v_minus, v_plus) = if beta == 0.0 && w == 0.0 {
        (0.0, [real(1.0), ZERO], [ZERO, real(1.0)])
    } else {
        let t = beta.atan2(w);
        let up = FRAC_PI_4 + t / 2.0;
        let down = FRAC_PI_4 - t / 2.0;
        (t, fix_phase([real(down.cos()), real(-down.sin())]), fix_phase([real(up.cos()), real(up.sin())]))
    };
    QubitEigenpair {
        e_minus: centre - delta_b / 2.0,
        e_plus: centre + delta_b / 2.0,
        v_minus,
        v_plus,
        theta_b,
        delta_b,
    }
}

/// Make the |+i⟩ coefficient real and non-negative; when it vanishes, do the
/// same for the |−i⟩ coefficient.
fn fix_phase(v: [c64; 2]) -> [c64; 2] {
    let pivot = if v[0].norm() > 1e-15 { v[0] } else { v[1] };
    if pivot.norm() == 0.0 {
        return v;
    }
    let phase = pivot.conj() / pivot.norm();
    let out = [v[0] * phase, v[1] * phase];
    if v[0].norm() > 1e-15 {
        [real(out[0].re), out[1]]
    } else {
        [ZERO, real(out[1].re)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZeemanLine {
    /// Neutral bright exciton.
    X0,
    /// Singly charged excitons X⁻ / X⁺.
    Xpm,
    /// Spin-blockaded biexciton line.
    XXT3,
    /// Dark exciton line.
    XD,
}

impl ZeemanLine {
    pub const ALL: [ZeemanLine; 4] = [Self::X0, Self::Xpm, Self::XXT3, Self::XD];

    pub fn name(self) -> &'static str {
        match self {
            Self::X0 => "X0",
            Self::Xpm => "Xpm",
            Self::XXT3 => "XXT3",
            Self::XD => "XD",
        }
    }
}

impl fmt::Display for ZeemanLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ZeemanLine {
    type Err = SpinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "X0" => Ok(Self::X0),
            "Xpm" | "X+-" | "X±" => Ok(Self::Xpm),
            "XXT3" | "XX0_T3" => Ok(Self::XXT3),
            "XD" | "X0_D" => Ok(Self::XD),
            other => Err(SpinError::UnknownLine(other.to_string())),
        }
    }
}

/// Zeeman splitting of a spectral line, µeV. `be_split` is the bright
/// exciton fine-structure split ħω₀ (µeV), used by `X0` only.
pub fn zeeman_line_splitting(line: ZeemanLine, p: &PhysicalParams, be_split: f64) -> f64 {
    let b = p.b_field;
    match line {
        ZeemanLine::X0 => be_split.hypot(magnetic_energy(p.g_e + p.g_h, b)),
        ZeemanLine::Xpm => magnetic_energy(p.g_e + p.g_h, b),
        ZeemanLine::XXT3 => magnetic_energy(p.g_2h + p.g_e - p.g_h_star, b),
        ZeemanLine::XD => magnetic_energy(p.g_e - p.g_h, b),
    }
}

/// Parse a line name and evaluate its splitting.
pub fn zeeman_line_splitting_named(line: &str, p: &PhysicalParams, be_split: f64) -> Result<f64, SpinError> {
    Ok(zeeman_line_splitting(line.parse()?, p, be_split))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::HBAR;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn h4_zero_field_off_diagonal() {
        let h = build_h4(&PhysicalParams::default());
        assert!(close(h.get(0, 1).re, 0.8652, 5e-5));
        assert!(close(h.get(0, 0).re, 0.0, 0.0));
        // no DE–XX coupling
        for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
            assert_eq!(h.get(i, j), ZERO);
        }
    }

    #[test]
    fn h4_pure_zeeman_diagonal() {
        let p = PhysicalParams { omega2: 0.0, omega3: 0.0, b_field: 0.2, ..Default::default() };
        let h = build_h4(&p);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(h.get(i, j), ZERO);
                }
            }
        }
        assert!(close(h.get(0, 0).re, -1.7945, 5e-4));
        assert!(close(h.get(1, 1).re, 1.7945, 5e-4));
    }

    #[test]
    fn de_splitting_at_0p2_tesla() {
        let p = PhysicalParams::default().with_field(0.2);
        let e = qubit_eigensystem(Qubit::DarkExciton, &p);
        let want = (3.5890_f64.powi(2) + 1.7304_f64.powi(2)).sqrt();
        assert!(close(e.delta_b, want, 1e-3), "{}", e.delta_b);
        assert!(close(e.delta_b, 3.985, 1e-3));
        assert!(close(e.delta_b, 4.0, 0.1));
    }

    #[test]
    fn de_zero_field_eigenvectors() {
        let e = qubit_eigensystem(Qubit::DarkExciton, &PhysicalParams::default());
        assert_eq!(e.theta_b, 0.0);
        assert!(close(e.v_minus[0].re, FRAC_1_SQRT_2, 1e-15));
        assert!(close(e.v_minus[1].re, -FRAC_1_SQRT_2, 1e-15));
        assert!(close(e.v_plus[0].re, FRAC_1_SQRT_2, 1e-15));
        assert!(close(e.v_plus[1].re, FRAC_1_SQRT_2, 1e-15));
        assert!(e.e_minus < e.e_plus);
        assert!(close(e.delta_b, HBAR * PhysicalParams::default().omega2, 1e-15));
    }

    #[test]
    fn de_high_field_limit() {
        let p = PhysicalParams::default().with_field(50.0);
        let e = qubit_eigensystem(Qubit::DarkExciton, &p);
        assert!(close(e.theta_b, FRAC_PI_2, 2e-3));
        assert!(e.v_minus[0].norm() > 0.9999);
        assert!(e.v_plus[1].norm() > 0.9999);
    }

    #[test]
    fn degenerate_fallback() {
        let p = PhysicalParams { omega2: 0.0, ..Default::default() };
        let e = qubit_eigensystem(Qubit::DarkExciton, &p);
        assert_eq!(e.theta_b, 0.0);
        assert_eq!(e.v_minus, [real(1.0), ZERO]);
        assert_eq!(e.v_plus, [ZERO, real(1.0)]);
        assert_eq!(e.delta_b, 0.0);
    }

    #[test]
    fn phase_convention_when_plus_coefficient_vanishes() {
        // ω = 0, B < 0: θ = −π/2 and the lower state is |−i⟩
        let p = PhysicalParams { omega2: 0.0, b_field: -0.5, ..Default::default() };
        let e = qubit_eigensystem(Qubit::DarkExciton, &p);
        assert!(close(e.theta_b, -FRAC_PI_2, 1e-15));
        assert!(e.v_minus[0].norm() < 1e-15);
        assert!(close(e.v_minus[1].re, 1.0, 1e-15));
        assert!(close(e.v_plus[0].re, 1.0, 1e-15));
    }

    #[test]
    fn driven_decoupled_limit_equals_static() {
        let p = PhysicalParams {
            omega_r: 0.0,
            omega_l: 0.0,
            detuning: 3.0,
            delta_xx: 3.0,
            b_field: 0.13,
            ..Default::default()
        };
        let a = build_h_driven(&p);
        let b = build_h4(&p);
        for i in 0..4 {
            for j in 0..4 {
                assert!((a.get(i, j) - b.get(i, j)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn driven_single_coupling() {
        let p = PhysicalParams { omega_r: 0.4, omega_l: 0.0, ..Default::default() };
        let h = build_h_driven(&p);
        let cross = [(0, 2), (0, 3), (1, 2), (1, 3)];
        let nonzero: Vec<_> = cross.iter().filter(|&&(i, j)| h.get(i, j) != ZERO).collect();
        assert_eq!(nonzero, vec![&(0, 2)]);
        assert!(close(h.get(2, 0).re, HBAR * 0.4, 1e-15));
    }

    #[test]
    fn driven_zero_detuning_biexciton_diagonal() {
        let p = PhysicalParams { b_field: 0.1, ..Default::default() };
        let h = build_h_driven(&p);
        let om_b = p.omega_b();
        assert!(close(h.get(2, 2).re, om_b * p.g_2h, 1e-15));
        assert!(close(h.get(3, 3).re, -om_b * p.g_2h, 1e-15));
    }

    #[test]
    fn zeeman_table_rows() {
        let p = PhysicalParams::default().with_field(0.2);
        let xd = zeeman_line_splitting(ZeemanLine::XD, &p, 27.0);
        let x0 = zeeman_line_splitting(ZeemanLine::X0, &p, 27.0);
        let xpm = zeeman_line_splitting(ZeemanLine::Xpm, &p, 27.0);
        let xx = zeeman_line_splitting(ZeemanLine::XXT3, &p, 27.0);
        assert!(close(xd, 3.589, 5e-4));
        assert!(close(x0, 30.01, 1e-2), "{x0}");
        assert!(close(x0, (27.0_f64 * 27.0 + 13.0822_f64.powi(2)).sqrt(), 1e-3));
        assert!(close(xpm, 13.08, 5e-3));
        assert!(close(xx, -13.6, 1e-9));
    }

    #[test]
    fn zeeman_zero_field() {
        let p = PhysicalParams::default();
        for line in ZeemanLine::ALL {
            let v = zeeman_line_splitting(line, &p, 27.0);
            let want = if line == ZeemanLine::X0 { 27.0 } else { 0.0 };
            assert_eq!(v, want);
        }
    }

    #[test]
    fn unknown_line() {
        let p = PhysicalParams::default();
        assert!(matches!(zeeman_line_splitting_named("X9", &p, 27.0), Err(SpinError::UnknownLine(_))));
        assert!(zeeman_line_splitting_named("XD", &p, 27.0).is_ok());
    }

    #[test]
    fn hermitian_matrix_rejects_asymmetric() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = c64::new(1.0, 0.0);
        assert!(matches!(HermitianMatrix::new(m), Err(SpinError::NotHermitian(_))));
    }

    fn random_params() -> impl Strategy<Value = PhysicalParams> {
        (-1.0..2.0f64, -1.0..2.0f64, -1.5..1.5f64, 0.0..5.0f64, 0.0..5.0f64, -20.0..20.0f64, -3.0..3.0f64).prop_map(
            |(g_e, g_h, g_2h, omega2, omega3, delta_xx, b_field)| PhysicalParams {
                g_e,
                g_h,
                g_2h,
                omega2,
                omega3,
                delta_xx,
                b_field,
                ..Default::default()
            },
        )
    }

    fn block_of(h: &HermitianMatrix, q: Qubit) -> [[c64; 2]; 2] {
        let o = if q == Qubit::DarkExciton { 0 } else { 2 };
        [[h.get(o, o), h.get(o, o + 1)], [h.get(o + 1, o), h.get(o + 1, o + 1)]]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn eigen_reassembly(p in random_params()) {
            let h = build_h4(&p);
            for q in [Qubit::DarkExciton, Qubit::Biexciton] {
                let e = qubit_eigensystem(q, &p);
                let blk = block_of(&h, q);
                for i in 0..2 {
                    for j in 0..2 {
                        let r = e.v_minus[i] * e.v_minus[j].conj() * e.e_minus
                            + e.v_plus[i] * e.v_plus[j].conj() * e.e_plus;
                        prop_assert!((r - blk[i][j]).norm() < 1e-10, "{q:?} {i}{j}");
                    }
                }
                let dot = e.v_minus[0].conj() * e.v_plus[0] + e.v_minus[1].conj() * e.v_plus[1];
                prop_assert!(dot.norm() < 1e-12);
                prop_assert!(e.e_minus <= e.e_plus);
                prop_assert!((e.e_plus - e.e_minus - e.delta_b).abs() < 1e-10);
            }
        }

        #[test]
        fn analytic_gap_matches_numeric(p in random_params()) {
            let h = build_h4(&p);
            for q in [Qubit::DarkExciton, Qubit::Biexciton] {
                let blk = block_of(&h, q);
                let m = CMat::from_fn(2, 2, |i, j| blk[i][j]);
                let ev = m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
                prop_assert!(((ev[1] - ev[0]) - zeeman_splitting(q, &p)).abs() < 1e-10);
            }
        }

        #[test]
        fn eq2_and_eq3_agree(p in random_params()) {
            prop_assume!(p.omega2 > 1e-3);
            let e = qubit_eigensystem(Qubit::DarkExciton, &p);
            let ratio = p.beta_de() / energy_of(p.omega2);
            let root = (1.0 + ratio * ratio).sqrt();
            for (v, k) in [(e.v_plus, ratio + root), (e.v_minus, ratio - root)] {
                let n = (1.0 + k * k).sqrt();
                let overlap = v[0] / n + v[1] * (k / n);
                prop_assert!((overlap.norm() - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn theta_odd_and_monotone(p in random_params(), b in 0.0..2.0f64, db in 0.0..1.0f64) {
            prop_assume!(p.omega2 > 1e-3 && (p.g_e - p.g_h).abs() > 1e-3);
            for q in [Qubit::DarkExciton, Qubit::Biexciton] {
                let t = mixing_angle(q, &p.with_field(b));
                prop_assert_eq!(mixing_angle(q, &p.with_field(-b)), -t);
                let t2 = mixing_angle(q, &p.with_field(b + db));
                prop_assert!(t2.abs() >= t.abs());
            }
        }

        #[test]
        fn lower_state_gains_plus2(b in 0.0..1.0f64, db in 0.0..1.0f64) {
            let p = PhysicalParams::default();
            let lo = qubit_eigensystem(Qubit::DarkExciton, &p.with_field(b)).v_minus[0].norm();
            let hi = qubit_eigensystem(Qubit::DarkExciton, &p.with_field(b + db)).v_minus[0].norm();
            prop_assert!(hi >= lo - 1e-15);
        }
    }
}
