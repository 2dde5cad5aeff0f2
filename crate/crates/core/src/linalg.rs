//! Small dense complex linear-algebra helpers on top of `faer`.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};

/// Dense complex matrix.
pub type CMat = Mat<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn identity(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn dagger(a: &CMat) -> CMat {
    CMat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

pub fn transpose(a: &CMat) -> CMat {
    CMat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)])
}

pub fn conj(a: &CMat) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].conj())
}

pub fn scale(a: &CMat, s: c64) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn scale_re(a: &CMat, s: f64) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn trace(a: &CMat) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Largest absolute entry.
pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// max |a_ij - conj(a_ji)|
pub fn hermiticity_error(a: &CMat) -> f64 {
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

/// Induced 1-norm (max column sum).
pub fn norm_1(a: &CMat) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Column-stacking vectorisation: `vec[i + n*j] = a[i, j]`.
pub fn vectorize(a: &CMat) -> CMat {
    let (r, c) = (a.nrows(), a.ncols());
    CMat::from_fn(r * c, 1, |k, _| a[(k % r, k / r)])
}

/// Inverse of [`vectorize`] for a square `n × n` matrix.
pub fn unvectorize(v: &CMat, n: usize) -> CMat {
    debug_assert_eq!(v.nrows(), n * n);
    CMat::from_fn(n, n, |i, j| v[(i + n * j, 0)])
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371_920_351_148_152;

/// Matrix exponential by degree-13 Padé approximation with scaling and
/// squaring.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm: matrix must be square");
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let norm = norm_1(a);
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = scale_re(a, 0.5_f64.powi(s));
    let b = &PADE13;
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> CMat {
        CMat::from_fn(n, n, |i, j| a6[(i, j)] * c6 + a4[(i, j)] * c4 + a2[(i, j)] * c2 + id[(i, j)] * c0)
    };
    let high_u = lin(b[13], b[11], b[9], 0.0);
    let low_u = lin(b[7], b[5], b[3], b[1]);
    let inner_u = &(&a6 * &high_u) + &low_u;
    let u = &a * &inner_u;

    let high_v = lin(b[12], b[10], b[8], 0.0);
    let low_v = lin(b[6], b[4], b[2], b[0]);
    let v = &(&a6 * &high_v) + &low_v;

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Apply `exp(a) x` for a single column `x` using a truncated Taylor series
/// with substeps; used where `a` is small and a full [`expm`] is wasteful.
pub fn expm_apply(a: &CMat, x: &CMat) -> CMat {
    let norm = norm_1(a);
    let steps = (norm / 0.5).ceil().max(1.0) as usize;
    let h = 1.0 / steps as f64;
    let mut y = x.clone();
    for _ in 0..steps {
        let mut term = y.clone();
        let mut acc = y.clone();
        for k in 1..=30 {
            term = scale_re(&(a * &term), h / k as f64);
            acc = &acc + &term;
            if max_abs(&term) <= 1e-17 * max_abs(&acc).max(1e-300) {
                break;
            }
        }
        y = acc;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[c64]) -> CMat {
        CMat::from_fn(v.len(), v.len(), |i, j| if i == j { v[i] } else { ZERO })
    }

    #[test]
    fn expm_of_diagonal() {
        let d = diag(&[c64::new(-1.0, 2.0), c64::new(0.5, 0.0), c64::new(0.0, -30.0)]);
        let e = expm(&d);
        for i in 0..3 {
            let want = d[(i, i)].exp();
            assert!((e[(i, i)] - want).norm() < 1e-13 * want.norm().max(1.0));
        }
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn expm_of_jordan_block() {
        // exp([[a,1],[0,a]]) = e^a [[1,1],[0,1]]
        let a = c64::new(-0.3, 0.7);
        let m = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => a,
            (0, 1) => ONE,
            _ => ZERO,
        });
        let e = expm(&m);
        let ea = a.exp();
        assert!((e[(0, 0)] - ea).norm() < 1e-14);
        assert!((e[(0, 1)] - ea).norm() < 1e-14);
        assert!(e[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn expm_rotation_large_norm() {
        // exp(-i θ σx) = cos θ I - i sin θ σx, with θ large enough to force squaring
        let theta = 40.0;
        let m = CMat::from_fn(2, 2, |i, j| if i != j { c64::new(0.0, -theta) } else { ZERO });
        let e = expm(&m);
        assert!((e[(0, 0)] - c64::new(theta.cos(), 0.0)).norm() < 1e-11);
        assert!((e[(0, 1)] - c64::new(0.0, -theta.sin())).norm() < 1e-11);
    }

    #[test]
    fn expm_apply_matches_expm() {
        let m = CMat::from_fn(4, 4, |i, j| c64::new((i as f64 - j as f64) * 0.3, (i + 2 * j) as f64 * 0.1));
        let x = CMat::from_fn(4, 1, |i, _| c64::new(1.0 + i as f64, -0.5));
        let direct = &expm(&m) * &x;
        let applied = expm_apply(&m, &x);
        assert!(max_abs(&(&direct - &applied)) < 1e-12 * max_abs(&direct));
    }

    #[test]
    fn vectorize_roundtrip_and_kron_identity() {
        // vec(A X B) = (B^T ⊗ A) vec(X)
        let a = CMat::from_fn(3, 3, |i, j| c64::new(i as f64 + 1.0, j as f64));
        let x = CMat::from_fn(3, 3, |i, j| c64::new((i * j) as f64, 1.0));
        let b = CMat::from_fn(3, 3, |i, j| c64::new(j as f64 - i as f64, 0.5));
        let lhs = vectorize(&(&(&a * &x) * &b));
        let rhs = &kron(&transpose(&b), &a) * &vectorize(&x);
        assert!(max_abs(&(&lhs - &rhs)) < 1e-12);
        assert!(max_abs(&(&unvectorize(&vectorize(&x), 3) - &x)) == 0.0);
    }
}
