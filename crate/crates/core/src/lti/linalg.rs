//! Dense eigenvalue kernels and symmetric-matrix inertia.
//!
//! General eigenvalues come from a Parlett–Reinsch balancing pass followed by
//! the Hessenberg/Francis double-shift Schur iteration; symmetric spectra
//! from the tridiagonal QR iteration. Matrices in this crate are small
//! (rarely beyond 40×40).

use std::fmt;

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Default relative threshold under which a symmetric eigenvalue counts as zero.
pub const INERTIA_ZERO_TOL: f64 = 1e-8;

/// Signature (negative, zero, positive eigenvalue counts) of a symmetric matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Inertia {
    pub neg: usize,
    pub zero: usize,
    pub pos: usize,
}

impl Inertia {
    pub fn new(neg: usize, zero: usize, pos: usize) -> Self {
        Inertia { neg, zero, pos }
    }

    /// Inertia `(p, 0, n - p)` of a p-dominance certificate.
    pub fn dominant(p: usize, n: usize) -> Self {
        Inertia::new(p, 0, n.saturating_sub(p))
    }

    pub fn dim(&self) -> usize {
        self.neg + self.zero + self.pos
    }
}

impl fmt::Display for Inertia {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.neg, self.zero, self.pos)
    }
}

fn sort_complex(v: &mut [C64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// In-place diagonal similarity scaling by powers of two.
fn balance(a: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let ginv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= ginv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// All eigenvalues of a square real matrix, sorted by (real, imaginary) part.
pub fn eig_general(m: &DMatrix<f64>) -> Result<Vec<C64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid(format!(
            "eigenvalues of a non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    if n == 1 {
        return Ok(vec![C64::new(m[(0, 0)], 0.0)]);
    }
    let mut a = m.clone();
    balance(&mut a);
    let schur = Schur::try_new(a, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalSingularity("Schur iteration did not converge".into()))?;
    let mut eig: Vec<C64> = schur.complex_eigenvalues().iter().copied().collect();
    // Francis 2x2 blocks return exact conjugate pairs; snap tiny imaginary parts.
    for z in eig.iter_mut() {
        if z.im.abs() <= 1e-14 * z.re.abs().max(1.0) {
            z.im = 0.0;
        }
    }
    sort_complex(&mut eig);
    Ok(eig)
}

/// Frobenius norm of `S - Sᵀ`.
pub fn symmetry_defect(s: &DMatrix<f64>) -> f64 {
    (s - s.transpose()).norm()
}

/// Eigenvalues (ascending) and inertia of a symmetric matrix. An eigenvalue
/// with `|λ| <= zero_tol * max(1, ‖S‖₂)` is counted as zero.
pub fn eig_symmetric(s: &DMatrix<f64>, zero_tol: f64) -> Result<(Vec<f64>, Inertia)> {
    if s.nrows() != s.ncols() {
        return Err(Error::invalid("symmetric eigenvalues of a non-square matrix"));
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let n = s.nrows();
    if n == 0 {
        return Ok((Vec::new(), Inertia::new(0, 0, 0)));
    }
    let defect = symmetry_defect(s);
    if defect > 1e-10 * s.norm() {
        return Err(Error::invalid(format!(
            "matrix is not symmetric (defect {defect:.3e})"
        )));
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalSingularity("symmetric QR did not converge".into()))?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    let spec_norm = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let thresh = zero_tol * spec_norm.max(1.0);
    let mut inertia = Inertia::new(0, 0, 0);
    for &v in &vals {
        if v.abs() <= thresh {
            inertia.zero += 1;
        } else if v < 0.0 {
            inertia.neg += 1;
        } else {
            inertia.pos += 1;
        }
    }
    Ok((vals, inertia))
}

/// Inertia with the default zero tolerance.
pub fn inertia(s: &DMatrix<f64>) -> Result<Inertia> {
    eig_symmetric(s, INERTIA_ZERO_TOL).map(|(_, i)| i)
}

/// Largest eigenvalue of the symmetric part of `s`.
pub fn max_eig_sym(s: &DMatrix<f64>) -> f64 {
    let sym = (s + s.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.max()
}

pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eig_general(m)?
        .iter()
        .fold(f64::NEG_INFINITY, |acc, z| acc.max(z.re)))
}

/// Rank of `[B, AB, …, A^{n-1}B]`.
pub fn controllability_rank(a: &DMatrix<f64>, b: &DMatrix<f64>) -> usize {
    let n = a.nrows();
    let m = b.ncols();
    let mut ctrb = DMatrix::<f64>::zeros(n, n * m);
    let mut block = b.clone();
    for k in 0..n {
        ctrb.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = a * &block;
    }
    let svd = ctrb.svd(false, false);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_eigenvalues() {
        let e = eig_general(&DMatrix::identity(3, 3)).unwrap();
        assert!(e.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn triangular_closed_loop_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[-100.0, 0.0, 0.0, 10.0, -10.0, 0.0, 1.0, 0.0, -1.0]);
        let e = eig_general(&a).unwrap();
        let want = [-100.0, -10.0, -1.0];
        for (z, w) in e.iter().zip(want) {
            assert!((z.re - w).abs() < 1e-10 && z.im == 0.0);
        }
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(
            eig_general(&DMatrix::zeros(2, 3)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn inertia_of_diagonal() {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0, 3.0]));
        let (vals, i) = eig_symmetric(&s, INERTIA_ZERO_TOL).unwrap();
        assert_eq!(i, Inertia::new(2, 0, 1));
        assert_eq!(vals, vec![-2.0, -1.0, 3.0]);
    }

    #[test]
    fn inertia_of_zero_matrix() {
        assert_eq!(inertia(&DMatrix::zeros(4, 4)).unwrap(), Inertia::new(0, 4, 0));
    }

    #[test]
    fn inertia_of_published_nominal_y() {
        let y = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.3788, -0.8923, -0.2650, -0.8923, -0.5368, -0.2545, -0.2650, -0.2545, -0.2053,
            ],
        );
        assert_eq!(inertia(&y).unwrap(), Inertia::new(2, 0, 1));
    }

    #[test]
    fn asymmetric_rejected() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eig_symmetric(&s, 1e-8), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn controllability() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert_eq!(controllability_rank(&a, &b), 2);
        let b0 = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        assert_eq!(controllability_rank(&a, &b0), 1);
    }
}
