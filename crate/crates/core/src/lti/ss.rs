use nalgebra::{Complex, DMatrix};

use super::linalg::eig_general;
use super::poly::Polynomial;
use super::tf::TransferFunction;
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Continuous-time realization `ẋ = Ax + Bu, y = Cx + Du`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::invalid(format!(
                "A must be square with n >= 1 (got {}x{})",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || c.ncols() != n || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::invalid(format!(
                "incompatible dimensions: A {n}x{n}, B {}x{}, C {}x{}, D {}x{}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        Ok(StateSpace { a, b, c, d })
    }

    /// SISO realization with zero feedthrough.
    pub fn siso(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        StateSpace::new(a, b, c, DMatrix::zeros(1, 1))
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_siso(&self) -> bool {
        self.inputs() == 1 && self.outputs() == 1
    }

    pub fn poles(&self) -> Result<Vec<C64>> {
        eig_general(&self.a)
    }

    /// `C (sI - A)^{-1} B + D`.
    pub fn eval_matrix(&self, s: C64) -> Result<DMatrix<C64>> {
        let n = self.order();
        let mut m = self.a.map(|x| C64::new(-x, 0.0));
        for i in 0..n {
            m[(i, i)] += s;
        }
        let scale = m.norm();
        let lu = m.lu();
        let u = lu.u();
        let min_pivot = (0..n).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if min_pivot <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NumericalSingularity(format!(
                "state-space response evaluated at a pole (s = {s})"
            )));
        }
        let bc = self.b.map(|x| C64::new(x, 0.0));
        let x = lu
            .solve(&bc)
            .ok_or_else(|| Error::NumericalSingularity(format!("sI - A singular at s = {s}")))?;
        let cc = self.c.map(|v| C64::new(v, 0.0));
        let dc = self.d.map(|v| C64::new(v, 0.0));
        Ok(cc * x + dc)
    }

    pub fn eval_siso(&self, s: C64) -> Result<C64> {
        if !self.is_siso() {
            return Err(Error::invalid("SISO evaluation of a MIMO realization"));
        }
        Ok(self.eval_matrix(s)?[(0, 0)])
    }

    /// `-C A^{-1} B + D`.
    pub fn dc_gain(&self) -> Result<DMatrix<f64>> {
        let lu = self.a.clone().lu();
        let x = lu
            .solve(&self.b)
            .ok_or_else(|| Error::NumericalSingularity("A is singular; DC gain undefined".into()))?;
        Ok(&self.d - &self.c * x)
    }

    /// `self` followed by `next`.
    pub fn series(&self, next: &StateSpace) -> Result<StateSpace> {
        if self.outputs() != next.inputs() {
            return Err(Error::invalid("series: output/input dimension mismatch"));
        }
        let (n1, n2) = (self.order(), next.order());
        let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&next.a);
        a.view_mut((n1, 0), (n2, n1)).copy_from(&(&next.b * &self.c));
        let mut b = DMatrix::zeros(n1 + n2, self.inputs());
        b.view_mut((0, 0), (n1, self.inputs())).copy_from(&self.b);
        b.view_mut((n1, 0), (n2, self.inputs())).copy_from(&(&next.b * &self.d));
        let mut c = DMatrix::zeros(next.outputs(), n1 + n2);
        c.view_mut((0, 0), (next.outputs(), n1)).copy_from(&(&next.d * &self.c));
        c.view_mut((0, n1), (next.outputs(), n2)).copy_from(&next.c);
        let d = &next.d * &self.d;
        StateSpace::new(a, b, c, d)
    }

    /// `sign_a · self + sign_b · other` with a shared input.
    pub fn parallel(&self, other: &StateSpace, sign_a: f64, sign_b: f64) -> Result<StateSpace> {
        if self.inputs() != other.inputs() || self.outputs() != other.outputs() {
            return Err(Error::invalid("parallel: dimension mismatch"));
        }
        let (n1, n2) = (self.order(), other.order());
        let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&other.a);
        let mut b = DMatrix::zeros(n1 + n2, self.inputs());
        b.view_mut((0, 0), (n1, self.inputs())).copy_from(&self.b);
        b.view_mut((n1, 0), (n2, self.inputs())).copy_from(&other.b);
        let mut c = DMatrix::zeros(self.outputs(), n1 + n2);
        c.view_mut((0, 0), (self.outputs(), n1)).copy_from(&(&self.c * sign_a));
        c.view_mut((0, n1), (self.outputs(), n2)).copy_from(&(&other.c * sign_b));
        let d = &self.d * sign_a + &other.d * sign_b;
        StateSpace::new(a, b, c, d)
    }

    pub fn negate(&self) -> StateSpace {
        StateSpace {
            a: self.a.clone(),
            b: self.b.clone(),
            c: -&self.c,
            d: -&self.d,
        }
    }

    /// Controllable canonical form of a proper transfer function.
    pub fn from_tf(g: &TransferFunction) -> Result<StateSpace> {
        let (num, den, d) = split_proper(g)?;
        let n = den.degree();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = -den.coeff(j);
        }
        let mut b = DMatrix::zeros(n, 1);
        b[(n - 1, 0)] = 1.0;
        let c = DMatrix::from_fn(1, n, |_, j| num.coeff(j));
        StateSpace::new(a, b, c, DMatrix::from_element(1, 1, d))
    }

    /// Observable canonical form with `C = [1, 0, …, 0]`; for `b/(s + a)`
    /// this is `A = -a, B = b, C = 1`.
    pub fn from_tf_observable(g: &TransferFunction) -> Result<StateSpace> {
        let (num, den, d) = split_proper(g)?;
        let n = den.degree();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, 0)] = -den.coeff(n - 1 - i);
            if i + 1 < n {
                a[(i, i + 1)] = 1.0;
            }
        }
        let b = DMatrix::from_fn(n, 1, |i, _| num.coeff(n - 1 - i));
        let mut c = DMatrix::zeros(1, n);
        c[(0, 0)] = 1.0;
        StateSpace::new(a, b, c, DMatrix::from_element(1, 1, d))
    }

    /// Transfer function of a SISO realization, using
    /// `C (sI - A)^{-1} B = [det(sI - A + BC) - det(sI - A)] / det(sI - A)`.
    pub fn to_tf(&self) -> Result<TransferFunction> {
        if !self.is_siso() {
            return Err(Error::invalid("to_tf requires a SISO realization"));
        }
        let den = characteristic_polynomial(&self.a)?;
        let closed = &self.a - &self.b * &self.c;
        let shifted = characteristic_polynomial(&closed)?;
        let mut num = &shifted - &den;
        let d = self.d[(0, 0)];
        if d != 0.0 {
            num = &num + &den.scale(d);
        }
        TransferFunction::new(num, den)
    }
}

/// Monic `det(sI - M)` assembled from the eigenvalues of `M`.
pub fn characteristic_polynomial(m: &DMatrix<f64>) -> Result<Polynomial> {
    let eig = eig_general(m)?;
    let n = eig.len();
    let mut p = Polynomial::from_roots(&eig);
    // The leading coefficient is exactly one by construction; keep it exact.
    let mut c = p.coeffs().to_vec();
    if c.len() == n + 1 {
        c[n] = 1.0;
    }
    p = Polynomial::new(c);
    Ok(p)
}

/// Monic denominator, strictly proper numerator remainder, and feedthrough.
fn split_proper(g: &TransferFunction) -> Result<(Polynomial, Polynomial, f64)> {
    if !g.is_proper() {
        return Err(Error::invalid("improper transfer function has no realization"));
    }
    let lead = g.den().leading();
    let den = g.den().scale(1.0 / lead);
    let num = g.num().scale(1.0 / lead);
    let n = den.degree();
    let d = num.coeff(n);
    let num = if d != 0.0 { &num - &den.scale(d) } else { num };
    let mut c = num.coeffs().to_vec();
    c.truncate(n);
    Ok((Polynomial::new(c), den, d))
}
