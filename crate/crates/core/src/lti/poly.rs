use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix};

use super::linalg::eig_general;
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Real polynomial with coefficients stored in ascending degree order.
///
/// Trailing (highest-degree) exact zeros are trimmed on construction, so the
/// last stored coefficient is always nonzero. The zero polynomial has no
/// stored coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    /// `a + b s`
    pub fn linear(a: f64, b: f64) -> Self {
        Polynomial::new(vec![a, b])
    }

    /// Monic polynomial with the given roots. Complex roots must come in
    /// conjugate pairs; the imaginary residue of the expansion is dropped.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut acc = vec![C64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![C64::new(0.0, 0.0); acc.len() + 1];
            for (i, c) in acc.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            acc = next;
        }
        Polynomial::new(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, s: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    /// Sum of `|c_i| |s|^i`, the natural scale for judging whether
    /// `eval_complex(s)` is zero up to rounding.
    pub fn eval_abs_scale(&self, s: C64) -> f64 {
        let r = s.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    pub fn scale(&self, c: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn monic(&self) -> Self {
        let lead = self.leading();
        if lead == 0.0 {
            return self.clone();
        }
        self.scale(1.0 / lead)
    }

    pub fn derivative(&self) -> Self {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    /// All complex roots, computed as eigenvalues of the balanced companion matrix.
    pub fn roots(&self) -> Result<Vec<C64>> {
        if self.is_zero() {
            return Err(Error::invalid("roots of the zero polynomial"));
        }
        let n = self.degree();
        if n == 0 {
            return Err(Error::invalid("roots of a constant polynomial"));
        }
        // Zero roots are peeled off exactly; the companion matrix of the rest is nonsingular.
        let shift = self.coeffs.iter().take_while(|&&c| c == 0.0).count();
        let reduced = &self.coeffs[shift..];
        let m = reduced.len() - 1;
        let mut roots = vec![C64::new(0.0, 0.0); shift];
        if m > 0 {
            let lead = reduced[m];
            let mut comp = DMatrix::<f64>::zeros(m, m);
            for j in 0..m {
                comp[(0, j)] = -reduced[m - 1 - j] / lead;
            }
            for i in 1..m {
                comp[(i, i - 1)] = 1.0;
            }
            roots.extend(eig_general(&comp)?);
        }
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(roots)
    }

    /// Max coefficient difference relative to the larger max-abs coefficient.
    pub fn relative_distance(&self, other: &Polynomial) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        let scale = self.max_abs_coeff().max(other.max_abs_coeff()).max(f64::MIN_POSITIVE);
        (0..n)
            .map(|i| (self.coeff(i) - other.coeff(i)).abs())
            .fold(0.0, f64::max)
            / scale
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if *c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}·s")?,
                _ => write!(f, "{c}·s^{i}")?,
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}
