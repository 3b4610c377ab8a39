use std::fmt;

use nalgebra::Complex;

use super::poly::Polynomial;
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Rational SISO transfer function `num(s) / den(s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() || den.degree() < 1 {
            return Err(Error::invalid(format!(
                "denominator must have degree >= 1 (got {den})"
            )));
        }
        if num.coeffs().iter().chain(den.coeffs()).any(|c| !c.is_finite()) {
            return Err(Error::invalid("non-finite transfer function coefficient"));
        }
        Ok(TransferFunction { num, den })
    }

    /// Coefficients in ascending degree order.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        TransferFunction::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    /// `gain / (tau s + 1)`
    pub fn first_order_lag(gain: f64, tau: f64) -> Result<Self> {
        TransferFunction::new(Polynomial::constant(gain), Polynomial::linear(1.0, tau))
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn order(&self) -> usize {
        self.den.degree()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() < self.den.degree()
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }

    pub fn eval(&self, s: C64) -> Result<C64> {
        let d = self.den.eval_complex(s);
        if d.norm() <= 1e-14 * self.den.eval_abs_scale(s) {
            return Err(Error::NumericalSingularity(format!(
                "transfer function evaluated at a pole (s = {s})"
            )));
        }
        Ok(self.num.eval_complex(s) / d)
    }

    pub fn dc_gain(&self) -> Result<f64> {
        self.eval(C64::new(0.0, 0.0)).map(|c| c.re)
    }

    /// `lim_{|s|→∞} G(s)`; finite because improper functions are never built here.
    pub fn high_frequency_limit(&self) -> f64 {
        if self.num.is_zero() || self.num.degree() < self.den.degree() {
            0.0
        } else {
            self.num.coeff(self.den.degree()) / self.den.leading()
        }
    }

    pub fn poles(&self) -> Result<Vec<C64>> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Result<Vec<C64>> {
        if self.num.is_zero() || self.num.degree() == 0 {
            return Ok(Vec::new());
        }
        self.num.roots()
    }

    pub fn scale(&self, c: f64) -> Self {
        TransferFunction {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn negate(&self) -> Self {
        self.scale(-1.0)
    }

    /// Cascade `self` then `other` (product of the two functions).
    pub fn series(&self, other: &TransferFunction) -> Self {
        TransferFunction {
            num: &self.num * &other.num,
            den: &self.den * &other.den,
        }
    }

    /// `sign_a · self + sign_b · other` over the common denominator.
    pub fn parallel(&self, other: &TransferFunction, sign_a: f64, sign_b: f64) -> Self {
        let num = &(&self.num * &other.den).scale(sign_a) + &(&other.num * &self.den).scale(sign_b);
        TransferFunction {
            num,
            den: &self.den * &other.den,
        }
    }

    /// Copy with a monic denominator.
    pub fn normalized(&self) -> Self {
        let lead = self.den.leading();
        TransferFunction {
            num: self.num.scale(1.0 / lead),
            den: self.den.scale(1.0 / lead),
        }
    }

    /// Max relative coefficient error between the normalized forms.
    pub fn coefficient_distance(&self, other: &TransferFunction) -> f64 {
        let a = self.normalized();
        let b = other.normalized();
        a.num.relative_distance(&b.num).max(a.den.relative_distance(&b.den))
    }
}

impl fmt::Display for TransferFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_lag_values() {
        let g = TransferFunction::first_order_lag(1.0, 1.0).unwrap();
        assert_eq!(g.eval(C64::new(0.0, 0.0)).unwrap(), C64::new(1.0, 0.0));
        let v = g.eval(C64::new(0.0, 1.0)).unwrap();
        assert!((v - C64::new(0.5, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn evaluation_at_pole_is_singular() {
        let g = TransferFunction::first_order_lag(1.0, 1.0).unwrap();
        assert!(matches!(
            g.eval(C64::new(-1.0, 0.0)),
            Err(Error::NumericalSingularity(_))
        ));
    }

    #[test]
    fn constant_denominator_rejected() {
        assert!(TransferFunction::from_coeffs(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn series_of_lags() {
        let a = TransferFunction::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        let b = TransferFunction::from_coeffs(&[1.0], &[2.0, 1.0]).unwrap();
        let want = TransferFunction::from_coeffs(&[1.0], &[2.0, 3.0, 1.0]).unwrap();
        assert!(a.series(&b).coefficient_distance(&want) < 1e-15);
    }

    #[test]
    fn double_negation_is_identity() {
        let g = TransferFunction::from_coeffs(&[1.0, 2.0], &[3.0, 4.0, 5.0]).unwrap();
        assert_eq!(g.negate().negate(), g);
    }

    #[test]
    fn properness() {
        let g = TransferFunction::from_coeffs(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert!(g.is_proper() && !g.is_strictly_proper());
        assert_eq!(g.high_frequency_limit(), 2.0);
    }
}
