//! Closed-loop equilibria from the scalar fixed-point equation and their
//! local stability.
//!
//! With `v = Kx` and `g = -K A⁻¹ B1`, an equilibrium satisfies
//! `v = g (φ(v) + r)` (reference at the linear input) or `v = g φ(v + r)`
//! (reference at the saturation input); the state is recovered as
//! `x̄ = -A⁻¹ B1 u` with `u` the corresponding input.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dominance::{k0, k2, label_point, RegionLabel};
use crate::error::{Error, Result};
use crate::lti::{eig_general, FreqGrid, C64};
use crate::mixed_feedback::{ClosedLoopSystem, MixedFeedbackParams, ReferenceConvention, Saturation};

pub const SCAN_POINTS: usize = 10_000;
pub const STABILITY_DEAD_ZONE: f64 = 1e-8;
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium {
    /// Feedback signal `Kx̄`, the argument of φ (up to the reference shift).
    pub v: f64,
    /// Plant output `C1 x̄`.
    pub y: f64,
    pub x: DVector<f64>,
    pub stability: Stability,
    pub eigenvalues: Vec<C64>,
    /// `‖A x̄ + B1 u‖`.
    pub residual: f64,
}

/// Real roots of `v - g(φ(v) + r)` (or `v - g φ(v + r)`), ascending.
pub fn fixed_point_roots(g: f64, r: f64, sat: &Saturation, convention: ReferenceConvention) -> Vec<f64> {
    if g == 0.0 {
        return vec![0.0];
    }
    let h = |v: f64| match convention {
        ReferenceConvention::LinearInput => v - g * (sat.phi(v) + r),
        ReferenceConvention::SaturationInput => v - g * sat.phi(v + r),
    };
    let l = g.abs() * (sat.bound + r.abs()) + 1.0;
    let n = SCAN_POINTS;
    let grid: Vec<f64> = (0..=n).map(|i| l * ((2 * i) as f64 / n as f64 - 1.0)).collect();
    let vals: Vec<f64> = grid.iter().map(|&v| h(v)).collect();
    let mut roots = Vec::new();
    for i in 0..=n {
        if vals[i] == 0.0 {
            roots.push(grid[i]);
        } else if i < n && vals[i] * vals[i + 1] < 0.0 {
            roots.push(bisect(&h, grid[i], grid[i + 1], vals[i]));
        }
    }
    roots
}

fn bisect<F: Fn(f64) -> f64>(h: &F, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) <= 1e-12 * m.abs().max(1.0) {
            return m;
        }
        let fm = h(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Eigenvalues of the linearization at `x̄` and the stability label; a
/// spectral abscissa within the dead zone is an error.
pub fn classify_equilibrium(
    sys: &ClosedLoopSystem,
    x: &DVector<f64>,
    r: f64,
) -> Result<(Stability, Vec<C64>)> {
    let eig = eig_general(&sys.jacobian(x, r))?;
    let max_re = eig.iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re));
    if max_re.abs() <= STABILITY_DEAD_ZONE {
        return Err(Error::MarginalEquilibrium { max_re });
    }
    let st = if max_re < 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    Ok((st, eig))
}

pub fn find_equilibria(sys: &ClosedLoopSystem, r: f64) -> Result<Vec<Equilibrium>> {
    let lu = sys.a.clone().lu();
    let a_inv_b = lu
        .solve(&sys.b1)
        .ok_or_else(|| Error::NumericalSingularity("A is singular; equilibria undefined".into()))?;
    let g = -(&sys.k * &a_inv_b)[(0, 0)];
    let roots = fixed_point_roots(g, r, &sys.sat, sys.convention);
    roots
        .into_iter()
        .map(|v| {
            let u = match sys.convention {
                ReferenceConvention::LinearInput => sys.sat.phi(v) + r,
                ReferenceConvention::SaturationInput => sys.sat.phi(v + r),
            };
            let x = -&a_inv_b * u;
            let residual = (&sys.a * &x + &sys.b1 * sys.input(&x, r)).norm();
            let (stability, eigenvalues) = classify_equilibrium(sys, &x, r)?;
            Ok(Equilibrium {
                v,
                y: sys.output(&x),
                x,
                stability,
                eigenvalues,
                residual,
            })
        })
        .collect()
}

/// Dominance-map label for a single parameter point.
pub fn classify_region(
    params: &MixedFeedbackParams,
    lambda: f64,
    r: f64,
    sat: &Saturation,
    grid: &FreqGrid,
) -> Result<RegionLabel> {
    let k0v = k0(params.beta, params, grid)?;
    let k2v = match k2(params.beta, lambda, params, grid) {
        Ok(v) => Some(v),
        Err(Error::PreconditionFailed(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(label_point(params, k0v, k2v, r, sat))
}

/// `-K A⁻¹ B1` for an arbitrary gain row.
pub fn dc_loop_gain(a: &DMatrix<f64>, b: &DVector<f64>, k: &DMatrix<f64>) -> Result<f64> {
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::NumericalSingularity("A is singular".into()))?;
    Ok(-(k * x)[(0, 0)])
}
