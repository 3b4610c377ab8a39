//! Robustness of the dominance certificate and of equilibrium instability.

use nalgebra::{DMatrix, DVector};

use crate::dominance::circle_criterion;
use crate::equilibria::{find_equilibria, Equilibrium};
use crate::error::{Error, Result};
use crate::lmi::{bisect_floor, feasibility, verify_p_gain, VerifyOptions};
use crate::lti::linalg::eig_general;
use crate::lti::{
    freq_response, shifted_sup_mag, FreqGrid, Inertia, StateSpace, TransferFunction,
};
use crate::mixed_feedback::{assemble_closed_loop, kbeta_to_k, make_loop_tf, MixedFeedbackParams, Saturation};

/// Admissible inflation `δ_max = 1 + min_ω Re G(jω - λ)` of the nominal p = 2 locus.
pub fn dominance_margin(params: &MixedFeedbackParams, lambda: f64, grid: &FreqGrid) -> Result<f64> {
    let g = params.loop_tf()?;
    let out = circle_criterion(&g, lambda, 1.0, grid)?;
    match out.certificate() {
        Some(c) if c.p == 2 => Ok(1.0 + c.min_real.unwrap_or(f64::NAN)),
        Some(c) => Err(Error::precondition(format!(
            "nominal certificate has degree {}, not 2",
            c.p
        ))),
        None => Err(Error::precondition("nominal loop fails the circle test at this rate")),
    }
}

/// Samples `(ω, δ / |C(jω - λ)|)` of the admissible plant-uncertainty magnitude.
pub fn uncertainty_weight(params: &MixedFeedbackParams, lambda: f64, delta: f64, omegas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !(delta >= 0.0) {
        return Err(Error::invalid("δ must be nonnegative"));
    }
    let c = params.controller()?.tf;
    omegas
        .iter()
        .map(|&w| {
            let m = freq_response(&c, w, lambda)?.norm();
            if m == 0.0 {
                return Err(Error::NumericalSingularity(format!("controller vanishes at ω = {w}")));
            }
            Ok((w, delta / m))
        })
        .collect()
}

/// Rejects perturbations with a pole at or right of `-λ`.
pub fn check_fast(delta: &TransferFunction, lambda: f64) -> Result<()> {
    let poles = delta.poles()?;
    if let Some(p) = poles.iter().find(|p| p.re >= -lambda) {
        return Err(Error::precondition(format!(
            "perturbation pole {p} is not left of -λ = {}",
            -lambda
        )));
    }
    Ok(())
}

/// Circle test at rate `λ` for the plant `P + Δ` with an additive fast `Δ`.
/// Returns whether the perturbed loop keeps a p = 2 certificate.
pub fn perturbed_certificate(
    params: &MixedFeedbackParams,
    lambda: f64,
    delta: &TransferFunction,
    grid: &FreqGrid,
) -> Result<bool> {
    check_fast(delta, lambda)?;
    let plant = params.plant_tf().parallel(delta, 1.0, 1.0);
    let g = make_loop_tf(params.k, params.beta, params.tau_p, params.tau_n, &plant)?;
    let out = circle_criterion(&g, lambda, 1.0, grid)?;
    Ok(matches!(out.certificate(), Some(c) if c.p == 2))
}

/// `sup_ω |Δ(jω - λ) C(jω - λ)|`.
pub fn weighted_perturbation_size(
    params: &MixedFeedbackParams,
    lambda: f64,
    delta: &TransferFunction,
    grid: &FreqGrid,
) -> Result<f64> {
    let dc = params.controller()?.tf.series(delta);
    Ok(shifted_sup_mag(&dc, lambda, grid)?.value)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstabilityGain {
    /// `sup_ω |C2 (jωI - Ā)⁻¹ B2|`.
    pub gamma: f64,
    pub omega: f64,
    pub unstable: usize,
}

impl InstabilityGain {
    /// Small-gain verdict against a perturbation of gain `delta_gain`.
    pub fn preserved(&self, delta_gain: f64) -> bool {
        self.gamma * delta_gain < 1.0
    }

    pub fn inertia(&self, n: usize) -> Inertia {
        Inertia::new(self.unstable, 0, n - self.unstable)
    }
}

fn hyperbolic_split(a_bar: &DMatrix<f64>) -> Result<usize> {
    let eig = eig_general(a_bar)?;
    if let Some(e) = eig.iter().find(|e| e.re.abs() <= 1e-8) {
        return Err(Error::precondition(format!("linearization has eigenvalue {e} on the imaginary axis")));
    }
    Ok(eig.iter().filter(|e| e.re > 0.0).count())
}

/// Gain of the linearization from the uncertainty input to its output, by frequency sweep.
pub fn instability_gain(a_bar: &DMatrix<f64>, b2: &DMatrix<f64>, c2: &DMatrix<f64>, grid: &FreqGrid) -> Result<InstabilityGain> {
    let unstable = hyperbolic_split(a_bar)?;
    if b2.iter().all(|&v| v == 0.0) || c2.iter().all(|&v| v == 0.0) {
        return Ok(InstabilityGain {
            gamma: 0.0,
            omega: 0.0,
            unstable,
        });
    }
    let ss = StateSpace::new(a_bar.clone(), b2.clone(), c2.clone(), DMatrix::zeros(c2.nrows(), b2.ncols()))?;
    let e = shifted_sup_mag(&ss, 0.0, grid)?;
    Ok(InstabilityGain {
        gamma: e.value,
        omega: e.omega,
        unstable,
    })
}

/// Smallest `γ` for which a storage with the instability inertia certifies the gain,
/// searched in `[γ_sweep / 2, 4 γ_sweep]`.
pub fn instability_gain_lmi(
    a_bar: &DMatrix<f64>,
    b2: &DMatrix<f64>,
    c2: &DMatrix<f64>,
    grid: &FreqGrid,
    opts: &VerifyOptions,
) -> Result<f64> {
    let sweep = instability_gain(a_bar, b2, c2, grid)?;
    if sweep.gamma == 0.0 {
        return Ok(0.0);
    }
    let n = a_bar.nrows();
    let target = sweep.inertia(n);
    let d = DMatrix::zeros(c2.nrows(), b2.ncols());
    let vertices = [a_bar.clone()];
    bisect_floor(0.5 * sweep.gamma, 4.0 * sweep.gamma, |g| {
        feasibility(verify_p_gain(&vertices, b2, c2, &d, 0.0, g, target, opts))
    })
}

/// Equilibria with the DC loop gain shifted by `Δ0`: the plant DC gain `kP(0)`
/// becomes `kP(0) + Δ0`, realized by rescaling `k` in the nominal structure.
pub fn perturbed_equilibria(
    params: &MixedFeedbackParams,
    delta0: f64,
    r: f64,
    sat: &Saturation,
) -> Result<Vec<Equilibrium>> {
    let p0 = params.plant_dc_gain()?;
    if p0 == 0.0 {
        return Err(Error::precondition("plant has zero DC gain"));
    }
    let k_eff = (params.k * p0 + delta0) / p0;
    let row = kbeta_to_k(k_eff, params.beta, params.plant_order());
    let sys = assemble_closed_loop(params.plant(), params.tau_p, params.tau_n, row, sat.clone())?;
    find_equilibria(&sys, r)
}

/// `Δ(s) = c / (s + a)` style first-order perturbations used in margin checks.
pub fn first_order_perturbation(gain: f64, pole: f64) -> Result<TransferFunction> {
    if !(pole > 0.0) {
        return Err(Error::invalid("pole magnitude must be positive"));
    }
    TransferFunction::from_coeffs(&[gain], &[pole, 1.0])
}

/// Displacement of each equilibrium between two DC perturbations (same root count required).
pub fn equilibrium_shift(a: &[Equilibrium], b: &[Equilibrium]) -> Option<Vec<f64>> {
    if a.len() != b.len() {
        return None;
    }
    Some(
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let d: DVector<f64> = &x.x - &y.x;
                d.norm()
            })
            .collect(),
    )
}
