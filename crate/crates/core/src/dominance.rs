//! Circle-criterion dominance certificates, the k0/k2 gain boundaries,
//! (k, β) dominance maps and root-locus sweeps.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{find_equilibria, Stability};
use crate::error::{Error, Result};
use crate::lti::{
    count_poles_right_of, eig_general, log_space, shifted_min_real, FreqGrid, FrequencyResponse,
    TransferFunction, C64,
};
use crate::mixed_feedback::{MixedFeedbackParams, Saturation};

/// Relative distance to k0/k2 treated as a tie.
pub const BOUNDARY_TIE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMethod {
    Circle,
    Lmi,
}

/// Evidence that a system is p-dominant with rate λ.
#[derive(Clone, Debug, PartialEq)]
pub struct DominanceCertificate {
    pub p: usize,
    pub lambda: f64,
    pub method: CertificateMethod,
    /// Quadratic form with inertia (p, 0, n-p), LMI route only.
    pub p_matrix: Option<DMatrix<f64>>,
    /// Strictness margin: `min Re G + 1/K` (circle) or the LMI ε.
    pub epsilon: f64,
    /// Attained `min_ω Re G(jω - λ)` (circle route).
    pub min_real: Option<f64>,
    pub omega_star: Option<f64>,
    /// Max-eigenvalue residuals of the LMI constraints.
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CircleOutcome {
    Certified(DominanceCertificate),
    Failed { p: usize, min_real: f64, omega: f64 },
}

impl CircleOutcome {
    pub fn certificate(&self) -> Option<&DominanceCertificate> {
        match self {
            CircleOutcome::Certified(c) => Some(c),
            CircleOutcome::Failed { .. } => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, CircleOutcome::Certified(_))
    }
}

/// Shifted Nyquist locus right of the vertical line through `-1/K_sector`.
pub fn circle_criterion<G: FrequencyResponse + ?Sized>(
    g: &G,
    lambda: f64,
    k_sector: f64,
    grid: &FreqGrid,
) -> Result<CircleOutcome> {
    if !(k_sector > 0.0) {
        return Err(Error::invalid("sector bound K must be positive"));
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid("rate λ must be nonnegative"));
    }
    let p = count_poles_right_of(g, -lambda)?;
    let m = shifted_min_real(g, lambda, grid)?;
    let margin = m.value + 1.0 / k_sector;
    if margin > 0.0 {
        Ok(CircleOutcome::Certified(DominanceCertificate {
            p,
            lambda,
            method: CertificateMethod::Circle,
            p_matrix: None,
            epsilon: margin,
            min_real: Some(m.value),
            omega_star: Some(m.omega),
            residuals: Vec::new(),
        }))
    } else {
        Ok(CircleOutcome::Failed {
            p,
            min_real: m.value,
            omega: m.omega,
        })
    }
}

fn bound_from_min(m: f64) -> f64 {
    if m >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / m
    }
}

fn unit_loop(params: &MixedFeedbackParams, beta: f64) -> Result<TransferFunction> {
    params.with_gain(1.0, beta)?.loop_tf()
}

/// Largest gain for which the λ = 0 circle test certifies 0-dominance.
pub fn k0(beta: f64, params: &MixedFeedbackParams, grid: &FreqGrid) -> Result<f64> {
    let g = unit_loop(params, beta)?;
    Ok(bound_from_min(shifted_min_real(&g, 0.0, grid)?.value))
}

/// Largest gain for which the rate-λ circle test certifies 2-dominance.
pub fn k2(beta: f64, lambda: f64, params: &MixedFeedbackParams, grid: &FreqGrid) -> Result<f64> {
    let g = unit_loop(params, beta)?;
    let p = count_poles_right_of(&g, -lambda)?;
    if p != 2 {
        return Err(Error::precondition(format!(
            "G(s - λ) has {p} poles right of -λ = {}; 2-dominance needs exactly 2",
            -lambda
        )));
    }
    Ok(bound_from_min(shifted_min_real(&g, lambda, grid)?.value))
}

/// Geometric mean of the magnitudes of the two leftmost open-loop poles.
pub fn default_lambda(params: &MixedFeedbackParams) -> Result<f64> {
    let mut poles: Vec<f64> = params.plant().poles()?.iter().map(|p| p.re).collect();
    poles.push(-1.0 / params.tau_p);
    poles.push(-1.0 / params.tau_n);
    poles.sort_by(f64::total_cmp);
    Ok((poles[0] * poles[1]).abs().sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    ZeroDominant,
    TwoDomStableEq,
    Oscillation,
    OscillationPlusFixedPoints,
    NoCertificate,
}

impl RegionLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionLabel::ZeroDominant => "ZeroDominant",
            RegionLabel::TwoDomStableEq => "TwoDomStableEq",
            RegionLabel::Oscillation => "Oscillation",
            RegionLabel::OscillationPlusFixedPoints => "OscillationPlusFixedPoints",
            RegionLabel::NoCertificate => "NoCertificate",
        }
    }
}

impl std::fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn tie(k: f64, bound: f64) -> bool {
    bound.is_finite() && (k - bound).abs() <= BOUNDARY_TIE_TOL * bound.abs().max(1.0)
}

/// Which certificate applies at gain `k`, with ties resolved toward the
/// lower-p label or no certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GainBand {
    ZeroDominant,
    TwoDominant,
    None,
}

pub fn gain_band(k: f64, k0: f64, k2: Option<f64>) -> GainBand {
    if k < k0 || tie(k, k0) {
        return GainBand::ZeroDominant;
    }
    match k2 {
        Some(k2) if k < k2 && !tie(k, k2) => GainBand::TwoDominant,
        _ => GainBand::None,
    }
}

/// Region label at `params.k, params.beta` given precomputed boundaries.
pub fn label_point(
    params: &MixedFeedbackParams,
    k0: f64,
    k2: Option<f64>,
    r: f64,
    sat: &Saturation,
) -> RegionLabel {
    match gain_band(params.k, k0, k2) {
        GainBand::ZeroDominant => RegionLabel::ZeroDominant,
        GainBand::None => RegionLabel::NoCertificate,
        GainBand::TwoDominant => {
            let eq = params
                .closed_loop(sat.clone())
                .and_then(|sys| find_equilibria(&sys, r));
            match eq {
                Ok(eq) => label_from_equilibria(&eq.iter().map(|e| e.stability).collect::<Vec<_>>()),
                Err(_) => RegionLabel::NoCertificate,
            }
        }
    }
}

/// Label of a 2-dominant point from the stability of its equilibria.
pub fn label_from_equilibria(stab: &[Stability]) -> RegionLabel {
    let stable = stab.iter().filter(|s| **s == Stability::Stable).count();
    if !stab.is_empty() && stable == 0 {
        RegionLabel::Oscillation
    } else if stab.len() >= 3 && stable > 0 {
        RegionLabel::OscillationPlusFixedPoints
    } else if stab.len() == 1 && stable == 1 {
        RegionLabel::TwoDomStableEq
    } else {
        RegionLabel::NoCertificate
    }
}

#[derive(Clone, Debug)]
pub struct MapConfig {
    pub betas: Vec<f64>,
    pub ks: Vec<f64>,
    pub lambda: f64,
    pub r: f64,
    pub freq: FreqGrid,
    pub sat: Saturation,
}

impl MapConfig {
    /// 100 β points in [0, 1] × 120 log-spaced gains in [0.1, 1000].
    pub fn standard(lambda: f64) -> Self {
        MapConfig {
            betas: linspace(0.0, 1.0, 100),
            ks: log_space(0.1, 1000.0, 120),
            lambda,
            r: 0.0,
            freq: FreqGrid::default(),
            sat: Saturation::default(),
        }
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// One β column of a map.
#[derive(Clone, Debug, PartialEq)]
pub struct MapColumn {
    pub beta: f64,
    pub k0: f64,
    /// `None` when the 2-pole splitting precondition fails at this β.
    pub k2: Option<f64>,
    pub labels: Vec<RegionLabel>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominanceMap {
    pub ks: Vec<f64>,
    pub lambda: f64,
    pub columns: Vec<MapColumn>,
}

impl DominanceMap {
    pub fn label_at(&self, beta_index: usize, k_index: usize) -> RegionLabel {
        self.columns[beta_index].labels[k_index]
    }
}

fn map_column(params: &MixedFeedbackParams, beta: f64, cfg: &MapConfig) -> Result<MapColumn> {
    let k0v = k0(beta, params, &cfg.freq)?;
    let k2v = match k2(beta, cfg.lambda, params, &cfg.freq) {
        Ok(v) => Some(v),
        Err(Error::PreconditionFailed(_)) | Err(Error::ShiftedAxisPole { .. }) => None,
        Err(e) => return Err(e),
    };
    let labels = cfg
        .ks
        .iter()
        .map(|&k| match params.with_gain(k, beta) {
            Ok(p) => label_point(&p, k0v, k2v, cfg.r, &cfg.sat),
            Err(_) => RegionLabel::NoCertificate,
        })
        .collect();
    Ok(MapColumn {
        beta,
        k0: k0v,
        k2: k2v,
        labels,
    })
}

/// Labels every `(k, β)` grid point; columns are computed in parallel and
/// returned in grid order.
pub fn dominance_map(params: &MixedFeedbackParams, cfg: &MapConfig) -> Result<DominanceMap> {
    if cfg.betas.len() < 2 || cfg.ks.len() < 2 {
        return Err(Error::invalid("dominance map needs at least 2 points per axis"));
    }
    if cfg.betas.iter().any(|b| !(0.0..=1.0).contains(b)) {
        return Err(Error::invalid("β grid must lie in [0, 1]"));
    }
    if cfg.ks.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
        return Err(Error::invalid("gain grid must be finite and nonnegative"));
    }
    if cfg.ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("gain grid must be strictly increasing"));
    }
    let columns = cfg
        .betas
        .par_iter()
        .map(|&beta| map_column(params, beta, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(DominanceMap {
        ks: cfg.ks.clone(),
        lambda: cfg.lambda,
        columns,
    })
}

/// Closed-loop eigenvalues of `A + σ B1 K(k, β)` for each gain in `gains`.
pub fn root_locus(
    params: &MixedFeedbackParams,
    beta: f64,
    gains: &[f64],
    sigma: f64,
) -> Result<Vec<Vec<C64>>> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::invalid("slope σ must lie in [0, 1]"));
    }
    if gains.iter().any(|k| !k.is_finite()) || gains.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("gain grid must be finite and ascending"));
    }
    let base = params.with_gain(0.0, beta)?.closed_loop(Saturation::default())?;
    let n = params.plant_order();
    gains
        .iter()
        .map(|&k| {
            let row = crate::mixed_feedback::kbeta_to_k(k * sigma, beta, n);
            eig_general(&(&base.a + &base.b1 * row))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: f64, beta: f64) -> MixedFeedbackParams {
        let plant = TransferFunction::first_order_lag(1.0, 0.01).unwrap();
        MixedFeedbackParams::new(k, beta, 0.1, 1.0, plant).unwrap()
    }

    #[test]
    fn pole_counts_of_unit_loop() {
        let g = params(1.0, 0.4).loop_tf().unwrap();
        assert_eq!(count_poles_right_of(&g, -50.0).unwrap(), 2);
        assert_eq!(count_poles_right_of(&g, 0.0).unwrap(), 0);
        assert_eq!(count_poles_right_of(&g, -200.0).unwrap(), 3);
    }

    #[test]
    fn k2_requires_two_poles() {
        let p = params(1.0, 0.4);
        assert!(matches!(
            k2(0.4, 0.1, &p, &FreqGrid::default()),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn gain_band_ties() {
        assert_eq!(gain_band(1.0, 1.0, Some(10.0)), GainBand::ZeroDominant);
        assert_eq!(gain_band(10.0, 1.0, Some(10.0)), GainBand::None);
        assert_eq!(gain_band(5.0, 1.0, None), GainBand::None);
        assert_eq!(gain_band(5.0, 1.0, Some(f64::INFINITY)), GainBand::TwoDominant);
    }

    #[test]
    fn default_lambda_for_first_order_plant() {
        assert!((default_lambda(&params(1.0, 0.4)).unwrap() - 1000f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn locus_at_zero_gain_is_open_loop() {
        let l = root_locus(&params(1.0, 0.8), 0.8, &[0.0], 1.0).unwrap();
        let re: Vec<f64> = l[0].iter().map(|z| z.re).collect();
        assert!((re[0] + 100.0).abs() < 1e-9 && (re[1] + 10.0).abs() < 1e-9 && (re[2] + 1.0).abs() < 1e-9);
    }
}
