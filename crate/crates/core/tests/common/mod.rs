#![allow(dead_code)]

pub mod oracles;
pub mod props;

use mixfeed::cable::{cable_ss, interconnect, CableParams, InterconnectedSystem};
use mixfeed::lmi::{design_passive, Design, DesignOptions};
use mixfeed::lti::TransferFunction;
use mixfeed::mixed_feedback::{ClosedLoopSystem, MixedFeedbackParams, Saturation};
use nalgebra::{DMatrix, DVector};

pub const TAU_L: f64 = 0.01;
pub const TAU_P: f64 = 0.1;
pub const TAU_N: f64 = 1.0;
pub const LAMBDA: f64 = 50.0;

pub fn params(k: f64, beta: f64) -> MixedFeedbackParams {
    let plant = TransferFunction::first_order_lag(1.0, TAU_L).unwrap();
    MixedFeedbackParams::new(k, beta, TAU_P, TAU_N, plant).unwrap()
}

/// Plant lag followed by the two controller lags.
pub fn lag_matrix(tau_l: f64, tau_p: f64, tau_n: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        3,
        3,
        &[
            -1.0 / tau_l,
            0.0,
            0.0,
            1.0 / tau_p,
            -1.0 / tau_p,
            0.0,
            1.0 / tau_n,
            0.0,
            -1.0 / tau_n,
        ],
    )
}

pub fn nominal_a() -> DMatrix<f64> {
    lag_matrix(TAU_L, TAU_P, TAU_N)
}

pub fn col(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}

pub fn row(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, v.len(), v)
}

pub fn nominal_b() -> DMatrix<f64> {
    col(&[1.0 / TAU_L, 0.0, 0.0])
}

pub fn c1() -> DMatrix<f64> {
    row(&[1.0, 0.0, 0.0])
}

/// Corners of the ±20% box in (τp, τn).
pub fn hull_vertices() -> Vec<DMatrix<f64>> {
    let mut out = Vec::new();
    for tp in [0.8 * TAU_P, 1.2 * TAU_P] {
        for tn in [0.8 * TAU_N, 1.2 * TAU_N] {
            out.push(lag_matrix(TAU_L, tp, tn));
        }
    }
    out
}

pub fn closed_loop(a: &DMatrix<f64>, b: &DMatrix<f64>, k: &DMatrix<f64>) -> ClosedLoopSystem {
    let b1 = DVector::from_column_slice(b.as_slice());
    ClosedLoopSystem::new(a.clone(), b1, c1(), k.clone(), Saturation::default()).unwrap()
}

/// Membrane node with R0 = 100, C0 = 1e-4 driving the controller lags.
pub fn cable_b() -> DMatrix<f64> {
    col(&[1e4, 0.0, 0.0])
}

pub const CABLE_LAMBDA: f64 = 15.0;
pub const CABLE_MU: f64 = 30.0;
pub const CABLE_R2: [f64; 4] = [300.0, 400.0, 500.0, 600.0];

pub fn cable_params(r2: f64) -> CableParams {
    CableParams::new(15, 100.0, r2, 1e-4).unwrap()
}

pub fn cable_design() -> Design {
    let opts = DesignOptions {
        instability: true,
        nu: Some(1e6),
        ..Default::default()
    };
    design_passive(&nominal_a(), &cable_b(), &c1(), CABLE_LAMBDA, CABLE_MU, &opts).unwrap()
}

pub fn cable_system(design: &Design, r2: f64) -> InterconnectedSystem {
    let osc = closed_loop(&nominal_a(), &cable_b(), design.k());
    interconnect(&osc, &cable_ss(&cable_params(r2)).unwrap()).unwrap()
}

pub fn x0_kick(n: usize) -> DVector<f64> {
    let mut x = DVector::zeros(n);
    x[0] = 0.1;
    x
}
