//! Adaptive Dormand–Prince 5(4) integration of the closed loop.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::reference::Reference;
use crate::error::{Error, Result};
use crate::lti::eig_general;
use crate::mixed_feedback::ClosedLoopSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimMeta {
    pub method: String,
    pub tol: f64,
    pub h_max: f64,
    pub output_dt: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Sampled trajectory: times, states, output `y = C1 x` and reference.
#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub r: Vec<f64>,
    pub meta: SimMeta,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.t.first(), self.t.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.x.last().map(|v| v.as_slice())
    }

    /// Samples of state component `i`.
    pub fn state_component(&self, i: usize) -> Vec<f64> {
        self.x.iter().map(|x| x[i]).collect()
    }

    fn push(&mut self, t: f64, x: &DVector<f64>, y: f64, r: f64) {
        if let Some(&last) = self.t.last() {
            if t <= last {
                return;
            }
        }
        self.t.push(t);
        self.x.push(x.as_slice().to_vec());
        self.y.push(y);
        self.r.push(r);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorOptions {
    /// Mixed absolute/relative local error tolerance.
    pub tol: f64,
    /// Step bound; `None` uses `0.1 / spectral_radius(A)`.
    pub h_max: Option<f64>,
    /// Uniform output spacing (dense output); `None` records every accepted step.
    pub output_dt: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            tol: 1e-8,
            h_max: None,
            output_dt: None,
            max_steps: 50_000_000,
        }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Default step bound `0.1 / ρ(A)`: a tenth of the fastest time constant.
pub fn default_h_max(sys: &ClosedLoopSystem) -> Result<f64> {
    let rho = eig_general(&sys.a)?
        .iter()
        .fold(0.0_f64, |m, z| m.max(z.norm()));
    Ok(if rho > 0.0 { 0.1 / rho } else { 0.1 })
}

pub fn integrate(
    sys: &ClosedLoopSystem,
    x0: &DVector<f64>,
    reference: &Reference,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<SimTrace> {
    if x0.len() != sys.order() {
        return Err(Error::invalid(format!(
            "initial state has length {}, system order is {}",
            x0.len(),
            sys.order()
        )));
    }
    let h_max = match opts.h_max {
        Some(h) => h,
        None => default_h_max(sys)?,
    };
    integrate_field(
        |x, r| sys.vector_field(x, r),
        |x| sys.output(x),
        x0,
        reference,
        t_end,
        h_max,
        opts,
    )
}

/// Integrates `ẋ = f(x, r(t))` from `t = 0`, restarting the step sequence at
/// every discontinuity of `r`.
pub fn integrate_field<F, O>(
    f: F,
    out: O,
    x0: &DVector<f64>,
    reference: &Reference,
    t_end: f64,
    h_max: f64,
    opts: &IntegratorOptions,
) -> Result<SimTrace>
where
    F: Fn(&DVector<f64>, f64) -> DVector<f64>,
    O: Fn(&DVector<f64>) -> f64,
{
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("simulation horizon T must be positive"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("integration tolerance must be positive"));
    }
    if !(h_max > 0.0) {
        return Err(Error::invalid("maximum step must be positive"));
    }
    if let Some(dt) = opts.output_dt {
        if !(dt > 0.0) {
            return Err(Error::invalid("output spacing must be positive"));
        }
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial state is not finite"));
    }
    let mut trace = SimTrace {
        t: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
        r: Vec::new(),
        meta: SimMeta {
            method: "dormand-prince-5(4)".into(),
            tol: opts.tol,
            h_max,
            output_dt: opts.output_dt,
            accepted_steps: 0,
            rejected_steps: 0,
        },
    };
    let mut x = x0.clone();
    trace.push(0.0, &x, out(&x), reference.value(0.0));
    let mut next_out = 1usize;
    let mut h = h_max.min(t_end) * 0.1;
    let mut steps = 0usize;

    for (seg_a, seg_b, r) in reference.constant_segments(0.0, t_end) {
        let mut t = seg_a;
        let mut k1 = f(&x, r);
        while t < seg_b {
            if steps >= opts.max_steps {
                return Err(failure(t, "step budget exhausted", trace));
            }
            steps += 1;
            h = h.min(h_max);
            let last = t + h >= seg_b - 1e-14 * seg_b.abs().max(1.0);
            if last {
                h = seg_b - t;
            }
            let mut k = [k1.clone(), k1.clone(), k1.clone(), k1.clone(), k1.clone(), k1.clone(), k1.clone()];
            for s in 1..6 {
                let mut xs = x.clone();
                for (j, kj) in k.iter().enumerate().take(s) {
                    if A[s][j] != 0.0 {
                        xs.axpy(h * A[s][j], kj, 1.0);
                    }
                }
                k[s] = f(&xs, r);
            }
            // 5th-order solution uses the last stage row of A (FSAL).
            let mut x_new = x.clone();
            for j in 0..6 {
                if A[6][j] != 0.0 {
                    x_new.axpy(h * A[6][j], &k[j], 1.0);
                }
            }
            let k7 = f(&x_new, r);
            k[6] = k7.clone();
            let mut err = 0.0;
            for i in 0..x.len() {
                let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
                let sc = opts.tol * (1.0 + x[i].abs().max(x_new[i].abs()));
                err += (e / sc).powi(2);
            }
            let err = (err / x.len() as f64).sqrt();
            if !err.is_finite() || x_new.iter().any(|v| !v.is_finite()) {
                h *= 0.2;
                trace.meta.rejected_steps += 1;
                if h < 1e-12 * t.abs().max(1.0) {
                    return Err(failure(t, "non-finite state", trace));
                }
                continue;
            }
            if err <= 1.0 {
                let t_new = if last { seg_b } else { t + h };
                match opts.output_dt {
                    None => trace.push(t_new, &x_new, out(&x_new), reference.value(t_new)),
                    Some(dt) => {
                        while (next_out as f64) * dt <= t_new + 1e-12 * dt {
                            let tj = (next_out as f64 * dt).min(t_new);
                            let xj = hermite(&x, &k1, &x_new, &k7, t, t_new, tj);
                            trace.push(tj, &xj, out(&xj), reference.value(tj));
                            next_out += 1;
                        }
                    }
                }
                t = t_new;
                x = x_new;
                k1 = k7;
                trace.meta.accepted_steps += 1;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h *= fac;
                } else {
                    h = (h * fac).max(h_max * 1e-3);
                }
            } else {
                trace.meta.rejected_steps += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < 1e-12 * t.abs().max(1.0) {
                    return Err(failure(t, "step size underflow (stiff or unbounded dynamics)", trace));
                }
            }
        }
    }
    if trace.t.last().copied() != Some(t_end) {
        let tr = reference.value(t_end);
        trace.push(t_end, &x, out(&x), tr);
    }
    Ok(trace)
}

fn hermite(
    x0: &DVector<f64>,
    f0: &DVector<f64>,
    x1: &DVector<f64>,
    f1: &DVector<f64>,
    t0: f64,
    t1: f64,
    t: f64,
) -> DVector<f64> {
    let h = t1 - t0;
    if h <= 0.0 {
        return x1.clone();
    }
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    x0 * (2.0 * s3 - 3.0 * s2 + 1.0)
        + f0 * (h * (s3 - 2.0 * s2 + s))
        + x1 * (-2.0 * s3 + 3.0 * s2)
        + f1 * (h * (s3 - s2))
}

fn failure(t: f64, reason: &str, trace: SimTrace) -> Error {
    Error::IntegrationFailure {
        t,
        reason: reason.to_string(),
        partial: Box::new(trace),
    }
}
