//! Discretized passive cable: series `R1`, shunt `R2 ∥ Cm` per segment, open far end.
//!
//! Input is the head voltage `v0`, output the current `i0` drawn into the cable.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::freq::{check_axis, minimize_on_grid};
use crate::lti::{FreqGrid, FrequencyResponse, Polynomial, StateSpace, TransferFunction, C64};
use crate::mixed_feedback::ClosedLoopSystem;
use crate::simulation::{default_h_max, SimTrace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CableParams {
    pub n: usize,
    pub r1: f64,
    pub r2: f64,
    pub cm: f64,
}

impl CableParams {
    pub fn new(n: usize, r1: f64, r2: f64, cm: f64) -> Result<Self> {
        let p = CableParams { n, r1, r2, cm };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("cable needs at least one segment"));
        }
        for (name, v) in [("R1", self.r1), ("R2", self.r2), ("Cm", self.cm)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Largest admissible rate `1/(Cm R2)` for shifted passivity.
    pub fn passivity_rate_limit(&self) -> f64 {
        1.0 / (self.cm * self.r2)
    }
}

/// `G_n(s) = 1 / (R1 + 1 / (Cm s + 1/R2 + G_{n-1}(s)))`, `G_0 = 0`.
pub fn cable_admittance(p: &CableParams, s: C64) -> Result<C64> {
    p.validate()?;
    let mut g = C64::new(0.0, 0.0);
    let tiny = 1e-300;
    for _ in 0..p.n {
        let y = s * p.cm + 1.0 / p.r2 + g;
        if y.norm() <= tiny {
            return Err(Error::NumericalSingularity(format!("cable admittance singular at s = {s}")));
        }
        let z = y.inv() + p.r1;
        if z.norm() <= tiny {
            return Err(Error::NumericalSingularity(format!("cable admittance has a pole at s = {s}")));
        }
        g = z.inv();
    }
    Ok(g)
}

/// Expanded rational form of `G_n` (numerator and denominator of degree n).
pub fn cable_tf(p: &CableParams) -> Result<TransferFunction> {
    p.validate()?;
    let shunt = Polynomial::new(vec![1.0 / p.r2, p.cm]);
    let mut num = Polynomial::zero();
    let mut den = Polynomial::constant(1.0);
    for _ in 0..p.n {
        let y = &(&shunt * &den) + &num;
        let next_den = &y.scale(p.r1) + &den;
        num = y;
        den = next_den;
    }
    TransferFunction::new(num, den)
}

/// Ladder realization with states `v1..vn`.
pub fn cable_ss(p: &CableParams) -> Result<StateSpace> {
    p.validate()?;
    let n = p.n;
    let g1 = 1.0 / p.r1;
    let g2 = 1.0 / p.r2;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let right = if i + 1 < n { g1 } else { 0.0 };
        a[(i, i)] = -(g1 + g2 + right) / p.cm;
        if i > 0 {
            a[(i, i - 1)] = g1 / p.cm;
        }
        if i + 1 < n {
            a[(i, i + 1)] = g1 / p.cm;
        }
    }
    let mut b = DMatrix::zeros(n, 1);
    b[(0, 0)] = g1 / p.cm;
    let mut c = DMatrix::zeros(1, n);
    c[(0, 0)] = -g1;
    let d = DMatrix::from_element(1, 1, g1);
    StateSpace::new(a, b, c, d)
}

/// DC input conductance of the resistive ladder (capacitors open).
pub fn resistive_ladder_conductance(p: &CableParams) -> f64 {
    let mut g = 0.0;
    for _ in 0..p.n {
        g = 1.0 / (p.r1 + 1.0 / (1.0 / p.r2 + g));
    }
    g
}

/// `inf_ω Re G(jω - λ) / |G(jω - λ)|²`, i.e. `inf_ω Re 1/G(jω - λ)`.
pub fn output_passivity_excess<G: FrequencyResponse + ?Sized>(g: &G, lambda: f64, grid: &FreqGrid) -> Result<f64> {
    check_axis(&g.pole_list()?, -lambda)?;
    let f = |w: f64| -> Result<f64> {
        let z = g.eval_at(C64::new(-lambda, w))?;
        if z.norm() == 0.0 {
            return Err(Error::NumericalSingularity(format!("zero response at ω = {w}")));
        }
        Ok(z.re / z.norm_sqr())
    };
    let at_inf = g.at_infinity();
    let inf_val = if at_inf == 0.0 { f64::INFINITY } else { 1.0 / at_inf };
    Ok(minimize_on_grid(&f, grid, inf_val)?.value)
}

/// Passivity excess of the cable at rate `λ < 1/(Cm R2)`.
pub fn passivity_excess(p: &CableParams, lambda: f64, grid: &FreqGrid) -> Result<f64> {
    if !(lambda < p.passivity_rate_limit()) {
        return Err(Error::precondition(format!(
            "rate {lambda} is not below 1/(Cm R2) = {}",
            p.passivity_rate_limit()
        )));
    }
    output_passivity_excess(&cable_ss(p)?, lambda, grid)
}

/// Oscillator and cable joined by `v0ᵃ = v0ᵇ`, `i0ᵃ = -i0ᵇ`.
#[derive(Clone, Debug)]
pub struct InterconnectedSystem {
    pub system: ClosedLoopSystem,
    pub osc_order: usize,
    pub cable_order: usize,
    /// Integration step bound taken from the oscillator time scales.
    pub step_bound: f64,
}

impl InterconnectedSystem {
    /// `v0, v1, …, vn` at state `x`.
    pub fn node_voltages(&self, x: &[f64]) -> Vec<f64> {
        let v0: f64 = (0..self.osc_order).map(|j| self.system.c1[(0, j)] * x[j]).sum();
        let mut out = Vec::with_capacity(self.cable_order + 1);
        out.push(v0);
        out.extend_from_slice(&x[self.osc_order..self.osc_order + self.cable_order]);
        out
    }

    /// Peak-to-peak amplitude per node over the final `window` fraction of the trace.
    pub fn node_amplitudes(&self, trace: &SimTrace, window: f64) -> Result<Vec<f64>> {
        if trace.is_empty() || !(window > 0.0 && window <= 1.0) {
            return Err(Error::invalid("empty trace or window outside (0, 1]"));
        }
        let t_end = *trace.t.last().unwrap();
        let t0 = t_end - window * (t_end - trace.t[0]);
        let mut lo = vec![f64::INFINITY; self.cable_order + 1];
        let mut hi = vec![f64::NEG_INFINITY; self.cable_order + 1];
        for (t, x) in trace.t.iter().zip(&trace.x) {
            if *t < t0 {
                continue;
            }
            for (i, v) in self.node_voltages(x).into_iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        Ok(hi.iter().zip(&lo).map(|(h, l)| h - l).collect())
    }
}

/// The port of `osc` is its input vector `b1` (current injection) and output `c1`.
pub fn interconnect(osc: &ClosedLoopSystem, cable: &StateSpace) -> Result<InterconnectedSystem> {
    if !cable.is_siso() {
        return Err(Error::invalid("cable must be single-port"));
    }
    let n = osc.order();
    let m = cable.order();
    let bp = &osc.b1;
    let cp = &osc.c1;
    let db = cable.d[(0, 0)];
    let mut a = DMatrix::zeros(n + m, n + m);
    a.view_mut((0, 0), (n, n)).copy_from(&(&osc.a - bp * cp * db));
    a.view_mut((0, n), (n, m)).copy_from(&(-(bp * &cable.c)));
    a.view_mut((n, 0), (m, n)).copy_from(&(&cable.b * cp));
    a.view_mut((n, n), (m, m)).copy_from(&cable.a);
    let mut b1 = DVector::zeros(n + m);
    b1.rows_mut(0, n).copy_from(&osc.b1);
    let mut c1 = DMatrix::zeros(1, n + m);
    c1.view_mut((0, 0), (1, n)).copy_from(cp);
    let mut k = DMatrix::zeros(1, n + m);
    k.view_mut((0, 0), (1, n)).copy_from(&osc.k);
    let system = ClosedLoopSystem::new(a, b1, c1, k, osc.sat.clone())?.with_convention(osc.convention);
    Ok(InterconnectedSystem {
        system,
        osc_order: n,
        cable_order: m,
        step_bound: default_h_max(osc)?,
    })
}
