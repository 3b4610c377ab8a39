//! Closed-loop time integration, reference signals and trajectory verdicts.

pub mod ode;
pub mod reference;
pub mod verdict;

pub use ode::{default_h_max, integrate, integrate_field, IntegratorOptions, SimMeta, SimTrace};
pub use reference::{Pulse, Reference};
pub use verdict::{
    classify_signal, classify_switching, classify_trace, find_peaks, Diagnostics,
    OscillationVerdict, RestWindow, Verdict,
};

use nalgebra::DVector;

use crate::error::Result;
use crate::mixed_feedback::ClosedLoopSystem;

/// Run parameters with the defaults `T = 200 τ_slow`, 50% transient discard.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub x0: DVector<f64>,
    pub reference: Reference,
    pub horizon: f64,
    pub transient_fraction: f64,
    pub slow_tau: f64,
    pub integrator: IntegratorOptions,
}

impl Scenario {
    pub fn new(x0: DVector<f64>, slow_tau: f64) -> Self {
        Scenario {
            x0,
            reference: Reference::default(),
            horizon: 200.0 * slow_tau,
            transient_fraction: 0.5,
            slow_tau,
            integrator: IntegratorOptions::default(),
        }
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.reference = reference;
        self
    }
}

/// Integrates and classifies; pulse references use the rest-window switching test.
pub fn run(sys: &ClosedLoopSystem, sc: &Scenario) -> Result<(SimTrace, Verdict)> {
    let trace = integrate(sys, &sc.x0, &sc.reference, sc.horizon, &sc.integrator)?;
    let verdict = match sc.reference {
        Reference::Constant(_) => classify_trace(&trace, sc.transient_fraction, sc.slow_tau)?,
        Reference::PulseTrain { .. } => {
            classify_switching(&trace, &sc.reference, sc.transient_fraction, sc.slow_tau)?.0
        }
    };
    Ok((trace, verdict))
}
