use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangular pulse active on `[start, start + duration)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub start: f64,
    pub duration: f64,
    pub amplitude: f64,
}

/// Right-continuous piecewise-constant reference signal.
#[derive(Clone, Debug, PartialEq)]
pub enum Reference {
    Constant(f64),
    PulseTrain { base: f64, pulses: Vec<Pulse> },
}

impl Default for Reference {
    fn default() -> Self {
        Reference::Constant(0.0)
    }
}

impl Reference {
    pub fn constant(r0: f64) -> Self {
        Reference::Constant(r0)
    }

    /// Pulses on a zero baseline; they must not overlap.
    pub fn pulse_train(mut pulses: Vec<Pulse>) -> Result<Self> {
        for p in &pulses {
            if !(p.duration > 0.0 && p.start >= 0.0 && p.start.is_finite() && p.duration.is_finite())
                || !p.amplitude.is_finite()
            {
                return Err(Error::invalid(format!("malformed pulse {p:?}")));
            }
        }
        pulses.sort_by(|a, b| a.start.total_cmp(&b.start));
        for w in pulses.windows(2) {
            if w[1].start < w[0].start + w[0].duration {
                return Err(Error::invalid(format!(
                    "pulses overlap: [{}, {}) and [{}, {})",
                    w[0].start,
                    w[0].start + w[0].duration,
                    w[1].start,
                    w[1].start + w[1].duration
                )));
            }
        }
        Ok(Reference::PulseTrain { base: 0.0, pulses })
    }

    /// Bistability probe: `+a` for `d`, rest for `gap`, then `-a` for `d`,
    /// the first pulse starting at `t0`.
    pub fn bistability_probe(amplitude: f64, t0: f64, duration: f64, gap: f64) -> Result<Self> {
        Reference::pulse_train(vec![
            Pulse {
                start: t0,
                duration,
                amplitude,
            },
            Pulse {
                start: t0 + duration + gap,
                duration,
                amplitude: -amplitude,
            },
        ])
    }

    /// Probe defaults scaled by the slow time constant: amplitude ±2,
    /// duration 5τ, first pulse at 20τ, 20τ between pulses.
    pub fn default_probe(slow_tau: f64) -> Self {
        Reference::bistability_probe(2.0, 20.0 * slow_tau, 5.0 * slow_tau, 20.0 * slow_tau)
            .expect("default probe is well formed")
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Reference::Constant(r) => *r,
            Reference::PulseTrain { base, pulses } => pulses
                .iter()
                .find(|p| t >= p.start && t < p.start + p.duration)
                .map_or(*base, |p| base + p.amplitude),
        }
    }

    /// Discontinuity times strictly inside `(t0, t1)`, ascending.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        match self {
            Reference::Constant(_) => Vec::new(),
            Reference::PulseTrain { pulses, .. } => {
                let mut b: Vec<f64> = pulses
                    .iter()
                    .flat_map(|p| [p.start, p.start + p.duration])
                    .filter(|&t| t > t0 && t < t1)
                    .collect();
                b.sort_by(f64::total_cmp);
                b.dedup();
                b
            }
        }
    }

    /// Maximal intervals `[a, b)` on which the signal is constant, covering `[t0, t1]`.
    pub fn constant_segments(&self, t0: f64, t1: f64) -> Vec<(f64, f64, f64)> {
        let mut edges = vec![t0];
        edges.extend(self.breakpoints(t0, t1));
        edges.push(t1);
        edges
            .windows(2)
            .map(|w| (w[0], w[1], self.value(w[0])))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_zero() {
        let r = Reference::constant(0.0);
        assert!([0.0, 1.0, 1e6].iter().all(|&t| r.value(t) == 0.0));
    }

    #[test]
    fn pulse_boundaries() {
        let r = Reference::pulse_train(vec![Pulse {
            start: 1.0,
            duration: 2.0,
            amplitude: 0.5,
        }])
        .unwrap();
        assert_eq!(r.value(1.0), 0.5);
        assert_eq!(r.value(3.0 - 1e-12), 0.5);
        assert_eq!(r.value(3.0), 0.0);
        assert_eq!(r.value(1.0 - 1e-12), 0.0);
        assert_eq!(r.breakpoints(0.0, 10.0), vec![1.0, 3.0]);
    }

    #[test]
    fn overlap_rejected() {
        let p = |s| Pulse {
            start: s,
            duration: 2.0,
            amplitude: 1.0,
        };
        assert!(matches!(
            Reference::pulse_train(vec![p(0.0), p(1.0)]),
            Err(Error::InvalidInput(_))
        ));
        assert!(Reference::pulse_train(vec![p(0.0), p(2.0)]).is_ok());
    }

    #[test]
    fn default_probe_layout() {
        let r = Reference::default_probe(1.0);
        assert_eq!(r.breakpoints(0.0, 200.0), vec![20.0, 25.0, 45.0, 50.0]);
        assert_eq!(r.value(22.0), 2.0);
        assert_eq!(r.value(47.0), -2.0);
        assert_eq!(r.constant_segments(0.0, 200.0).len(), 5);
    }
}
