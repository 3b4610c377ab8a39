//! Trajectory classification: converged, oscillating, switched between equilibria.

use serde::{Deserialize, Serialize};

use super::ode::SimTrace;
use super::reference::Reference;
use crate::error::{Error, Result};

pub const MIN_PROMINENCE: f64 = 1e-3;
pub const MIN_PEAKS: usize = 6;
pub const MAX_PERIOD_CV: f64 = 0.05;
pub const MAX_AMPLITUDE_DRIFT: f64 = 0.10;
pub const CONVERGENCE_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OscillationVerdict {
    Converged { value: f64 },
    Oscillating { amplitude: f64, period: f64 },
    SwitchedEquilibrium { old: f64, new: f64 },
    Undetermined,
}

impl OscillationVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            OscillationVerdict::Converged { .. } => "Converged",
            OscillationVerdict::Oscillating { .. } => "Oscillating",
            OscillationVerdict::SwitchedEquilibrium { .. } => "SwitchedEquilibrium",
            OscillationVerdict::Undetermined => "Undetermined",
        }
    }

    pub fn is_oscillating(&self) -> bool {
        matches!(self, OscillationVerdict::Oscillating { .. })
    }
}

impl std::fmt::Display for OscillationVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OscillationVerdict::Converged { value } => write!(f, "Converged(value={value:.6e})"),
            OscillationVerdict::Oscillating { amplitude, period } => {
                write!(f, "Oscillating(amplitude={amplitude:.6e},period={period:.6e})")
            }
            OscillationVerdict::SwitchedEquilibrium { old, new } => {
                write!(f, "SwitchedEquilibrium(old={old:.6e},new={new:.6e})")
            }
            OscillationVerdict::Undetermined => write!(f, "Undetermined"),
        }
    }
}

/// Quantities the verdict was based on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub window_start: f64,
    pub terminal_value: f64,
    pub max_deviation: f64,
    pub peaks: usize,
    pub period_cv: Option<f64>,
    pub amplitude_prev_quarter: Option<f64>,
    pub amplitude_last_quarter: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: OscillationVerdict,
    pub diagnostics: Diagnostics,
}

/// Classifies the output `y` of a trace after discarding `transient_fraction`
/// of its duration. `slow_tau` is the slowest time constant of the loop; the
/// trace must span at least twenty of them.
pub fn classify_trace(trace: &SimTrace, transient_fraction: f64, slow_tau: f64) -> Result<Verdict> {
    classify_signal(&trace.t, &trace.y, transient_fraction, slow_tau)
}

pub fn classify_signal(t: &[f64], y: &[f64], transient_fraction: f64, slow_tau: f64) -> Result<Verdict> {
    if t.len() != y.len() || t.len() < 8 {
        return Err(Error::invalid("signal needs at least 8 matching samples"));
    }
    if !(0.0..1.0).contains(&transient_fraction) {
        return Err(Error::invalid("transient fraction must lie in [0, 1)"));
    }
    let duration = t[t.len() - 1] - t[0];
    if duration < 20.0 * slow_tau {
        return Err(Error::invalid(format!(
            "trace duration {duration} is shorter than 20 slow time constants ({})",
            20.0 * slow_tau
        )));
    }
    let t_start = t[0] + transient_fraction * duration;
    let i0 = t.partition_point(|&s| s < t_start);
    Ok(classify_window(&t[i0..], &y[i0..]))
}

fn classify_window(t: &[f64], y: &[f64]) -> Verdict {
    let terminal = *y.last().unwrap_or(&0.0);
    let max_dev = y.iter().fold(0.0_f64, |m, v| m.max((v - terminal).abs()));
    let mut diag = Diagnostics {
        window_start: t.first().copied().unwrap_or(0.0),
        terminal_value: terminal,
        max_deviation: max_dev,
        ..Default::default()
    };
    if max_dev < CONVERGENCE_TOL * terminal.abs().max(1.0) {
        return Verdict {
            kind: OscillationVerdict::Converged { value: terminal },
            diagnostics: diag,
        };
    }
    let peaks = find_peaks(t, y, MIN_PROMINENCE);
    diag.peaks = peaks.len();
    let n = t.len();
    if n >= 8 {
        let q = (t[n - 1] - t[0]) / 4.0;
        let last = range_between(t, y, t[n - 1] - q, t[n - 1]);
        let prev = range_between(t, y, t[n - 1] - 2.0 * q, t[n - 1] - q);
        diag.amplitude_last_quarter = Some(last);
        diag.amplitude_prev_quarter = Some(prev);
    }
    if peaks.len() >= MIN_PEAKS {
        let intervals: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = intervals.iter().sum::<f64>() / intervals.len() as f64;
        let var = intervals.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / intervals.len() as f64;
        let cv = var.sqrt() / mean;
        diag.period_cv = Some(cv);
        if let (Some(last), Some(prev)) = (diag.amplitude_last_quarter, diag.amplitude_prev_quarter) {
            let steady = prev > 0.0 && (last - prev).abs() <= MAX_AMPLITUDE_DRIFT * prev;
            if cv < MAX_PERIOD_CV && steady {
                return Verdict {
                    kind: OscillationVerdict::Oscillating {
                        amplitude: last,
                        period: mean,
                    },
                    diagnostics: diag,
                };
            }
        }
    }
    Verdict {
        kind: OscillationVerdict::Undetermined,
        diagnostics: diag,
    }
}

fn range_between(t: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (ti, yi) in t.iter().zip(y) {
        if *ti >= a && *ti <= b {
            lo = lo.min(*yi);
            hi = hi.max(*yi);
        }
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Times of local maxima whose topographic prominence is at least
/// `min_prominence`, refined by a parabola through the neighbouring samples.
pub fn find_peaks(t: &[f64], y: &[f64], min_prominence: f64) -> Vec<f64> {
    let n = y.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            // Walk across a flat top.
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let peak = y[i];
                let mut lmin = peak;
                let mut k = i;
                while k > 0 {
                    k -= 1;
                    if y[k] > peak {
                        break;
                    }
                    lmin = lmin.min(y[k]);
                }
                let mut rmin = peak;
                let mut k = j;
                while k + 1 < n {
                    k += 1;
                    if y[k] > peak {
                        break;
                    }
                    rmin = rmin.min(y[k]);
                }
                if peak - lmin.max(rmin) >= min_prominence {
                    out.push(refine_peak(t, y, i, j));
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn refine_peak(t: &[f64], y: &[f64], i: usize, j: usize) -> f64 {
    if i != j {
        return 0.5 * (t[i] + t[j]);
    }
    let (t0, t1, t2) = (t[i - 1], t[i], t[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let d1 = (y1 - y0) / (t1 - t0);
    let d2 = (y2 - y1) / (t2 - t1);
    let curv = (d2 - d1) / (t2 - t0);
    if curv >= 0.0 {
        return t1;
    }
    // Vertex of the interpolating parabola.
    let tv = 0.5 * (t0 + t1) - d1 / (2.0 * curv);
    tv.clamp(t0, t2)
}

/// Equilibrium reached in each rest interval of a pulse experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestWindow {
    pub start: f64,
    pub end: f64,
    pub converged: bool,
    pub value: f64,
}

/// Verdict for a run driven by `reference`: the rest intervals (where the
/// reference equals its initial value) are inspected individually over
/// their second halves. If all of them settle and the settled values are not
/// all equal, the run switched equilibria.
pub fn classify_switching(
    trace: &SimTrace,
    reference: &Reference,
    transient_fraction: f64,
    slow_tau: f64,
) -> Result<(Verdict, Vec<RestWindow>)> {
    let t_end = *trace.t.last().ok_or_else(|| Error::invalid("empty trace"))?;
    let base = reference.value(0.0);
    let segments = reference.constant_segments(0.0, t_end);
    if segments.len() <= 1 {
        return Ok((classify_trace(trace, transient_fraction, slow_tau)?, Vec::new()));
    }
    let mut rests = Vec::new();
    for &(a, b, r) in &segments {
        if r != base {
            continue;
        }
        let mid = a + 0.5 * (b - a);
        let i0 = trace.t.partition_point(|&s| s < mid);
        let i1 = trace.t.partition_point(|&s| s < b);
        let (tw, yw) = (&trace.t[i0..i1.max(i0)], &trace.y[i0..i1.max(i0)]);
        if tw.len() < 8 {
            return Err(Error::invalid("rest window holds fewer than 8 samples"));
        }
        let v = classify_window(tw, yw);
        rests.push(RestWindow {
            start: a,
            end: b,
            converged: matches!(v.kind, OscillationVerdict::Converged { .. }),
            value: v.diagnostics.terminal_value,
        });
    }
    let last_seg = segments.last().expect("nonempty");
    let all_settled = rests.iter().all(|w| w.converged);
    let final_verdict = |frac: f64| -> Result<Verdict> {
        let (a, b, _) = *last_seg;
        let ts = a + frac * (b - a);
        let i0 = trace.t.partition_point(|&s| s < ts);
        let tw = &trace.t[i0..];
        if tw.len() < 8 {
            return Err(Error::invalid("final window holds fewer than 8 samples"));
        }
        Ok(classify_window(tw, &trace.y[i0..]))
    };
    if !all_settled || rests.is_empty() {
        return Ok((final_verdict(transient_fraction)?, rests));
    }
    let first = rests[0].value;
    let differs = |v: f64| (v - first).abs() > 1e-2 * first.abs().max(v.abs()).max(1.0);
    let last = rests.last().expect("nonempty").value;
    let new = if differs(last) {
        Some(last)
    } else {
        rests.iter().map(|w| w.value).find(|&v| differs(v))
    };
    let mut verdict = final_verdict(transient_fraction)?;
    verdict.kind = match new {
        Some(new) => OscillationVerdict::SwitchedEquilibrium { old: first, new },
        None => OscillationVerdict::Converged { value: last },
    };
    Ok((verdict, rests))
}
