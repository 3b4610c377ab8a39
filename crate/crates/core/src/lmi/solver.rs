//! Primal barrier method for the feasibility problem
//! `min t  s.t.  F_i(y) ⪯ t I,  ‖y‖ ≤ R`.
//!
//! The search stops as soon as the true worst residual reaches `-target`,
//! and reports infeasibility once the certified lower bound on `t` exceeds `-ε`.

use nalgebra::{DMatrix, DVector};

use super::problem::{LmiProblem, Values};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Required depth as a multiple of ε. The acceptance threshold stays at ε.
    pub target_factor: f64,
    pub radius: f64,
    pub max_newton: usize,
    pub barrier_growth: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            target_factor: 2.0,
            radius: 1e6,
            max_newton: 2000,
            barrier_growth: 8.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub y: DVector<f64>,
    pub values: Values,
    pub residuals: Vec<f64>,
    pub newton_steps: usize,
}

impl Solution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

struct State<'a> {
    p: &'a LmiProblem,
    r2: f64,
    total_size: usize,
}

impl<'a> State<'a> {
    /// Slack matrices `tI - F_i(y)`, or `None` outside the barrier domain.
    fn slacks(&self, y: &DVector<f64>, t: f64) -> Option<Vec<nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>>> {
        if y.norm_squared() >= self.r2 {
            return None;
        }
        let mut out = Vec::with_capacity(self.p.constraints.len());
        for c in &self.p.constraints {
            let mut s = -c.eval(y);
            for i in 0..c.size {
                s[(i, i)] += t;
            }
            out.push(s.cholesky()?);
        }
        Some(out)
    }

    fn value(&self, y: &DVector<f64>, t: f64, scale: f64) -> Option<f64> {
        let chols = self.slacks(y, t)?;
        let mut v = scale * t - (self.r2 - y.norm_squared()).ln();
        for ch in &chols {
            let l = ch.l_dirty();
            for i in 0..l.nrows() {
                v -= 2.0 * l[(i, i)].ln();
            }
        }
        Some(v)
    }

    fn grad_hess(&self, y: &DVector<f64>, t: f64, scale: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let d = y.len();
        let chols = self.slacks(y, t)?;
        let mut g = DVector::zeros(d + 1);
        let mut h = DMatrix::zeros(d + 1, d + 1);
        g[d] = scale;
        for (c, ch) in self.p.constraints.iter().zip(&chols) {
            let sinv = ch.inverse();
            let gk: Vec<DMatrix<f64>> = c.fk.iter().map(|f| &sinv * f).collect();
            for k in 0..d {
                g[k] += gk[k].trace();
                for l in k..d {
                    let val = trace_prod(&gk[k], &gk[l]);
                    h[(k, l)] += val;
                    if l != k {
                        h[(l, k)] += val;
                    }
                }
                let kt = -trace_prod(&gk[k], &sinv);
                h[(k, d)] += kt;
                h[(d, k)] += kt;
            }
            g[d] -= sinv.trace();
            h[(d, d)] += trace_prod(&sinv, &sinv);
        }
        let q = self.r2 - y.norm_squared();
        for k in 0..d {
            g[k] += 2.0 * y[k] / q;
            h[(k, k)] += 2.0 / q;
            for l in 0..d {
                h[(k, l)] += 4.0 * y[k] * y[l] / (q * q);
            }
        }
        Some((g, h))
    }
}

fn trace_prod(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

fn newton_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> Option<DVector<f64>> {
    let mut reg = 0.0;
    let diag = h.diagonal().amax().max(1e-300);
    for _ in 0..8 {
        let mut hr = h.clone();
        for i in 0..hr.nrows() {
            hr[(i, i)] += reg;
        }
        if let Some(ch) = hr.cholesky() {
            return Some(-ch.solve(g));
        }
        reg = if reg == 0.0 { 1e-14 * diag } else { reg * 100.0 };
    }
    None
}

/// Finds `y` with every constraint `⪯ -target_factor·ε I`, or proves `-ε` unreachable.
pub fn solve(p: &LmiProblem, opts: &SolverOptions) -> Result<Solution> {
    if p.constraints.is_empty() {
        return Err(Error::invalid("LMI problem has no constraints"));
    }
    let d = p.dim();
    let eps = p.epsilon;
    let target = opts.target_factor.max(1.0) * eps;
    let st = State {
        p,
        r2: opts.radius * opts.radius,
        total_size: p.constraints.iter().map(|c| c.size).sum(),
    };
    let mut y = DVector::zeros(d);
    let res0 = p.residuals(&y);
    let worst0 = res0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if worst0 <= -target {
        return Ok(Solution {
            values: p.values(&y),
            residuals: res0,
            y,
            newton_steps: 0,
        });
    }
    let mut t = worst0 + worst0.abs().max(1.0);
    let mut scale = (st.total_size as f64 + 1.0) / (t.abs() + 1.0);
    let mut best = (worst0, y.clone());
    let mut steps = 0usize;
    let barrier_params = st.total_size as f64 + 1.0;

    loop {
        // Centering.
        for _ in 0..200 {
            if steps >= opts.max_newton {
                return Err(Error::Infeasible {
                    best_residual: best.0,
                    required: -eps,
                    detail: "iteration limit reached".into(),
                });
            }
            let (g, h) = st
                .grad_hess(&y, t, scale)
                .ok_or_else(|| Error::NumericalSingularity("barrier iterate left the domain".into()))?;
            let dir = newton_direction(&g, &h)
                .ok_or_else(|| Error::NumericalSingularity("singular barrier Hessian".into()))?;
            let dec2 = -g.dot(&dir);
            steps += 1;
            let f0 = st.value(&y, t, scale).unwrap_or(f64::INFINITY);
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-12 {
                let yn = &y + dir.rows(0, d) * alpha;
                let tn = t + dir[d] * alpha;
                if let Some(fv) = st.value(&yn, tn, scale) {
                    if fv <= f0 - 0.25 * alpha * dec2 {
                        y = yn;
                        t = tn;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let res = p.residuals(&y);
            let worst = res.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if worst < best.0 {
                best = (worst, y.clone());
            }
            if worst <= -target {
                return Ok(Solution {
                    values: p.values(&y),
                    residuals: res,
                    y,
                    newton_steps: steps,
                });
            }
            if !moved || dec2 * 0.5 <= 1e-10 {
                break;
            }
        }
        let gap = barrier_params / scale;
        if t - gap > -eps {
            return Err(Error::Infeasible {
                best_residual: best.0,
                required: -eps,
                detail: format!("certified lower bound {:.3e} on the worst residual", t - gap),
            });
        }
        if gap < 1e-6 * eps {
            if best.0 <= -eps {
                let y = best.1;
                return Ok(Solution {
                    values: p.values(&y),
                    residuals: p.residuals(&y),
                    y,
                    newton_steps: steps,
                });
            }
            return Err(Error::Infeasible {
                best_residual: best.0,
                required: -eps,
                detail: "barrier converged above the strictness margin".into(),
            });
        }
        scale *= opts.barrier_growth;
    }
}
