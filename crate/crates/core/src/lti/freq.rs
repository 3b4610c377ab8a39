//! Frequency responses on the shifted axis `s = jω - λ` and their extrema.

use nalgebra::Complex;

use super::ss::StateSpace;
use super::tf::TransferFunction;
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Absolute distance under which a pole is considered to sit on the shifted axis.
pub const AXIS_POLE_TOL: f64 = 1e-6;

/// SISO systems that can be evaluated at complex frequencies.
pub trait FrequencyResponse {
    fn eval_at(&self, s: C64) -> Result<C64>;
    fn pole_list(&self) -> Result<Vec<C64>>;
    /// `lim_{ω→∞} G(jω - λ)`, independent of λ for proper systems.
    fn at_infinity(&self) -> f64;
}

impl FrequencyResponse for TransferFunction {
    fn eval_at(&self, s: C64) -> Result<C64> {
        self.eval(s)
    }
    fn pole_list(&self) -> Result<Vec<C64>> {
        self.poles()
    }
    fn at_infinity(&self) -> f64 {
        self.high_frequency_limit()
    }
}

impl FrequencyResponse for StateSpace {
    fn eval_at(&self, s: C64) -> Result<C64> {
        self.eval_siso(s)
    }
    fn pole_list(&self) -> Result<Vec<C64>> {
        self.poles()
    }
    fn at_infinity(&self) -> f64 {
        self.d[(0, 0)]
    }
}

impl<T: FrequencyResponse + ?Sized> FrequencyResponse for &T {
    fn eval_at(&self, s: C64) -> Result<C64> {
        (**self).eval_at(s)
    }
    fn pole_list(&self) -> Result<Vec<C64>> {
        (**self).pole_list()
    }
    fn at_infinity(&self) -> f64 {
        (**self).at_infinity()
    }
}

/// Evaluation grid: optional `ω = 0`, log-spaced points, optional `ω = ∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreqGrid {
    pub w_min: f64,
    pub w_max: f64,
    pub points: usize,
    pub include_zero: bool,
    pub include_infinity: bool,
    /// Relative tolerance of the golden-section refinement in ω.
    pub refine_tol: f64,
}

impl Default for FreqGrid {
    fn default() -> Self {
        FreqGrid {
            w_min: 1e-4,
            w_max: 1e6,
            points: 4000,
            include_zero: true,
            include_infinity: true,
            refine_tol: 1e-8,
        }
    }
}

impl FreqGrid {
    pub fn with_points(points: usize) -> Self {
        FreqGrid {
            points,
            ..FreqGrid::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w_min > 0.0 && self.w_max > self.w_min && self.w_max.is_finite()) {
            return Err(Error::invalid(format!(
                "frequency range must satisfy 0 < w_min < w_max < inf (got [{}, {}])",
                self.w_min, self.w_max
            )));
        }
        if self.points < 2 {
            return Err(Error::invalid("frequency grid needs at least 2 points"));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::invalid("refinement tolerance must be positive"));
        }
        Ok(())
    }

    /// All finite frequencies in ascending order, ω = 0 first when included.
    /// `ω = ∞` is handled separately by the extremum routines.
    pub fn finite_frequencies(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.points + 1);
        if self.include_zero {
            w.push(0.0);
        }
        w.extend(log_space(self.w_min, self.w_max, self.points));
        w
    }
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

/// `G(jω - λ)`.
pub fn freq_response<G: FrequencyResponse + ?Sized>(g: &G, omega: f64, lambda: f64) -> Result<C64> {
    if omega.is_infinite() {
        return Ok(C64::new(g.at_infinity(), 0.0));
    }
    g.eval_at(C64::new(-lambda, omega))
}

/// Number of poles with real part strictly greater than `axis`.
pub fn count_poles_right_of<G: FrequencyResponse + ?Sized>(g: &G, axis: f64) -> Result<usize> {
    let poles = g.pole_list()?;
    check_axis(&poles, axis)?;
    Ok(poles.iter().filter(|p| p.re > axis).count())
}

pub(crate) fn check_axis(poles: &[C64], axis: f64) -> Result<()> {
    if let Some(p) = poles.iter().find(|p| (p.re - axis).abs() <= AXIS_POLE_TOL) {
        return Err(Error::ShiftedAxisPole {
            pole_re: p.re,
            axis,
        });
    }
    Ok(())
}

/// Location and value of an extremum over the grid; `omega` may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremum {
    pub omega: f64,
    pub value: f64,
}

/// `min_ω Re G(jω - λ)`.
pub fn shifted_min_real<G: FrequencyResponse + ?Sized>(
    g: &G,
    lambda: f64,
    grid: &FreqGrid,
) -> Result<Extremum> {
    check_axis(&g.pole_list()?, -lambda)?;
    let f = |w: f64| freq_response(g, w, lambda).map(|z| z.re);
    minimize_on_grid(&f, grid, g.at_infinity())
}

/// `sup_ω |G(jω - λ)|`.
pub fn shifted_sup_mag<G: FrequencyResponse + ?Sized>(
    g: &G,
    lambda: f64,
    grid: &FreqGrid,
) -> Result<Extremum> {
    check_axis(&g.pole_list()?, -lambda)?;
    let f = |w: f64| freq_response(g, w, lambda).map(|z| -z.norm());
    let e = minimize_on_grid(&f, grid, -g.at_infinity().abs())?;
    Ok(Extremum {
        omega: e.omega,
        value: -e.value,
    })
}

/// Grid minimum of `f` followed by golden-section refinement in log-ω on the
/// bracket around the best grid point.
pub(crate) fn minimize_on_grid<F>(f: &F, grid: &FreqGrid, at_inf: f64) -> Result<Extremum>
where
    F: Fn(f64) -> Result<f64>,
{
    grid.validate()?;
    let w = grid.finite_frequencies();
    let vals = w.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let (mut best_i, mut best) = (0, vals[0]);
    for (i, &v) in vals.iter().enumerate() {
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut out = Extremum {
        omega: w[best_i],
        value: best,
    };
    let lo = if best_i > 0 { w[best_i - 1] } else { w[0] };
    let hi = if best_i + 1 < w.len() {
        w[best_i + 1]
    } else {
        w[best_i]
    };
    if hi > lo {
        let r = golden_section(f, lo, hi, grid.refine_tol)?;
        if r.value < out.value {
            out = r;
        }
    }
    if grid.include_infinity && at_inf < out.value {
        out = Extremum {
            omega: f64::INFINITY,
            value: at_inf,
        };
    }
    Ok(out)
}

fn golden_section<F>(f: &F, lo: f64, hi: f64, tol: f64) -> Result<Extremum>
where
    F: Fn(f64) -> Result<f64>,
{
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    // Log-spaced search unless the bracket touches ω = 0.
    let log = lo > 0.0;
    let (to_w, from_w): (fn(f64) -> f64, fn(f64) -> f64) = if log {
        (f64::exp, f64::ln)
    } else {
        (|x| x, |x| x)
    };
    let (mut a, mut b) = (from_w(lo), from_w(hi));
    let abs_tol = if log { tol } else { tol * hi.max(f64::MIN_POSITIVE) };
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(to_w(c))?;
    let mut fd = f(to_w(d))?;
    let mut iters = 0;
    while (b - a).abs() > abs_tol && iters < 200 {
        iters += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(to_w(c))?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(to_w(d))?;
        }
    }
    let (x, v) = if fc < fd { (c, fc) } else { (d, fd) };
    Ok(Extremum {
        omega: to_w(x),
        value: v,
    })
}
