//! Mixed-feedback controller `C(s,k,β) = k(β/(τp s+1) - (1-β)/(τn s+1))`,
//! the Lure loop `G = -C·P`, and the closed-loop state-space system.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{Polynomial, StateSpace, TransferFunction};

/// Gain, balance, controller time constants and a SISO plant.
#[derive(Clone, Debug)]
pub struct MixedFeedbackParams {
    pub k: f64,
    pub beta: f64,
    pub tau_p: f64,
    pub tau_n: f64,
    plant: StateSpace,
    plant_tf: TransferFunction,
}

impl MixedFeedbackParams {
    /// Plant given as a transfer function, realized in observable form
    /// (so `1/(τl s + 1)` becomes `A = -1/τl, B = 1/τl, C = 1`).
    pub fn new(k: f64, beta: f64, tau_p: f64, tau_n: f64, plant: TransferFunction) -> Result<Self> {
        Self::with_options(k, beta, tau_p, tau_n, plant, true)
    }

    /// As [`MixedFeedbackParams::new`], optionally skipping the requirement that
    /// every plant pole is faster than both controller lags.
    pub fn with_options(
        k: f64,
        beta: f64,
        tau_p: f64,
        tau_n: f64,
        plant: TransferFunction,
        enforce_time_scale: bool,
    ) -> Result<Self> {
        let ss = StateSpace::from_tf_observable(&plant)?;
        Self::build(k, beta, tau_p, tau_n, ss, plant, enforce_time_scale)
    }

    pub fn from_state_space(
        k: f64,
        beta: f64,
        tau_p: f64,
        tau_n: f64,
        plant: StateSpace,
        enforce_time_scale: bool,
    ) -> Result<Self> {
        if !plant.is_siso() {
            return Err(Error::invalid("plant must be SISO"));
        }
        let tf = plant.to_tf()?;
        Self::build(k, beta, tau_p, tau_n, plant, tf, enforce_time_scale)
    }

    fn build(
        k: f64,
        beta: f64,
        tau_p: f64,
        tau_n: f64,
        plant: StateSpace,
        plant_tf: TransferFunction,
        enforce_time_scale: bool,
    ) -> Result<Self> {
        validate_controller(k, beta, tau_p, tau_n)?;
        if plant.d.iter().any(|&d| d != 0.0) || !plant_tf.is_strictly_proper() {
            return Err(Error::invalid("plant must be strictly proper"));
        }
        let poles = plant.poles()?;
        if let Some(p) = poles.iter().find(|p| p.re >= 0.0) {
            return Err(Error::invalid(format!(
                "plant must be asymptotically stable (pole {p})"
            )));
        }
        if enforce_time_scale {
            let fastest_lag = -1.0 / tau_p.min(tau_n);
            if let Some(p) = poles.iter().find(|p| p.re >= fastest_lag) {
                return Err(Error::invalid(format!(
                    "plant pole {p} is not faster than the controller poles -1/τp = {}, -1/τn = {}",
                    -1.0 / tau_p,
                    -1.0 / tau_n
                )));
            }
        }
        Ok(MixedFeedbackParams {
            k,
            beta,
            tau_p,
            tau_n,
            plant,
            plant_tf,
        })
    }

    pub fn plant(&self) -> &StateSpace {
        &self.plant
    }

    pub fn plant_tf(&self) -> &TransferFunction {
        &self.plant_tf
    }

    pub fn plant_order(&self) -> usize {
        self.plant.order()
    }

    pub fn plant_dc_gain(&self) -> Result<f64> {
        self.plant_tf.dc_gain()
    }

    /// Copy with different gain and balance (validated).
    pub fn with_gain(&self, k: f64, beta: f64) -> Result<Self> {
        validate_controller(k, beta, self.tau_p, self.tau_n)?;
        Ok(MixedFeedbackParams {
            k,
            beta,
            ..self.clone()
        })
    }

    pub fn controller(&self) -> Result<ControllerInfo> {
        make_controller(self.k, self.beta, self.tau_p, self.tau_n)
    }

    /// `G(s,k,β) = -C(s,k,β) P(s)`.
    pub fn loop_tf(&self) -> Result<TransferFunction> {
        make_loop_tf(self.k, self.beta, self.tau_p, self.tau_n, &self.plant_tf)
    }

    /// `G(0,k,β) = -k(2β-1)P(0)`.
    pub fn loop_dc_gain(&self) -> Result<f64> {
        Ok(-self.k * (2.0 * self.beta - 1.0) * self.plant_dc_gain()?)
    }

    pub fn feedback_row(&self) -> DMatrix<f64> {
        kbeta_to_k(self.k, self.beta, self.plant_order())
    }

    pub fn closed_loop(&self, sat: Saturation) -> Result<ClosedLoopSystem> {
        assemble_closed_loop(&self.plant, self.tau_p, self.tau_n, self.feedback_row(), sat)
    }
}

fn validate_controller(k: f64, beta: f64, tau_p: f64, tau_n: f64) -> Result<()> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::invalid(format!("gain k must be finite and >= 0 (got {k})")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid(format!("balance β must lie in [0, 1] (got {beta})")));
    }
    if !(tau_p > 0.0 && tau_n > 0.0 && tau_p.is_finite() && tau_n.is_finite()) {
        return Err(Error::invalid("time constants τp, τn must be positive and finite"));
    }
    if tau_p == tau_n {
        return Err(Error::invalid("τp and τn must differ"));
    }
    Ok(())
}

/// Controller transfer function with its poles, zero and critical balance.
#[derive(Clone, Debug)]
pub struct ControllerInfo {
    pub tf: TransferFunction,
    pub pole_p: f64,
    pub pole_n: f64,
    /// `None` when β = β* (zero at infinity) or when the numerator vanishes.
    pub zero: Option<f64>,
    pub beta_star: f64,
    pub zero_at_infinity: bool,
}

pub fn beta_star(tau_p: f64, tau_n: f64) -> f64 {
    tau_p / (tau_p + tau_n)
}

pub fn controller_zero(beta: f64, tau_p: f64, tau_n: f64) -> Option<f64> {
    let lead = beta * (tau_p + tau_n) - tau_p;
    if lead == 0.0 || (beta - beta_star(tau_p, tau_n)).abs() <= 1e-15 {
        None
    } else {
        Some(-(2.0 * beta - 1.0) / lead)
    }
}

pub fn make_controller(k: f64, beta: f64, tau_p: f64, tau_n: f64) -> Result<ControllerInfo> {
    validate_controller(k, beta, tau_p, tau_n)?;
    let num = Polynomial::new(vec![
        k * (2.0 * beta - 1.0),
        k * (beta * (tau_n + tau_p) - tau_p),
    ]);
    let den = &Polynomial::linear(1.0, tau_p) * &Polynomial::linear(1.0, tau_n);
    let zero = controller_zero(beta, tau_p, tau_n);
    Ok(ControllerInfo {
        tf: TransferFunction::new(num, den)?,
        pole_p: -1.0 / tau_p,
        pole_n: -1.0 / tau_n,
        zero,
        beta_star: beta_star(tau_p, tau_n),
        zero_at_infinity: zero.is_none(),
    })
}

pub fn make_loop_tf(
    k: f64,
    beta: f64,
    tau_p: f64,
    tau_n: f64,
    plant: &TransferFunction,
) -> Result<TransferFunction> {
    let c = make_controller(k, beta, tau_p, tau_n)?;
    Ok(c.tf.series(plant).negate())
}

/// Feedback row `[0…0, kβ, -k(1-β)]` over the state `(plant…, x_p, x_n)`.
pub fn kbeta_to_k(k: f64, beta: f64, plant_order: usize) -> DMatrix<f64> {
    let mut row = DMatrix::zeros(1, plant_order + 2);
    row[(0, plant_order)] = k * beta;
    row[(0, plant_order + 1)] = -k * (1.0 - beta);
    row
}

/// Where the reference enters the loop.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceConvention {
    /// `ẋ = Ax + B1(φ(Kx) + r)`: r at the input of the linear block.
    #[default]
    LinearInput,
    /// `ẋ = Ax + B1 φ(Kx + r)`.
    SaturationInput,
}

/// Monotone piecewise-cubic Hermite table with certified slopes in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneTable {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Per-segment end tangents `(m_left, m_right)`.
    tangents: Vec<(f64, f64)>,
}

impl MonotoneTable {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::invalid("saturation table needs >= 2 matching points"));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("saturation table has non-finite entries"));
        }
        let mut delta = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let h = x[i + 1] - x[i];
            if !(h > 0.0) {
                return Err(Error::invalid("saturation table abscissae must increase strictly"));
            }
            let d = (y[i + 1] - y[i]) / h;
            if d < 0.0 {
                return Err(Error::invalid(format!(
                    "saturation table is decreasing on [{}, {}]",
                    x[i],
                    x[i + 1]
                )));
            }
            if d > 1.0 + 1e-12 {
                return Err(Error::invalid(format!(
                    "saturation table slope {d} exceeds 1 on [{}, {}]",
                    x[i],
                    x[i + 1]
                )));
            }
            delta.push(d.min(1.0));
        }
        // Fritsch–Carlson node tangents, clamped to the slope bound.
        let mut m = vec![0.0; n];
        m[0] = delta[0];
        m[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            m[i] = if delta[i - 1] == 0.0 || delta[i] == 0.0 {
                0.0
            } else {
                0.5 * (delta[i - 1] + delta[i])
            };
        }
        for i in 0..n - 1 {
            if delta[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
            }
        }
        for v in m.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        let tangents = (0..n - 1)
            .map(|i| {
                let seg = (m[i], m[i + 1]);
                let (lo, hi) = hermite_slope_range(delta[i], seg.0, seg.1);
                if lo < 0.0 || hi > 1.0 {
                    // Fall back to the secant on this segment; its slope is certified.
                    (delta[i], delta[i])
                } else {
                    seg
                }
            })
            .collect();
        Ok(MonotoneTable { x, y, tangents })
    }

    fn segment(&self, v: f64) -> Option<usize> {
        let n = self.x.len();
        if v <= self.x[0] || v >= self.x[n - 1] {
            return None;
        }
        Some(self.x.partition_point(|&xi| xi <= v) - 1)
    }

    pub fn eval(&self, v: f64) -> f64 {
        let n = self.x.len();
        match self.segment(v) {
            None if v <= self.x[0] => self.y[0],
            None => self.y[n - 1],
            Some(i) => {
                let h = self.x[i + 1] - self.x[i];
                let t = (v - self.x[i]) / h;
                let (m0, m1) = self.tangents[i];
                let t2 = t * t;
                let t3 = t2 * t;
                (2.0 * t3 - 3.0 * t2 + 1.0) * self.y[i]
                    + (t3 - 2.0 * t2 + t) * h * m0
                    + (-2.0 * t3 + 3.0 * t2) * self.y[i + 1]
                    + (t3 - t2) * h * m1
            }
        }
    }

    pub fn slope(&self, v: f64) -> f64 {
        match self.segment(v) {
            None => 0.0,
            Some(i) => {
                let h = self.x[i + 1] - self.x[i];
                let t = (v - self.x[i]) / h;
                let d = (self.y[i + 1] - self.y[i]) / h;
                let (m0, m1) = self.tangents[i];
                let (a, b, c) = hermite_slope_coeffs(d, m0, m1);
                (a * t * t + b * t + c).clamp(0.0, 1.0)
            }
        }
    }

    pub fn bound(&self) -> f64 {
        self.y.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest derivative over all segments, from the closed-form quadratic.
    pub fn max_slope(&self) -> f64 {
        (0..self.tangents.len())
            .map(|i| {
                let d = (self.y[i + 1] - self.y[i]) / (self.x[i + 1] - self.x[i]);
                hermite_slope_range(d, self.tangents[i].0, self.tangents[i].1).1
            })
            .fold(0.0, f64::max)
    }
}

/// Derivative of a Hermite segment as `a t² + b t + c` on `t ∈ [0, 1]`.
fn hermite_slope_coeffs(delta: f64, m0: f64, m1: f64) -> (f64, f64, f64) {
    (
        -6.0 * delta + 3.0 * m0 + 3.0 * m1,
        6.0 * delta - 4.0 * m0 - 2.0 * m1,
        m0,
    )
}

fn hermite_slope_range(delta: f64, m0: f64, m1: f64) -> (f64, f64) {
    let (a, b, c) = hermite_slope_coeffs(delta, m0, m1);
    let mut lo = m0.min(m1);
    let mut hi = m0.max(m1);
    if a != 0.0 {
        let t = -b / (2.0 * a);
        if t > 0.0 && t < 1.0 {
            let v = a * t * t + b * t + c;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq)]
pub enum SaturationKind {
    /// `M tanh(y / M)`.
    Tanh,
    Table(MonotoneTable),
}

/// Monotone, slope-restricted, bounded actuation stage.
#[derive(Clone, Debug, PartialEq)]
pub struct Saturation {
    pub kind: SaturationKind,
    pub bound: f64,
}

impl Default for Saturation {
    fn default() -> Self {
        Saturation {
            kind: SaturationKind::Tanh,
            bound: 1.0,
        }
    }
}

impl Saturation {
    pub fn tanh(bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::invalid("saturation bound M must be positive"));
        }
        Ok(Saturation {
            kind: SaturationKind::Tanh,
            bound,
        })
    }

    pub fn table(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let t = MonotoneTable::new(x, y)?;
        let bound = t.bound();
        if !(bound > 0.0) {
            return Err(Error::invalid("saturation table is identically zero"));
        }
        Ok(Saturation {
            kind: SaturationKind::Table(t),
            bound,
        })
    }

    pub fn phi(&self, y: f64) -> f64 {
        match &self.kind {
            SaturationKind::Tanh => self.bound * (y / self.bound).tanh(),
            SaturationKind::Table(t) => t.eval(y),
        }
    }

    pub fn dphi(&self, y: f64) -> f64 {
        match &self.kind {
            SaturationKind::Tanh => {
                let t = (y / self.bound).tanh();
                1.0 - t * t
            }
            SaturationKind::Table(t) => t.slope(y),
        }
    }
}

/// `ẋ = Ax + B1(φ(Kx) + r)` (or `B1 φ(Kx + r)`), output `y = C1 x`.
#[derive(Clone, Debug)]
pub struct ClosedLoopSystem {
    pub a: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub c1: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub sat: Saturation,
    pub b2: Option<DVector<f64>>,
    pub c2: Option<DMatrix<f64>>,
    pub convention: ReferenceConvention,
}

impl ClosedLoopSystem {
    pub fn new(
        a: DMatrix<f64>,
        b1: DVector<f64>,
        c1: DMatrix<f64>,
        k: DMatrix<f64>,
        sat: Saturation,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b1.len() != n || c1.shape() != (1, n) || k.shape() != (1, n) {
            return Err(Error::invalid(format!(
                "closed-loop dimensions: A {}x{}, B1 {}, C1 {:?}, K {:?}",
                a.nrows(),
                a.ncols(),
                b1.len(),
                c1.shape(),
                k.shape()
            )));
        }
        Ok(ClosedLoopSystem {
            a,
            b1,
            c1,
            k,
            sat,
            b2: None,
            c2: None,
            convention: ReferenceConvention::LinearInput,
        })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn with_convention(mut self, convention: ReferenceConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_gain(&self, k: DMatrix<f64>) -> Result<Self> {
        if k.shape() != self.k.shape() {
            return Err(Error::invalid("feedback row has the wrong dimension"));
        }
        Ok(ClosedLoopSystem { k, ..self.clone() })
    }

    pub fn feedback(&self, x: &DVector<f64>) -> f64 {
        (&self.k * x)[(0, 0)]
    }

    pub fn output(&self, x: &DVector<f64>) -> f64 {
        (&self.c1 * x)[(0, 0)]
    }

    /// Argument of φ and the additive reference term for the current convention.
    fn saturation_args(&self, v: f64, r: f64) -> (f64, f64) {
        match self.convention {
            ReferenceConvention::LinearInput => (v, r),
            ReferenceConvention::SaturationInput => (v + r, 0.0),
        }
    }

    /// Scalar input `u` delivered through `B1`.
    pub fn input(&self, x: &DVector<f64>, r: f64) -> f64 {
        let (arg, add) = self.saturation_args(self.feedback(x), r);
        self.sat.phi(arg) + add
    }

    pub fn vector_field(&self, x: &DVector<f64>, r: f64) -> DVector<f64> {
        &self.a * x + &self.b1 * self.input(x, r)
    }

    pub fn jacobian(&self, x: &DVector<f64>, r: f64) -> DMatrix<f64> {
        let (arg, _) = self.saturation_args(self.feedback(x), r);
        &self.a + &self.b1 * &self.k * self.sat.dphi(arg)
    }

    /// `G = -K(sI - A)^{-1} B1`, the Lure-loop linear block.
    pub fn loop_ss(&self) -> Result<StateSpace> {
        StateSpace::new(
            self.a.clone(),
            DMatrix::from_column_slice(self.order(), 1, self.b1.as_slice()),
            -&self.k,
            DMatrix::zeros(1, 1),
        )
    }

    /// DC gain `-K A^{-1} B1` from `u` to `Kx`.
    pub fn dc_loop_gain(&self) -> Result<f64> {
        let x = self
            .a
            .clone()
            .lu()
            .solve(&self.b1)
            .ok_or_else(|| Error::NumericalSingularity("A is singular".into()))?;
        Ok(-(&self.k * x)[(0, 0)])
    }
}

/// Plant realization stacked above the two lag states driven by the plant output.
pub fn assemble_closed_loop(
    plant: &StateSpace,
    tau_p: f64,
    tau_n: f64,
    k: DMatrix<f64>,
    sat: Saturation,
) -> Result<ClosedLoopSystem> {
    if !plant.is_siso() {
        return Err(Error::invalid("plant must be SISO"));
    }
    if plant.d[(0, 0)] != 0.0 {
        return Err(Error::invalid("plant must be strictly proper"));
    }
    let n = plant.order();
    let mut a = DMatrix::zeros(n + 2, n + 2);
    a.view_mut((0, 0), (n, n)).copy_from(&plant.a);
    for j in 0..n {
        a[(n, j)] = plant.c[(0, j)] / tau_p;
        a[(n + 1, j)] = plant.c[(0, j)] / tau_n;
    }
    a[(n, n)] = -1.0 / tau_p;
    a[(n + 1, n + 1)] = -1.0 / tau_n;
    let mut b1 = DVector::zeros(n + 2);
    for i in 0..n {
        b1[i] = plant.b[(i, 0)];
    }
    let mut c1 = DMatrix::zeros(1, n + 2);
    for j in 0..n {
        c1[(0, j)] = plant.c[(0, j)];
    }
    let mut sys = ClosedLoopSystem::new(a, b1, c1, k, sat)?;
    let mut b2 = DVector::zeros(n + 2);
    b2[n] = 1.0 / tau_p;
    b2[n + 1] = 1.0 / tau_n;
    sys.b2 = Some(b2);
    sys.c2 = Some(sys.c1.clone());
    Ok(sys)
}
