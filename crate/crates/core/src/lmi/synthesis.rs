//! Dominance-certified state-feedback synthesis and storage-function checks.
//!
//! Designs work with `Y = P⁻¹` and `Z = KY`: for every vertex `A_i` the
//! slope-0 and slope-1 Jacobians `A_i` and `A_i + BK` must satisfy
//! `Y Aᵀ + A Y + 2λY ⪯ -εI` (with `BZ` terms for slope 1). Inertia is not
//! imposed while solving; it is checked on the returned `Y`.

use nalgebra::DMatrix;

use super::problem::{block, BlockId, LmiProblem, Values};
use super::solver::{solve, SolverOptions};
use crate::error::{Error, Result};
use crate::lti::linalg::{controllability_rank, eig_general, eig_symmetric, max_eig_sym, Inertia, INERTIA_ZERO_TOL};

/// `1e-6 · max(1, max_i ‖A_i‖_F)`.
pub fn default_epsilon(vertices: &[DMatrix<f64>]) -> f64 {
    let m = vertices.iter().map(|a| a.norm()).fold(1.0, f64::max);
    1e-6 * m
}

#[derive(Clone, Debug, PartialEq)]
pub enum DesignKind {
    Nominal,
    /// Gain `γ` from the uncertainty port `w -> B2` to `z = C2 x`.
    Robust {
        b2: DMatrix<f64>,
        c2: DMatrix<f64>,
        gamma: f64,
    },
    /// Input-passivity shortage `μ` at the port `(B, C)`.
    Passive { c: DMatrix<f64>, mu: f64 },
}

impl DesignKind {
    pub fn name(&self) -> &'static str {
        match self {
            DesignKind::Nominal => "nominal",
            DesignKind::Robust { .. } => "robust",
            DesignKind::Passive { .. } => "passive",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[derive(Default)]
pub struct DesignOptions {
    pub epsilon: Option<f64>,
    /// Append `Y Aᵀ + Zᵀ Bᵀ + A Y + B Z ⪯ -εI` (unstable origin).
    pub instability: bool,
    /// Bound `Z Zᵀ ⪯ ν I`.
    pub nu: Option<f64>,
    pub extra_vertices: Vec<DMatrix<f64>>,
    pub seed: u64,
    pub solver: SolverOptions,
}


/// Everything needed to rebuild and re-check a design.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignProblem {
    pub kind: DesignKind,
    pub vertices: Vec<DMatrix<f64>>,
    pub b: DMatrix<f64>,
    pub lambda: f64,
    pub epsilon: f64,
    pub instability: bool,
    pub nu: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub k: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub inertia: Inertia,
    pub constraint_names: Vec<String>,
    pub residuals: Vec<f64>,
    /// `λ_max` of `A_sᵀP + P A_s + 2λP` for every vertex and slope, then the
    /// instability forms `(A + BK)ᵀP + P(A + BK)`.
    pub p_residuals: Vec<f64>,
}

impl Evaluation {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_p_residual(&self) -> f64 {
        self.p_residuals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub problem: DesignProblem,
    pub y: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub eval: Evaluation,
}

impl Design {
    pub fn k(&self) -> &DMatrix<f64> {
        &self.eval.k
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.eval.p
    }

    pub fn inertia(&self) -> Inertia {
        self.eval.inertia
    }

    /// `-K A_i⁻¹ B` at every vertex (the first is the nominal one).
    pub fn dc_gains(&self) -> Result<Vec<f64>> {
        self.problem
            .vertices
            .iter()
            .map(|a| dc_gain(a, &self.problem.b, &self.eval.k))
            .collect()
    }

    pub fn dc_gain(&self) -> Result<f64> {
        dc_gain(&self.problem.vertices[0], &self.problem.b, &self.eval.k)
    }
}

/// `-K A⁻¹ B` for single-input data.
pub fn dc_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, k: &DMatrix<f64>) -> Result<f64> {
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::NumericalSingularity("A is singular".into()))?;
    Ok(-(k * x)[(0, 0)])
}

fn check_vertices(vertices: &[DMatrix<f64>], b: &DMatrix<f64>) -> Result<usize> {
    let n = vertices
        .first()
        .ok_or_else(|| Error::invalid("vertex list is empty"))?
        .nrows();
    for a in vertices {
        if a.shape() != (n, n) {
            return Err(Error::invalid("vertex matrices must share one square dimension"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("vertex matrix has non-finite entries"));
        }
    }
    if b.nrows() != n || b.ncols() == 0 {
        return Err(Error::invalid(format!("B must have {n} rows")));
    }
    Ok(n)
}

/// Number of eigenvalues right of `-λ`; an eigenvalue on the line is a precondition failure.
fn count_right_of(a: &DMatrix<f64>, lambda: f64) -> Result<usize> {
    let eig = eig_general(a)?;
    let scale = 1.0 + lambda.abs();
    if let Some(e) = eig.iter().find(|e| (e.re + lambda).abs() <= 1e-8 * scale) {
        return Err(Error::precondition(format!(
            "eigenvalue {:.6} lies on the line Re s = {}",
            e.re, -lambda
        )));
    }
    Ok(eig.iter().filter(|e| e.re > -lambda).count())
}

fn sym_part(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

impl DesignProblem {
    pub fn state_dim(&self) -> usize {
        self.vertices[0].nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = check_vertices(&self.vertices, &self.b)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("λ must be finite and non-negative"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("ε must be positive"));
        }
        if let Some(nu) = self.nu {
            if !(nu > 0.0) {
                return Err(Error::invalid("ν must be positive"));
            }
        }
        match &self.kind {
            DesignKind::Nominal => {}
            DesignKind::Robust { b2, c2, gamma } => {
                if b2.nrows() != n || c2.ncols() != n || b2.ncols() == 0 || c2.nrows() == 0 {
                    return Err(Error::invalid("robust ports B2, C2 do not match the state dimension"));
                }
                if !(*gamma > 0.0) {
                    return Err(Error::invalid("γ must be positive"));
                }
            }
            DesignKind::Passive { c, mu } => {
                if c.shape() != (self.b.ncols(), n) {
                    return Err(Error::invalid("passive port C must be m×n with B n×m"));
                }
                if !mu.is_finite() {
                    return Err(Error::invalid("μ must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Every vertex must have exactly two eigenvalues right of `-λ`.
    pub fn check_splitting(&self) -> Result<()> {
        for (i, a) in self.vertices.iter().enumerate() {
            let c = count_right_of(a, self.lambda)?;
            if c != 2 {
                return Err(Error::precondition(format!(
                    "vertex {i} has {c} eigenvalues right of -λ = {}, need exactly 2",
                    -self.lambda
                )));
            }
        }
        Ok(())
    }

    /// Nominal designs without a norm bound are invariant under `(Y, Z) -> c(Y, Z)`.
    pub fn is_homogeneous(&self) -> bool {
        matches!(self.kind, DesignKind::Nominal) && self.nu.is_none()
    }

    pub fn build(&self) -> Result<(LmiProblem, BlockId, BlockId)> {
        self.validate()?;
        let n = self.state_dim();
        let m = self.input_dim();
        let mut lmi = LmiProblem::new(self.epsilon, self.seed)?;
        lmi.lambda = self.lambda;
        lmi.vertices = self.vertices.clone();
        let yb = lmi.symmetric("Y", n)?;
        let zb = lmi.full("Z", m, n)?;
        let lam = self.lambda;
        let b = self.b.clone();
        for (i, a) in self.vertices.iter().enumerate() {
            for slope in [0usize, 1] {
                let a = a.clone();
                let b = b.clone();
                let bb = b.clone();
                let kind = self.kind.clone();
                let base = move |v: &Values| -> DMatrix<f64> {
                    let y = &v[yb];
                    let mut f = y * a.transpose() + &a * y + y * (2.0 * lam);
                    if slope == 1 {
                        let bz = &bb * &v[zb];
                        f += &bz + bz.transpose();
                    }
                    f
                };
                let f = move |v: &Values| -> DMatrix<f64> {
                    let f = base(v);
                    match &kind {
                        DesignKind::Nominal => f,
                        DesignKind::Robust { b2, c2, gamma } => {
                            let y = &v[yb];
                            let (q, r) = (b2.ncols(), c2.nrows());
                            let yc = y * c2.transpose();
                            block(&[
                                vec![f, b2.clone(), yc.clone()],
                                vec![b2.transpose(), DMatrix::identity(q, q) * -gamma, DMatrix::zeros(q, r)],
                                vec![yc.transpose(), DMatrix::zeros(r, q), DMatrix::identity(r, r) * -gamma],
                            ])
                        }
                        DesignKind::Passive { c, mu } => {
                            let y = &v[yb];
                            let off = &b - y * c.transpose();
                            let mm = b.ncols();
                            block(&[
                                vec![f, off.clone()],
                                vec![off.transpose(), DMatrix::identity(mm, mm) * -mu],
                            ])
                        }
                    }
                };
                lmi.constraint(&format!("vertex{i}/slope{slope}"), &f)?;
            }
        }
        if self.instability {
            for (i, a) in self.vertices.iter().enumerate() {
                let a = a.clone();
                let b = b.clone();
                lmi.constraint(&format!("instability{i}"), &move |v: &Values| {
                    let y = &v[yb];
                    let bz = &b * &v[zb];
                    y * a.transpose() + &a * y + &bz + bz.transpose()
                })?;
            }
        }
        if let Some(nu) = self.nu {
            lmi.constraint("z_norm", &move |v: &Values| {
                block(&[
                    vec![DMatrix::identity(m, m) * -nu, v[zb].clone()],
                    vec![v[zb].transpose(), -DMatrix::identity(n, n)],
                ])
            })?;
        }
        Ok((lmi, yb, zb))
    }

    /// Residuals, gain, storage matrix and inertia for given `(Y, Z)`.
    pub fn evaluate(&self, y: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<Evaluation> {
        let (lmi, _, _) = self.build()?;
        let values = Values {
            names: vec!["Y".into(), "Z".into()],
            blocks: vec![y.clone(), z.clone()],
        };
        let residuals = lmi.residuals_at(&values)?;
        let p = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NumericalSingularity("Y is singular".into()))?;
        let p = sym_part(p);
        let k = z * &p;
        let (_, inertia) = eig_symmetric(y, INERTIA_ZERO_TOL)?;
        let bk = &self.b * &k;
        let mut p_residuals = Vec::new();
        for a in &self.vertices {
            for acl in [a.clone(), a + &bk] {
                let f = acl.transpose() * &p + &p * &acl + &p * (2.0 * self.lambda);
                p_residuals.push(max_eig_sym(&f));
            }
        }
        if self.instability {
            for a in &self.vertices {
                let acl = a + &bk;
                p_residuals.push(max_eig_sym(&(acl.transpose() * &p + &p * &acl)));
            }
        }
        Ok(Evaluation {
            k,
            p,
            inertia,
            constraint_names: lmi.constraints.iter().map(|c| c.name.clone()).collect(),
            residuals,
            p_residuals,
        })
    }
}

fn run_design(problem: DesignProblem, solver: &SolverOptions) -> Result<Design> {
    problem.validate()?;
    problem.check_splitting()?;
    let (lmi, yb, zb) = problem.build()?;
    let eps = problem.epsilon;
    let n = problem.state_dim();
    let mut opts = solver.clone();
    let mut last = None;
    for _ in 0..4 {
        let sol = solve(&lmi, &opts)?;
        let mut y = sol.values[yb].clone();
        let mut z = sol.values[zb].clone();
        let mut eval = problem.evaluate(&y, &z)?;
        if problem.is_homogeneous() {
            let my = -eval.max_residual();
            let mp = -eval.max_p_residual();
            if my > 0.0 && mp > 0.0 {
                let c = (mp / my).sqrt();
                y *= c;
                z *= c;
                eval = problem.evaluate(&y, &z)?;
            }
            if !(eval.max_residual() <= -eps && eval.max_p_residual() <= -eps) {
                last = Some(eval.max_residual().max(eval.max_p_residual()));
                opts.target_factor *= 100.0;
                continue;
            }
        }
        if eval.max_residual() > -eps {
            return Err(Error::Infeasible {
                best_residual: eval.max_residual(),
                required: -eps,
                detail: "solution lost strictness after reconstruction".into(),
            });
        }
        let expected = Inertia::dominant(2, n);
        if eval.inertia != expected {
            return Err(Error::InertiaMismatch {
                expected,
                got: eval.inertia,
            });
        }
        return Ok(Design { problem, y, z, eval });
    }
    Err(Error::Infeasible {
        best_residual: last.unwrap_or(f64::NAN),
        required: -eps,
        detail: "could not balance the Y-form and P-form margins above ε".into(),
    })
}

fn design_problem(
    kind: DesignKind,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    lambda: f64,
    opts: &DesignOptions,
) -> DesignProblem {
    let mut vertices = vec![a.clone()];
    vertices.extend(opts.extra_vertices.iter().cloned());
    let epsilon = opts.epsilon.unwrap_or_else(|| default_epsilon(&vertices));
    DesignProblem {
        kind,
        vertices,
        b: b.clone(),
        lambda,
        epsilon,
        instability: opts.instability,
        nu: opts.nu,
        seed: opts.seed,
    }
}

/// 2-dominant state feedback `K = Z Y⁻¹` for the vertex family `{A} ∪ extra`.
pub fn design_2dominant(a: &DMatrix<f64>, b: &DMatrix<f64>, lambda: f64, opts: &DesignOptions) -> Result<Design> {
    run_design(design_problem(DesignKind::Nominal, a, b, lambda, opts), &opts.solver)
}

/// As [`design_2dominant`] with the gain blocks from `w` (through `B2`) to `z = C2 x`.
pub fn design_robust(
    a: &DMatrix<f64>,
    b1: &DMatrix<f64>,
    b2: &DMatrix<f64>,
    c2: &DMatrix<f64>,
    lambda: f64,
    gamma: f64,
    opts: &DesignOptions,
) -> Result<Design> {
    let kind = DesignKind::Robust {
        b2: b2.clone(),
        c2: c2.clone(),
        gamma,
    };
    run_design(design_problem(kind, a, b1, lambda, opts), &opts.solver)
}

/// As [`design_2dominant`] with the passivity blocks `B - Y Cᵀ` and shortage `μ`.
pub fn design_passive(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    lambda: f64,
    mu: f64,
    opts: &DesignOptions,
) -> Result<Design> {
    let kind = DesignKind::Passive { c: c.clone(), mu };
    run_design(design_problem(kind, a, b, lambda, opts), &opts.solver)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Precompensator {
    pub y0: DMatrix<f64>,
    pub z0: DMatrix<f64>,
    pub k0: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub epsilon: f64,
}

/// Gain `K0` with `A0 + B0 K0` having all eigenvalues left of `-λ`.
/// With `robust = Some((C0, γ))` the gain blocks from `B0` to `C0` are appended.
pub fn design_precompensator(
    a0: &DMatrix<f64>,
    b0: &DMatrix<f64>,
    lambda: f64,
    robust: Option<(&DMatrix<f64>, f64)>,
    opts: &DesignOptions,
) -> Result<Precompensator> {
    let n = check_vertices(std::slice::from_ref(a0), b0)?;
    let rank = controllability_rank(a0, b0);
    if rank < n {
        return Err(Error::UncontrollablePair { rank, n });
    }
    if let Some((c0, gamma)) = robust {
        if c0.ncols() != n || !(gamma > 0.0) {
            return Err(Error::invalid("precompensator output map or γ invalid"));
        }
    }
    let m = b0.ncols();
    let eps = opts.epsilon.unwrap_or_else(|| default_epsilon(std::slice::from_ref(a0)));
    let mut lmi = LmiProblem::new(eps, opts.seed)?;
    lmi.lambda = lambda;
    lmi.vertices = vec![a0.clone()];
    let yb = lmi.symmetric("Y0", n)?;
    let zb = lmi.full("Z0", m, n)?;
    lmi.constraint("positive", &|v: &Values| -v[yb].clone())?;
    let (a, b) = (a0.clone(), b0.clone());
    let robust = robust.map(|(c, g)| (c.clone(), g));
    lmi.constraint("decay", &move |v: &Values| {
        let y = &v[yb];
        let bz = &b * &v[zb];
        let f = y * a.transpose() + &a * y + &bz + bz.transpose() + y * (2.0 * lambda);
        match &robust {
            None => f,
            Some((c, gamma)) => {
                let r = c.nrows();
                let yc = y * c.transpose();
                block(&[
                    vec![f, b.clone(), yc.clone()],
                    vec![b.transpose(), DMatrix::identity(m, m) * -gamma, DMatrix::zeros(m, r)],
                    vec![yc.transpose(), DMatrix::zeros(r, m), DMatrix::identity(r, r) * -gamma],
                ])
            }
        }
    })?;
    let sol = solve(&lmi, &opts.solver)?;
    let y0 = sol.values[yb].clone();
    let z0 = sol.values[zb].clone();
    let p0 = y0
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalSingularity("Y0 is singular".into()))?;
    Ok(Precompensator {
        k0: &z0 * p0,
        y0,
        z0,
        residuals: sol.residuals,
        epsilon: eps,
    })
}

/// Storage matrix certifying a gain or passivity supply at rate `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct StorageCertificate {
    pub p: DMatrix<f64>,
    pub inertia: Inertia,
    pub residuals: Vec<f64>,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            epsilon: None,
            seed: 0,
            solver: SolverOptions {
                target_factor: 1.5,
                ..SolverOptions::default()
            },
        }
    }
}

struct PortData<'a> {
    vertices: &'a [DMatrix<f64>],
    b: &'a DMatrix<f64>,
    c: &'a DMatrix<f64>,
    d: &'a DMatrix<f64>,
}

impl PortData<'_> {
    fn check(&self) -> Result<usize> {
        let n = check_vertices(self.vertices, self.b)?;
        let (m, q) = (self.b.ncols(), self.c.nrows());
        if self.c.ncols() != n || self.d.shape() != (q, m) {
            return Err(Error::invalid("C, D dimensions do not match A, B"));
        }
        Ok(n)
    }
}

/// Solves for `P` over the supplied per-vertex block and checks its inertia.
///
/// The strictness margin applies to the storage-derivative block; the supply
/// blocks are shifted by `-2ε` so that the certified supply parameters are
/// exact up to `ε`.
/// Relative zero threshold for storage inertia. Storage matrices of long ladders are
/// legitimately graded over many decades, so only rounding-level eigenvalues count as zero.
const STORAGE_ZERO_TOL: f64 = 1e-12;

fn storage_lmi(
    data: &PortData<'_>,
    lambda: f64,
    inertia_target: Inertia,
    opts: &VerifyOptions,
    supply: &dyn Fn(&DMatrix<f64>, &DMatrix<f64>, f64) -> DMatrix<f64>,
) -> Result<StorageCertificate> {
    let n = data.check()?;
    if inertia_target.dim() != n {
        return Err(Error::invalid("inertia target dimension differs from the state dimension"));
    }
    let eps = opts.epsilon.unwrap_or_else(|| default_epsilon(data.vertices));
    let mut lmi = LmiProblem::new(eps, opts.seed)?;
    lmi.lambda = lambda;
    lmi.vertices = data.vertices.to_vec();
    let pb = lmi.symmetric("P", n)?;
    for (i, a) in data.vertices.iter().enumerate() {
        let a = a.clone();
        lmi.constraint(&format!("vertex{i}"), &|v: &Values| {
            let p = &v[pb];
            let lyap = a.transpose() * p + p * &a + p * (2.0 * lambda);
            let mut f = supply(&lyap, p, eps);
            for j in n..f.nrows() {
                f[(j, j)] -= 2.0 * eps;
            }
            f
        })?;
    }
    let sol = solve(&lmi, &opts.solver)?;
    let p = sol.values[pb].clone();
    let (_, inertia) = eig_symmetric(&p, STORAGE_ZERO_TOL)?;
    if inertia != inertia_target {
        return Err(Error::InertiaMismatch {
            expected: inertia_target,
            got: inertia,
        });
    }
    Ok(StorageCertificate {
        p,
        inertia,
        residuals: sol.residuals,
        epsilon: eps,
    })
}

/// `P` with `[[AᵀP + PA + 2λP, PB, Cᵀ], [BᵀP, -γI, Dᵀ], [C, D, -γI]] ⪯ 0`
/// (strict on the state block) at every vertex.
#[allow(clippy::too_many_arguments)]
pub fn verify_p_gain(
    vertices: &[DMatrix<f64>],
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    lambda: f64,
    gamma: f64,
    inertia_target: Inertia,
    opts: &VerifyOptions,
) -> Result<StorageCertificate> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("γ must be positive"));
    }
    let data = PortData { vertices, b, c, d };
    let (m, q) = (b.ncols(), c.nrows());
    storage_lmi(&data, lambda, inertia_target, opts, &|lyap, p, _| {
        block(&[
            vec![lyap.clone(), p * b, c.transpose()],
            vec![b.transpose() * p, DMatrix::identity(m, m) * -gamma, d.transpose()],
            vec![c.clone(), d.clone(), DMatrix::identity(q, q) * -gamma],
        ])
    })
}

/// `P` for the supply `-α|y|² + 2yᵀu + μ|u|²` (excess of output passivity `α`,
/// shortage of input passivity `μ`) at every vertex.
#[allow(clippy::too_many_arguments)]
pub fn verify_passivity(
    vertices: &[DMatrix<f64>],
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    lambda: f64,
    alpha: f64,
    mu: f64,
    inertia_target: Inertia,
    opts: &VerifyOptions,
) -> Result<StorageCertificate> {
    if c.nrows() != b.ncols() {
        return Err(Error::invalid("passivity needs as many outputs as inputs"));
    }
    let data = PortData { vertices, b, c, d };
    let m = b.ncols();
    storage_lmi(&data, lambda, inertia_target, opts, &|lyap, p, _| {
        let f11 = lyap + c.transpose() * c * alpha;
        let f12 = p * b - c.transpose() + c.transpose() * d * alpha;
        let f22 = DMatrix::identity(m, m) * -mu - d - d.transpose() + d.transpose() * d * alpha;
        block(&[vec![f11, f12.clone()], vec![f12.transpose(), f22]])
    })
}

/// Smallest feasible value in `[lo, hi]` by bisection (12 steps or relative width 1e-3).
/// `feasible(hi)` must hold; infeasibility is signalled by `Ok(false)`.
pub fn bisect_floor<F: FnMut(f64) -> Result<bool>>(mut lo: f64, mut hi: f64, mut feasible: F) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::invalid("bisection bracket is empty"));
    }
    if !feasible(hi)? {
        return Err(Error::Infeasible {
            best_residual: f64::NAN,
            required: f64::NAN,
            detail: format!("upper end {hi} of the bracket is infeasible"),
        });
    }
    for _ in 0..12 {
        if hi - lo <= 1e-3 * hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Maps `Infeasible` and `InertiaMismatch` to `false`.
pub fn feasibility<T>(r: Result<T>) -> Result<bool> {
    match r {
        Ok(_) => Ok(true),
        Err(Error::Infeasible { .. }) | Err(Error::InertiaMismatch { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}
