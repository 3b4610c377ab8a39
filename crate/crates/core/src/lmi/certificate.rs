//! Serializable design certificates and their from-scratch re-verification.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::synthesis::{Design, DesignKind, DesignProblem};
use crate::error::{Error, Result};
use crate::io::{matrix_from_rows, matrix_rows};
use crate::lti::linalg::Inertia;

pub const CERTIFICATE_VERSION: u32 = 1;

type Rows = Vec<Vec<f64>>;

/// Design data and solution. Matrices are stored as row-major arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub version: u32,
    pub kind: String,
    pub lambda: f64,
    pub epsilon: f64,
    pub vertices: Vec<Rows>,
    #[serde(rename = "B")]
    pub b: Rows,
    pub instability: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(rename = "B2", default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<Rows>,
    #[serde(rename = "C2", default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(rename = "Y")]
    pub y: Rows,
    #[serde(rename = "Z")]
    pub z: Rows,
    #[serde(rename = "K")]
    pub k: Rows,
    #[serde(rename = "P")]
    pub p: Rows,
    pub inertia: Inertia,
    pub constraints: Vec<String>,
    pub residuals: Vec<f64>,
    pub p_residuals: Vec<f64>,
    pub seed: u64,
}

/// Outcome of re-checking a certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificateCheck {
    pub residuals: Vec<f64>,
    pub p_residuals: Vec<f64>,
    pub inertia: Inertia,
    pub issues: Vec<String>,
}

impl CertificateCheck {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }
}

impl Certificate {
    pub fn from_design(d: &Design) -> Self {
        let pr = &d.problem;
        let (mut b2, mut c2, mut gamma, mut c, mut mu) = (None, None, None, None, None);
        match &pr.kind {
            DesignKind::Nominal => {}
            DesignKind::Robust { b2: bb, c2: cc, gamma: g } => {
                b2 = Some(matrix_rows(bb));
                c2 = Some(matrix_rows(cc));
                gamma = Some(*g);
            }
            DesignKind::Passive { c: cc, mu: m } => {
                c = Some(matrix_rows(cc));
                mu = Some(*m);
            }
        }
        Certificate {
            version: CERTIFICATE_VERSION,
            kind: pr.kind.name().to_string(),
            lambda: pr.lambda,
            epsilon: pr.epsilon,
            vertices: pr.vertices.iter().map(matrix_rows).collect(),
            b: matrix_rows(&pr.b),
            instability: pr.instability,
            nu: pr.nu,
            b2,
            c2,
            gamma,
            c,
            mu,
            y: matrix_rows(&d.y),
            z: matrix_rows(&d.z),
            k: matrix_rows(&d.eval.k),
            p: matrix_rows(&d.eval.p),
            inertia: d.eval.inertia,
            constraints: d.eval.constraint_names.clone(),
            residuals: d.eval.residuals.clone(),
            p_residuals: d.eval.p_residuals.clone(),
            seed: pr.seed,
        }
    }

    pub fn problem(&self) -> Result<DesignProblem> {
        if self.version != CERTIFICATE_VERSION {
            return Err(Error::invalid(format!("unsupported certificate version {}", self.version)));
        }
        let need = |m: &Option<Rows>, name: &str| -> Result<DMatrix<f64>> {
            matrix_from_rows(
                m.as_ref()
                    .ok_or_else(|| Error::invalid(format!("certificate lacks {name}")))?,
            )
        };
        let kind = match self.kind.as_str() {
            "nominal" => DesignKind::Nominal,
            "robust" => DesignKind::Robust {
                b2: need(&self.b2, "B2")?,
                c2: need(&self.c2, "C2")?,
                gamma: self.gamma.ok_or_else(|| Error::invalid("certificate lacks gamma"))?,
            },
            "passive" => DesignKind::Passive {
                c: need(&self.c, "C")?,
                mu: self.mu.ok_or_else(|| Error::invalid("certificate lacks mu"))?,
            },
            other => return Err(Error::invalid(format!("unknown certificate kind {other}"))),
        };
        let vertices = self
            .vertices
            .iter()
            .map(|v| matrix_from_rows(v))
            .collect::<Result<Vec<_>>>()?;
        let p = DesignProblem {
            kind,
            vertices,
            b: matrix_from_rows(&self.b)?,
            lambda: self.lambda,
            epsilon: self.epsilon,
            instability: self.instability,
            nu: self.nu,
            seed: self.seed,
        };
        p.validate()?;
        Ok(p)
    }

    /// Rebuilds every constraint from the stored data and re-evaluates `(Y, Z)`.
    pub fn verify(&self) -> Result<CertificateCheck> {
        let problem = self.problem()?;
        let n = problem.state_dim();
        let y = matrix_from_rows(&self.y)?;
        let z = matrix_from_rows(&self.z)?;
        if y.shape() != (n, n) || z.shape() != (problem.input_dim(), n) {
            return Err(Error::invalid("Y or Z does not match the vertex dimension"));
        }
        let eval = problem.evaluate(&y, &z)?;
        let eps = problem.epsilon;
        let mut issues = Vec::new();
        for (name, r) in eval.constraint_names.iter().zip(&eval.residuals) {
            if !(*r <= -eps) {
                issues.push(format!("constraint {name}: residual {r:.6e} > -ε = {:.6e}", -eps));
            }
        }
        for (i, r) in eval.p_residuals.iter().enumerate() {
            if !(*r < 0.0) {
                issues.push(format!("storage inequality {i}: residual {r:.6e} not negative"));
            }
        }
        let expected = Inertia::dominant(2, n);
        if eval.inertia != expected {
            issues.push(format!("inertia of Y is {}, expected {expected}", eval.inertia));
        }
        let stored_k = matrix_from_rows(&self.k)?;
        if stored_k.shape() != eval.k.shape()
            || (&stored_k - &eval.k).norm() > 1e-8 * eval.k.norm().max(1.0)
        {
            issues.push("stored K differs from Z·Y⁻¹".into());
        }
        if self.inertia != eval.inertia {
            issues.push("stored inertia differs from the recomputed one".into());
        }
        Ok(CertificateCheck {
            residuals: eval.residuals,
            p_residuals: eval.p_residuals,
            inertia: eval.inertia,
            issues,
        })
    }
}
