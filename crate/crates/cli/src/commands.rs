//! Command implementations. Every file is written atomically.

use std::fmt;
use std::path::Path;

use mixfeed::cable::{cable_ss, interconnect, InterconnectedSystem};
use mixfeed::dominance::{dominance_map, RegionLabel};
use mixfeed::io::{format_float, matrix_from_rows, to_json, write_atomic};
use mixfeed::lmi::{
    dc_gain, design_2dominant, design_passive, design_robust, Certificate, Design, DesignOptions,
};
use mixfeed::mixed_feedback::ClosedLoopSystem;
use mixfeed::simulation::{run, OscillationVerdict, Scenario, SimTrace, Verdict};
use mixfeed::Error;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::Config;
use crate::output::{sibling, Csv};
use crate::DesignKind;

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(String),
    Violations(Vec<String>),
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Core(Error::InvalidInput(msg.into()))
    }

    /// 2 configuration, 3 numerics or integration, 4 infeasible, 5 inertia, 6 residual violation, 1 I/O.
    pub fn code(&self) -> u8 {
        match self {
            Failure::Core(e) => match e {
                Error::InvalidInput(_) => 2,
                Error::Infeasible { .. } | Error::PreconditionFailed(_) | Error::UncontrollablePair { .. } => 4,
                Error::InertiaMismatch { .. } => 5,
                Error::NumericalSingularity(_)
                | Error::ShiftedAxisPole { .. }
                | Error::MarginalEquilibrium { .. }
                | Error::IntegrationFailure { .. } => 3,
            },
            Failure::Io(_) => 1,
            Failure::Violations(_) => 6,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(m) => f.write_str(m),
            Failure::Violations(v) => write!(f, "certificate check failed: {}", v.join("; ")),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

fn write(path: &Path, bytes: &[u8]) -> Outcome {
    write_atomic(path, bytes).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn column(v: &[f64], n: usize, name: &str) -> Result<DMatrix<f64>, Failure> {
    if v.len() != n {
        return Err(Failure::config(format!("{name} has length {}, state dimension is {n}", v.len())));
    }
    Ok(DMatrix::from_column_slice(n, 1, v))
}

fn row(v: &[f64], n: usize, name: &str) -> Result<DMatrix<f64>, Failure> {
    column(v, n, name).map(|c| c.transpose())
}

pub fn analyze_map(config: &Path, out: &Path) -> Outcome {
    let cfg = Config::load(config)?;
    let params = cfg.params()?;
    let mc = cfg.map_config()?;
    let map = dominance_map(&params, &mc)?;
    let mut labels = Csv::new(&["k".into(), "beta".into(), "label".into()]);
    let mut curves = Csv::new(&["beta".into(), "k0".into(), "k2".into()]);
    let mut counts = [0usize; 5];
    for col in &map.columns {
        for (k, label) in map.ks.iter().zip(&col.labels) {
            labels.row(&[format_float(*k), format_float(col.beta), label.as_str().into()]);
            counts[*label as usize] += 1;
        }
        let k2 = col.k2.map(format_float).unwrap_or_default();
        curves.row(&[format_float(col.beta), format_float(col.k0), k2]);
    }
    let side = sibling(out, ".curves");
    write(out, &labels.into_bytes())?;
    write(&side, &curves.into_bytes())?;
    println!(
        "map {}x{} lambda={} -> {}, {}",
        map.columns.len(),
        map.ks.len(),
        format_float(map.lambda),
        out.display(),
        side.display()
    );
    for label in [
        RegionLabel::ZeroDominant,
        RegionLabel::TwoDomStableEq,
        RegionLabel::Oscillation,
        RegionLabel::OscillationPlusFixedPoints,
        RegionLabel::NoCertificate,
    ] {
        println!("  {label}: {}", counts[label as usize]);
    }
    Ok(())
}

fn design_options(cfg: &Config) -> DesignOptions {
    DesignOptions {
        epsilon: cfg.design.epsilon,
        instability: cfg.design.instability,
        nu: cfg.design.nu,
        seed: cfg.seed,
        ..Default::default()
    }
}

/// Corners of `τp(1 ± δ) × τn(1 ± δ)`.
fn hull(cfg: &Config) -> Result<Vec<DMatrix<f64>>, Failure> {
    let d = cfg.design.vertex_perturbation;
    if !(d > 0.0 && d < 1.0) {
        return Err(Failure::config("design.vertex_perturbation must lie in (0, 1)"));
    }
    let sat = cfg.saturation()?;
    let mut out = Vec::new();
    for tp in [cfg.tau_p * (1.0 - d), cfg.tau_p * (1.0 + d)] {
        for tn in [cfg.tau_n * (1.0 - d), cfg.tau_n * (1.0 + d)] {
            out.push(cfg.params_with(tp, tn)?.closed_loop(sat.clone())?.a);
        }
    }
    Ok(out)
}

pub fn design(kind: DesignKind, config: &Path, out: &Path) -> Outcome {
    let cfg = Config::load(config)?;
    let sys = cfg.closed_loop()?;
    let n = sys.order();
    let lambda = cfg.lambda()?;
    let a = sys.a.clone();
    let b = match &cfg.design.input {
        Some(v) => column(v, n, "design.input")?,
        None => DMatrix::from_column_slice(n, 1, sys.b1.as_slice()),
    };
    let c = sys.c1.clone();
    let mut opts = design_options(&cfg);
    let d = match kind {
        DesignKind::Nominal => design_2dominant(&a, &b, lambda, &opts)?,
        DesignKind::Parametric => {
            let verts = hull(&cfg)?;
            opts.extra_vertices = verts[1..].to_vec();
            design_2dominant(&verts[0], &b, lambda, &opts)?
        }
        DesignKind::Robust => {
            let gamma = cfg
                .design
                .gamma
                .ok_or_else(|| Failure::config("robust design needs design.gamma"))?;
            let b2 = match &cfg.design.b2 {
                Some(v) => column(v, n, "design.b2")?,
                None => b.clone(),
            };
            let c2 = match &cfg.design.c2 {
                Some(v) => row(v, n, "design.c2")?,
                None => c.clone(),
            };
            design_robust(&a, &b, &b2, &c2, lambda, gamma, &opts)?
        }
        DesignKind::Passive => {
            let mu = cfg.design.mu.ok_or_else(|| Failure::config("passive design needs design.mu"))?;
            let port = match &cfg.design.output {
                Some(v) => row(v, n, "design.output")?,
                None => c.clone(),
            };
            design_passive(&a, &b, &port, lambda, mu, &opts)?
        }
    };
    let cert = Certificate::from_design(&d);
    write(out, to_json(&cert)?.as_bytes())?;
    summarize(&d, &a, kind)?;
    println!("certificate -> {}", out.display());
    Ok(())
}

fn summarize(d: &Design, nominal: &DMatrix<f64>, kind: DesignKind) -> Outcome {
    let k = d.k();
    let ks: Vec<String> = k.iter().map(|&v| format_float(v)).collect();
    let signs: String = k.iter().map(|&v| if v > 0.0 { '+' } else if v < 0.0 { '-' } else { '0' }).collect();
    println!("kind={} lambda={} epsilon={}", d.problem.kind.name(), format_float(d.problem.lambda), format_float(d.problem.epsilon));
    println!("inertia(Y)={}", d.inertia());
    println!("max_residual={}", format_float(d.eval.max_residual()));
    println!("max_storage_residual={}", format_float(d.eval.max_p_residual()));
    println!("K=[{}] signs={signs}", ks.join(","));
    let mut gains = vec![("nominal".to_string(), dc_gain(nominal, &d.problem.b, k)?)];
    if matches!(kind, DesignKind::Parametric) {
        for (i, g) in d.dc_gains()?.into_iter().enumerate() {
            gains.push((format!("vertex{i}"), g));
        }
    }
    for (name, g) in gains {
        println!("dc_gain[{name}]={} {}", format_float(g), if g < 1.0 { "< 1" } else { ">= 1" });
    }
    Ok(())
}

fn load_certificate(path: &Path) -> Result<Certificate, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read certificate {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("certificate {}: {e}", path.display())))
}

fn certificate_loop(cfg: &Config, cert: &Certificate) -> Result<ClosedLoopSystem, Failure> {
    let nominal = cfg.closed_loop()?;
    let n = nominal.order();
    let a = matrix_from_rows(cert.vertices.first().ok_or_else(|| Failure::config("certificate has no vertices"))?)?;
    let b = matrix_from_rows(&cert.b)?;
    let k = matrix_from_rows(&cert.k)?;
    if a.shape() != (n, n) || b.shape() != (n, 1) || k.shape() != (1, n) {
        return Err(Failure::config(format!(
            "certificate has state dimension {}, config has {n}",
            a.nrows()
        )));
    }
    let b1 = DVector::from_column_slice(b.as_slice());
    Ok(ClosedLoopSystem::new(a, b1, nominal.c1.clone(), k, cfg.saturation()?)?.with_convention(nominal.convention))
}

fn scenario(cfg: &Config, order: usize, base: usize) -> Result<Scenario, Failure> {
    let sim = &cfg.simulation;
    let mut x0 = DVector::zeros(order);
    match &sim.x0 {
        Some(v) if v.len() == order || v.len() == base => x0.rows_mut(0, v.len()).copy_from_slice(v),
        Some(v) => {
            return Err(Failure::config(format!(
                "simulation.x0 has length {}, expected {base} or {order}",
                v.len()
            )))
        }
        None => x0[0] = 0.1,
    }
    let mut sc = Scenario::new(x0, cfg.slow_tau()).with_reference(cfg.reference()?);
    if let Some(t) = sim.horizon {
        sc.horizon = t;
    }
    sc.transient_fraction = sim.transient_fraction;
    sc.integrator.tol = sim.tol;
    sc.integrator.h_max = sim.h_max;
    sc.integrator.output_dt = sim.output_dt;
    Ok(sc)
}

fn verdict_line(v: &Verdict, extra: &str) -> String {
    let detail = match &v.kind {
        OscillationVerdict::Converged { value } => format!(" value={}", format_float(*value)),
        OscillationVerdict::Oscillating { amplitude, period } => {
            format!(" amplitude={} period={}", format_float(*amplitude), format_float(*period))
        }
        OscillationVerdict::SwitchedEquilibrium { old, new } => {
            format!(" old={} new={}", format_float(*old), format_float(*new))
        }
        OscillationVerdict::Undetermined => String::new(),
    };
    format!("verdict={}{extra}{detail}", v.kind.name())
}

fn trace_csv(tr: &SimTrace) -> Vec<u8> {
    let n = tr.x.first().map_or(0, |x| x.len());
    let mut header = vec!["t".to_string(), "r".into(), "y".into()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    let mut csv = Csv::new(&header);
    for i in 0..tr.len() {
        let mut row = vec![tr.t[i], tr.r[i], tr.y[i]];
        row.extend_from_slice(&tr.x[i]);
        csv.floats(&row);
    }
    csv.into_bytes()
}

fn node_csv(sys: &InterconnectedSystem, tr: &SimTrace) -> Vec<u8> {
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..=sys.cable_order).map(|i| format!("v{i}")))
        .collect();
    let mut csv = Csv::new(&header);
    for (t, x) in tr.t.iter().zip(&tr.x) {
        let mut row = vec![*t];
        row.extend(sys.node_voltages(x));
        csv.floats(&row);
    }
    csv.into_bytes()
}

pub fn simulate(config: &Path, cert: Option<&Path>, out: &Path) -> Outcome {
    let cfg = Config::load(config)?;
    let osc = match cert {
        Some(p) => certificate_loop(&cfg, &load_certificate(p)?)?,
        None => cfg.closed_loop()?,
    };
    let base = osc.order();
    let Some(cable) = &cfg.cable else {
        let sc = scenario(&cfg, base, base)?;
        let (trace, verdict) = run(&osc, &sc)?;
        write(out, &trace_csv(&trace))?;
        println!("{}", verdict_line(&verdict, ""));
        return Ok(());
    };
    let cables = cable.params()?;
    let single = cables.len() == 1;
    let results = cables
        .par_iter()
        .map(|p| -> Result<(f64, Vec<u8>, Verdict), Failure> {
            let sys = interconnect(&osc, &cable_ss(p)?)?;
            let mut sc = scenario(&cfg, sys.system.order(), base)?;
            sc.integrator.h_max = Some(cfg.simulation.h_max.unwrap_or(sys.step_bound));
            let (trace, verdict) = run(&sys.system, &sc)?;
            Ok((p.r2, node_csv(&sys, &trace), verdict))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (r2, csv, verdict) in results {
        let path = if single { out.to_path_buf() } else { sibling(out, &format!("_r2-{r2}")) };
        write(&path, &csv)?;
        println!("{}", verdict_line(&verdict, &format!(" r2={r2}")));
    }
    Ok(())
}

pub fn verify(cert_path: &Path, config: &Path) -> Outcome {
    let cert = load_certificate(cert_path)?;
    let cfg = Config::load(config)?;
    let n = cfg.state_dim()?;
    let dims_ok = !cert.vertices.is_empty()
        && cert.vertices.iter().all(|v| v.len() == n && v.iter().all(|r| r.len() == n))
        && cert.b.len() == n;
    if !dims_ok {
        return Err(Failure::config(format!(
            "certificate dimension {} does not match the config state dimension {n}",
            cert.vertices.first().map_or(0, |v| v.len())
        )));
    }
    let check = cert.verify()?;
    let drift = check
        .residuals
        .iter()
        .chain(&check.p_residuals)
        .zip(cert.residuals.iter().chain(&cert.p_residuals))
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    for (name, r) in cert.constraints.iter().zip(&check.residuals) {
        println!("constraint {name} residual={}", format_float(*r));
    }
    println!("inertia(Y)={} stored-vs-recomputed drift={}", check.inertia, format_float(drift));
    if !check.passed() {
        return Err(Failure::Violations(check.issues));
    }
    println!("verified");
    Ok(())
}
