#![allow(dead_code)]
//! Property bodies shared by the proptest suite and the acceptance runner.

use mixfeed::cable::{cable_admittance, cable_ss, CableParams};
use mixfeed::lti::{
    eig_general, eig_symmetric, shifted_min_real, shifted_sup_mag, FreqGrid, Inertia, Polynomial, TransferFunction, C64,
    INERTIA_ZERO_TOL,
};
use mixfeed::mixed_feedback::{controller_zero, beta_star, make_loop_tf, Saturation};
use nalgebra::DMatrix;
use proptest::prelude::*;

use super::oracles::ladder_current;

pub type PropResult = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> PropResult {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// Saturation --------------------------------------------------------------

pub fn saturation_tanh(bound: f64, ys: &[f64]) -> PropResult {
    let s = Saturation::tanh(bound).map_err(|e| e.to_string())?;
    check_saturation(&s, ys)
}

/// Table built from cumulative increments with slopes in [0, 1].
pub fn saturation_table(steps: &[(f64, f64)], ys: &[f64]) -> PropResult {
    let mut x = vec![-5.0];
    let mut y = vec![0.0];
    for &(h, slope) in steps {
        x.push(x.last().unwrap() + h);
        y.push(y.last().unwrap() + h * slope);
    }
    let mid = y[y.len() / 2];
    let y: Vec<f64> = y.iter().map(|v| v - mid).collect();
    if y.iter().all(|v| *v == 0.0) {
        return Ok(());
    }
    let s = Saturation::table(x, y).map_err(|e| e.to_string())?;
    check_saturation(&s, ys)
}

fn check_saturation(s: &Saturation, ys: &[f64]) -> PropResult {
    let m = s.bound;
    let mut sorted = ys.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        ensure(s.phi(w[1]) >= s.phi(w[0]) - 1e-12, || format!("φ decreases between {} and {}", w[0], w[1]))?;
    }
    for &y in ys {
        let d = s.dphi(y);
        ensure(s.phi(y).abs() <= m * (1.0 + 1e-12), || format!("|φ({y})| exceeds M = {m}"))?;
        ensure((-1e-12..=1.0 + 1e-12).contains(&d), || format!("φ'({y}) = {d} outside [0, 1]"))?;
        let h = 1e-5 * m.max(1.0);
        let fd = (s.phi(y + h) - s.phi(y - h)) / (2.0 * h);
        ensure((-1e-9..=1.0 + 1e-6).contains(&fd), || format!("secant slope {fd} at {y} outside [0, 1]"))?;
    }
    Ok(())
}

// Conjugate symmetry ------------------------------------------------------

fn closed_under_conjugation(z: &[C64], scale: f64) -> bool {
    let tol = 1e-9 * scale.max(1.0);
    z.iter().all(|a| z.iter().any(|b| (a.conj() - b).norm() <= tol))
}

pub fn conjugate_roots(coeffs: &[f64]) -> PropResult {
    let p = Polynomial::new(coeffs.to_vec());
    if p.degree() < 1 {
        return Ok(());
    }
    let r = p.roots().map_err(|e| e.to_string())?;
    let scale = r.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    ensure(r.len() == p.degree(), || format!("{} roots for degree {}", r.len(), p.degree()))?;
    ensure(closed_under_conjugation(&r, scale), || format!("roots {r:?} not conjugate-closed"))
}

pub fn conjugate_eigenvalues(n: usize, entries: &[f64]) -> PropResult {
    let m = DMatrix::from_row_slice(n, n, &entries[..n * n]);
    let e = eig_general(&m).map_err(|e| e.to_string())?;
    let scale = e.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    ensure(closed_under_conjugation(&e, scale), || format!("eigenvalues {e:?} not conjugate-closed"))
}

// Inertia congruence --------------------------------------------------------

/// `S = Q diag(d) Qᵀ` with `Q` orthogonal from a QR factorization, then `T S Tᵀ`.
pub fn inertia_congruence(n: usize, signs: &[i8], q_entries: &[f64], t_entries: &[f64]) -> PropResult {
    let q = DMatrix::from_row_slice(n, n, &q_entries[..n * n]).qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        signs[..n].iter().enumerate().map(|(i, &s)| s as f64 * (1.0 + i as f64)),
    ));
    let s = &q * d * q.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let expected = Inertia::new(
        signs[..n].iter().filter(|&&v| v < 0).count(),
        signs[..n].iter().filter(|&&v| v == 0).count(),
        signs[..n].iter().filter(|&&v| v > 0).count(),
    );
    let mut t = DMatrix::from_row_slice(n, n, &t_entries[..n * n]);
    for i in 0..n {
        t[(i, i)] += 3.0;
    }
    let sv = t.clone().svd(false, false).singular_values;
    if sv.min() < 1e-3 * sv.max() {
        return Ok(());
    }
    let ts = &t * &s * t.transpose();
    let ts = (&ts + ts.transpose()) * 0.5;
    let (_, i1) = eig_symmetric(&s, INERTIA_ZERO_TOL).map_err(|e| e.to_string())?;
    let (_, i2) = eig_symmetric(&ts, INERTIA_ZERO_TOL).map_err(|e| e.to_string())?;
    ensure(i1 == expected, || format!("inertia of S is {i1}, built as {expected}"))?;
    ensure(i2 == i1, || format!("congruence changed inertia {i1} -> {i2}"))
}

// Loop gain linearity -----------------------------------------------------

pub fn gain_linearity(k: f64, beta: f64, tau_p: f64, tau_n: f64, tau_l: f64) -> PropResult {
    let plant = TransferFunction::first_order_lag(1.0, tau_l).map_err(|e| e.to_string())?;
    let g1 = make_loop_tf(1.0, beta, tau_p, tau_n, &plant).map_err(|e| e.to_string())?;
    let gk = make_loop_tf(k, beta, tau_p, tau_n, &plant).map_err(|e| e.to_string())?;
    ensure(gk.den().coeffs() == g1.den().coeffs(), || "denominator depends on k".into())?;
    let n1 = g1.num().coeffs();
    let nk = gk.num().coeffs();
    if k == 0.0 {
        return ensure(gk.num().is_zero(), || "k = 0 loop is not zero".into());
    }
    ensure(n1.len() == nk.len(), || format!("numerator degree changed: {n1:?} vs {nk:?}"))?;
    for (a, b) in n1.iter().zip(nk) {
        ensure(*b == k * a || (b - k * a).abs() <= 4.0 * f64::EPSILON * (k * a).abs(), || {
            format!("coefficient {b} is not {k} × {a}")
        })?;
    }
    Ok(())
}

// Controller zero location --------------------------------------------------

pub fn zero_exclusion(tau_p: f64, tau_n: f64, beta: f64) -> PropResult {
    if (beta - beta_star(tau_p, tau_n)).abs() < 1e-9 {
        return Ok(());
    }
    match controller_zero(beta, tau_p, tau_n) {
        None => Ok(()),
        Some(z) => {
            let (lo, hi) = (-1.0 / tau_p, -1.0 / tau_n);
            let slack = 1e-9 * lo.abs();
            ensure(!(z > lo + slack && z < hi - slack), || {
                format!("z_β = {z} inside ({lo}, {hi}) for β = {beta}")
            })
        }
    }
}

// Extremum scaling ----------------------------------------------------------

pub fn extremum_scaling(c: f64, beta: f64, lambda: f64) -> PropResult {
    let plant = TransferFunction::first_order_lag(1.0, 0.01).map_err(|e| e.to_string())?;
    let g = make_loop_tf(1.0, beta, 0.1, 1.0, &plant).map_err(|e| e.to_string())?;
    let gc = g.scale(c);
    let grid = FreqGrid::with_points(400);
    let m = shifted_min_real(&g, lambda, &grid).map_err(|e| e.to_string())?.value;
    let mc = shifted_min_real(&gc, lambda, &grid).map_err(|e| e.to_string())?.value;
    let s = shifted_sup_mag(&g, lambda, &grid).map_err(|e| e.to_string())?.value;
    let sc = shifted_sup_mag(&gc, lambda, &grid).map_err(|e| e.to_string())?.value;
    ensure((mc - c * m).abs() <= 1e-12 * (c * m).abs().max(1e-300), || format!("min Re: {mc} vs {c}·{m}"))?;
    ensure((sc - c * s).abs() <= 1e-12 * (c * s).abs(), || format!("sup |G|: {sc} vs {c}·{s}"))
}

// Cable recursion versus ladder -------------------------------------------

pub fn recursion_ladder(n: usize, r1: f64, r2: f64, cm: f64, s: C64) -> PropResult {
    let p = CableParams::new(n, r1, r2, cm).map_err(|e| e.to_string())?;
    let rec = cable_admittance(&p, s).map_err(|e| e.to_string())?;
    let nodes = ladder_current(&p, s);
    let ss = cable_ss(&p).map_err(|e| e.to_string())?.eval_siso(s).map_err(|e| e.to_string())?;
    let tol = 1e-8 * rec.norm();
    ensure((rec - nodes).norm() <= tol, || format!("recursion {rec} vs node equations {nodes} at s = {s}"))?;
    ensure((rec - ss).norm() <= tol, || format!("recursion {rec} vs ladder realization {ss} at s = {s}"))
}

// Strategies ----------------------------------------------------------------

pub fn sample_points() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, 1..40)
}

pub fn table_steps() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.05..2.0f64, 0.0..=1.0f64), 2..12)
}

pub fn polynomial() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 2..10).prop_filter("nonzero leading", |c| c.last().unwrap().abs() > 1e-3)
}

pub fn square_matrix() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=8).prop_flat_map(|n| (Just(n), prop::collection::vec(-5.0..5.0f64, n * n)))
}

pub fn congruence_case() -> impl Strategy<Value = (usize, Vec<i8>, Vec<f64>, Vec<f64>)> {
    (1usize..=7).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(prop_oneof![Just(-1i8), Just(0i8), Just(1i8)], n),
            prop::collection::vec(-1.0..1.0f64, n * n),
            prop::collection::vec(-1.0..1.0f64, n * n),
        )
    })
}

pub fn loop_case() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    (0.0..1000.0f64, 0.0..=1.0f64, 0.05..0.5f64, 0.6..5.0f64, 0.001..0.04f64)
}

pub fn zero_case() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.01..1.0f64, 0.0..=1.0f64).prop_flat_map(|(tp, b)| (Just(tp), (tp * 1.01)..(tp * 100.0), Just(b)))
}

pub fn scaling_case() -> impl Strategy<Value = (f64, f64, f64)> {
    (
        prop_oneof![Just(0.5f64), Just(2.0), Just(4.0), Just(0.25), Just(8.0), Just(1.0 / 1024.0), Just(3.0), Just(0.7)],
        0.0..=1.0f64,
        prop_oneof![Just(0.0f64), Just(5.0), Just(50.0)],
    )
}

pub fn cable_case() -> impl Strategy<Value = (usize, f64, f64, f64, f64, f64)> {
    (1usize..=20, 10.0..1000.0f64, 100.0..1000.0f64, 1e-5..1e-3f64, -0.5..5.0f64, -200.0..200.0f64)
}
