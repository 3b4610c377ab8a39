#![allow(dead_code)]
//! Independent reference computations. Nothing here calls the library's
//! eigen, root, frequency-grid or ladder kernels.

use mixfeed::cable::CableParams;

use super::{TAU_L, TAU_N, TAU_P};
use mixfeed::lti::C64;
use nalgebra::DMatrix;

/// Characteristic polynomial by Faddeev–LeVerrier, ascending coefficients, monic.
pub fn faddeev_leverrier(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + DMatrix::identity(n, n) * c[n - k + 1];
        c[n - k] = -(a * &m).trace() / k as f64;
    }
    c
}

fn horner(c: &[f64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &v| acc * z + v)
}

/// All roots of a real polynomial (ascending coefficients) by Durand–Kerner,
/// polished with Newton steps.
pub fn durand_kerner(c: &[f64]) -> Vec<C64> {
    let n = c.len() - 1;
    let lead = c[n];
    let monic: Vec<f64> = c.iter().map(|v| v / lead).collect();
    let radius = 1.0 + monic[..n].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let seed = C64::new(0.4, 0.9);
    let mut z: Vec<C64> = (0..n).map(|i| seed.powu(i as u32) * radius * 0.5).collect();
    for _ in 0..5000 {
        let mut delta = 0.0_f64;
        for i in 0..n {
            let mut den = C64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = horner(&monic, z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm() / z[i].norm().max(1.0));
        }
        if delta < 1e-15 {
            break;
        }
    }
    let deriv: Vec<f64> = (1..=n).map(|i| monic[i] * i as f64).collect();
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let d = horner(&deriv, *zi);
            if d.norm() > 0.0 {
                *zi -= horner(&monic, *zi) / d;
            }
        }
    }
    z
}

/// Largest distance after greedy nearest matching of two multisets.
pub fn match_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Input current of the ladder from the node equations at complex frequency `s`,
/// solved as a tridiagonal system by the Thomas algorithm with `v0 = 1`.
pub fn ladder_current(p: &CableParams, s: C64) -> C64 {
    let n = p.n;
    let g1 = 1.0 / p.r1;
    let g2 = 1.0 / p.r2;
    // Node i: (s Cm + g2 + g1 [+ g1 if i < n-1]) v_i - g1 v_{i-1} - g1 v_{i+1} = 0, v_{-1} = v0.
    let diag: Vec<C64> = (0..n)
        .map(|i| s * p.cm + g2 + g1 + if i + 1 < n { g1 } else { 0.0 })
        .collect();
    let off = C64::new(-g1, 0.0);
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    rhs[0] = C64::new(g1, 0.0);
    let mut cp = vec![C64::new(0.0, 0.0); n];
    let mut dp = vec![C64::new(0.0, 0.0); n];
    cp[0] = off / diag[0];
    dp[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off * cp[i - 1];
        cp[i] = off / m;
        dp[i] = (rhs[i] - off * dp[i - 1]) / m;
    }
    let mut v = vec![C64::new(0.0, 0.0); n];
    v[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        v[i] = dp[i] - cp[i] * v[i + 1];
    }
    (C64::new(1.0, 0.0) - v[0]) * g1
}

/// Dense-sample minimum of `Re g(jω - λ)` with `ω = 0` included.
pub fn brute_min_real(g: &dyn Fn(C64) -> C64, lambda: f64) -> f64 {
    let mut m = g(C64::new(-lambda, 0.0)).re;
    let n = 20_000;
    for i in 0..=n {
        let w = 10f64.powf(-4.0 + 10.0 * i as f64 / n as f64);
        m = m.min(g(C64::new(-lambda, w)).re);
    }
    m
}

/// `G(s, k, β) = -C(s, k, β) P(s)` for the first-order plant, written out.
pub fn loop_closed_form(k: f64, beta: f64) -> impl Fn(C64) -> C64 {
    move |s: C64| {
        let num = (s * (beta * (TAU_N + TAU_P) - TAU_P) + (2.0 * beta - 1.0)) * k;
        let den = (s * TAU_P + 1.0) * (s * TAU_N + 1.0) * (s * TAU_L + 1.0);
        -num / den
    }
}

/// First gain on `ks` at which the sampled circle test fails.
pub fn bracket(ks: &[f64], beta: f64, lambda: f64) -> Option<usize> {
    ks.iter()
        .position(|&k| brute_min_real(&loop_closed_form(k, beta), lambda) <= -1.0)
}
