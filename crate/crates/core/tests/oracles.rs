mod common;

use common::oracles::*;
use common::*;
use mixfeed::cable::{cable_admittance, cable_ss, CableParams};
use mixfeed::dominance::{circle_criterion, k0, k2};
use mixfeed::io::to_json;
use mixfeed::lmi::{
    design_2dominant, design_passive, design_precompensator, design_robust, Certificate, DesignOptions,
};
use mixfeed::lti::{characteristic_polynomial, eig_general, log_space, shifted_min_real, FreqGrid, Polynomial, C64};
use mixfeed::robustness::{
    dominance_margin, first_order_perturbation, perturbed_certificate, weighted_perturbation_size,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn eigenvalues_match_characteristic_polynomial_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-3.0..3.0));
        let fl = faddeev_leverrier(&m);
        let oracle = durand_kerner(&fl);
        let scale = oracle.iter().fold(1.0_f64, |s, z| s.max(z.norm()));
        let eig = eig_general(&m).unwrap();
        let d = match_distance(&eig, &oracle);
        assert!(d <= 1e-7 * scale, "n={n}: eig {eig:?} vs oracle {oracle:?}");
        let cp = characteristic_polynomial(&m).unwrap();
        for (a, b) in cp.coeffs().iter().zip(&fl) {
            assert!((a - b).abs() <= 1e-9 * fl.iter().fold(1.0_f64, |s, v| s.max(v.abs())));
        }
    }
}

#[test]
fn polynomial_roots_match_durand_kerner() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let n = rng.gen_range(1..=8);
        let mut c: Vec<f64> = (0..=n).map(|_| rng.gen_range(-4.0..4.0)).collect();
        c[n] = rng.gen_range(0.5..2.0);
        let roots = Polynomial::new(c.clone()).roots().unwrap();
        let oracle = durand_kerner(&c);
        let scale = oracle.iter().fold(1.0_f64, |s, z| s.max(z.norm()));
        assert!(match_distance(&roots, &oracle) <= 1e-7 * scale, "{c:?}");
    }
}

#[test]
fn k0_k2_match_brute_force_bracketing() {
    let p = params(1.0, 0.5);
    let grid = FreqGrid::default();
    let ks = log_space(0.01, 1e5, 1500);
    let step = ks[1] / ks[0];
    for beta in [0.1, 0.25, 0.4, 0.7, 0.9] {
        let b0 = k0(beta, &p, &grid).unwrap();
        let b2 = k2(beta, LAMBDA, &p, &grid).unwrap();
        for (bound, lambda) in [(b0, 0.0), (b2, LAMBDA)] {
            match bracket(&ks, beta, lambda) {
                None => assert!(bound >= ks[ks.len() - 1] / step, "β={beta} λ={lambda}: {bound}"),
                Some(i) => {
                    assert!(i > 0);
                    assert!(
                        bound >= ks[i - 1] / step && bound <= ks[i] * step,
                        "β={beta} λ={lambda}: bound {bound} vs bracket [{}, {}]",
                        ks[i - 1],
                        ks[i]
                    );
                }
            }
        }
    }
}

#[test]
fn min_real_matches_dense_oracle() {
    for (beta, lambda) in [(0.4, 0.0), (0.4, LAMBDA), (0.8, LAMBDA), (0.2, 0.0)] {
        let g = params(1.0, beta).loop_tf().unwrap();
        let m = shifted_min_real(&g, lambda, &FreqGrid::default()).unwrap().value;
        let oracle = brute_min_real(&loop_closed_form(1.0, beta), lambda);
        assert!(m <= oracle + 1e-12, "refined minimum {m} above sampled {oracle}");
        assert!((m - oracle).abs() <= 1e-4 * oracle.abs().max(1e-3), "β={beta} λ={lambda}: {m} vs {oracle}");
    }
}

#[test]
fn circle_examples() {
    let grid = FreqGrid::default();
    let lo = circle_criterion(&params(0.5, 0.4).loop_tf().unwrap(), 0.0, 1.0, &grid).unwrap();
    assert_eq!(lo.certificate().map(|c| c.p), Some(0));
    let mid = circle_criterion(&params(5.0, 0.4).loop_tf().unwrap(), LAMBDA, 1.0, &grid).unwrap();
    assert_eq!(mid.certificate().map(|c| c.p), Some(2));
    let hi = circle_criterion(&params(900.0, 0.02).loop_tf().unwrap(), LAMBDA, 1.0, &grid).unwrap();
    assert!(!hi.is_certified());
    let b0 = k0(0.4, &params(1.0, 0.4), &grid).unwrap();
    assert!(b0 < 5.0);
    assert!(circle_criterion(&params(0.99 * b0, 0.4).loop_tf().unwrap(), 0.0, 1.0, &grid)
        .unwrap()
        .is_certified());
    assert!(!circle_criterion(&params(1.01 * b0, 0.4).loop_tf().unwrap(), 0.0, 1.0, &grid)
        .unwrap()
        .is_certified());
    assert!(k2(0.4, LAMBDA, &params(1.0, 0.4), &grid).unwrap() > 5.0);
}

#[test]
fn cable_recursion_matches_node_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = CableParams::new(15, 100.0, 400.0, 1e-4).unwrap();
    let ss = cable_ss(&p).unwrap();
    for _ in 0..10 {
        let s = C64::new(rng.gen_range(-2.0..30.0), rng.gen_range(-500.0..500.0));
        let g = cable_admittance(&p, s).unwrap();
        assert!((g - ladder_current(&p, s)).norm() <= 1e-8 * g.norm());
        assert!((g - ss.eval_siso(s).unwrap()).norm() <= 1e-8 * g.norm());
    }
    for n in 1..=20 {
        let p = CableParams::new(n, rng.gen_range(20.0..200.0), rng.gen_range(100.0..900.0), 1e-4).unwrap();
        let s = C64::new(rng.gen_range(0.0..5.0), rng.gen_range(-100.0..100.0));
        let g = cable_admittance(&p, s).unwrap();
        assert!((g - ladder_current(&p, s)).norm() <= 1e-8 * g.norm(), "n={n}");
    }
}

fn assert_round_trip(d: &mixfeed::lmi::Design) {
    let cert = Certificate::from_design(d);
    let back: Certificate = serde_json::from_str(&to_json(&cert).unwrap()).unwrap();
    assert_eq!(back, cert);
    let chk = back.verify().unwrap();
    assert!(chk.passed(), "{:?}", chk.issues);
    assert_eq!(chk.residuals, d.eval.residuals);
    assert_eq!(chk.p_residuals, d.eval.p_residuals);
    assert_eq!(chk.inertia, d.eval.inertia);
}

#[test]
fn certificates_round_trip_with_identical_residuals() {
    let opts = DesignOptions {
        instability: true,
        ..Default::default()
    };
    assert_round_trip(&design_2dominant(&nominal_a(), &nominal_b(), LAMBDA, &opts).unwrap());
    let v = hull_vertices();
    let popts = DesignOptions {
        extra_vertices: v[1..].to_vec(),
        ..opts.clone()
    };
    assert_round_trip(&design_2dominant(&v[0], &nominal_b(), LAMBDA, &popts).unwrap());
    let b2 = col(&[0.0, 1.0 / TAU_P, 1.0 / TAU_N]);
    assert_round_trip(&design_robust(&nominal_a(), &nominal_b(), &b2, &c1(), LAMBDA, 5.0, &opts).unwrap());
    assert_round_trip(&design_passive(&nominal_a(), &cable_b(), &c1(), CABLE_LAMBDA, CABLE_MU, &Default::default()).unwrap());
    assert_round_trip(&cable_design());
}

#[test]
fn corrupted_certificate_fails() {
    let d = design_2dominant(&nominal_a(), &nominal_b(), LAMBDA, &Default::default()).unwrap();
    let mut cert = Certificate::from_design(&d);
    cert.y[0][0] = -cert.y[0][0];
    let chk = cert.verify().unwrap();
    assert!(!chk.passed());
}

#[test]
fn margin_is_sound_for_random_fast_perturbations() {
    let p = params(5.0, 0.4);
    let grid = FreqGrid::default();
    let dmax = dominance_margin(&p, LAMBDA, &grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let pole = LAMBDA * rng.gen_range(1.05..30.0);
        let unit = first_order_perturbation(1.0, pole).unwrap();
        let size = weighted_perturbation_size(&p, LAMBDA, &unit, &grid).unwrap();
        let gain = rng.gen_range(-0.99..0.99) * dmax / size;
        let delta = first_order_perturbation(gain, pole).unwrap();
        assert!(weighted_perturbation_size(&p, LAMBDA, &delta, &grid).unwrap() < dmax);
        assert!(perturbed_certificate(&p, LAMBDA, &delta, &grid).unwrap(), "gain {gain} pole {pole}");
    }
}

#[test]
fn robust_gain_floor() {
    let opts = DesignOptions::default();
    let c2 = row(&[0.0, 1.0, 0.0]);
    let b2 = col(&[0.0, 1.0 / TAU_P, 1.0 / TAU_N]);
    // sup |10 / (s - 40)| on the axis shifted by 50 is 0.25 for the A-only block.
    assert!(design_robust(&nominal_a(), &nominal_b(), &b2, &c2, LAMBDA, 0.2, &opts).is_err());
    let wide = design_robust(&nominal_a(), &nominal_b(), &b2, &c2, LAMBDA, 1e6, &opts);
    assert!(wide.is_ok());
    assert!(design_2dominant(&nominal_a(), &nominal_b(), LAMBDA, &opts).is_ok());
}

#[test]
fn precompensator_cases() {
    let fast = design_precompensator(&row(&[-100.0]), &row(&[100.0]), LAMBDA, None, &Default::default()).unwrap();
    let a = -100.0 + 100.0 * fast.k0[(0, 0)];
    assert!(a < -LAMBDA);
    let slow = design_precompensator(&row(&[-1.0]), &row(&[1.0]), LAMBDA, None, &Default::default()).unwrap();
    assert!(-1.0 + slow.k0[(0, 0)] < -LAMBDA);
    assert!(matches!(
        design_precompensator(&row(&[-1.0]), &row(&[0.0]), LAMBDA, None, &Default::default()),
        Err(mixfeed::Error::UncontrollablePair { .. })
    ));
}
