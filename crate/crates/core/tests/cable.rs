mod common;

use common::*;
use mixfeed::cable::{
    cable_admittance, cable_ss, interconnect, passivity_excess, resistive_ladder_conductance, CableParams,
};
use mixfeed::lti::{eig_general, log_space, C64};
use mixfeed::simulation::{integrate, IntegratorOptions, Reference};
use nalgebra::DVector;

fn shifted_points(lambda: f64) -> Vec<C64> {
    let mut w = vec![0.0];
    w.extend(log_space(1e-3, 1e6, 4000));
    w.into_iter().map(|w| C64::new(-lambda, w)).collect()
}

#[test]
fn admittance_is_positive_real_below_the_rate_limit() {
    for r2 in CABLE_R2 {
        for n in [1, 5, 15] {
            let p = CableParams::new(n, 100.0, r2, 1e-4).unwrap();
            for lambda in [0.0, 5.0, 15.0] {
                assert!(lambda < p.passivity_rate_limit());
                for s in shifted_points(lambda) {
                    let g = cable_admittance(&p, s).unwrap();
                    assert!(g.re >= 0.0, "n={n} R2={r2} λ={lambda} s={s}: Re G = {}", g.re);
                    assert!(g.norm() <= (1.0 + 1e-12) / p.r1, "n={n} R2={r2} λ={lambda} s={s}: |G| = {}", g.norm());
                }
            }
        }
    }
}

#[test]
fn excess_bounds_the_admittance_magnitude() {
    // Re 1/G tends to R1 at high frequency, so the excess cannot exceed it.
    for r2 in CABLE_R2 {
        let p = cable_params(r2);
        let a = passivity_excess(&p, CABLE_LAMBDA, &mixfeed::lti::FreqGrid::default()).unwrap();
        assert!(a >= 30.0 && a <= p.r1 * (1.0 + 1e-9), "R2={r2}: α = {a}");
    }
}

#[test]
fn dc_gain_matches_resistor_network() {
    for n in [1, 2, 7, 15] {
        for r2 in CABLE_R2 {
            let p = CableParams::new(n, 100.0, r2, 1e-4).unwrap();
            let dc = cable_ss(&p).unwrap().dc_gain().unwrap()[(0, 0)];
            let want = resistive_ladder_conductance(&p);
            assert!((dc - want).abs() <= 1e-12 * want, "n={n} R2={r2}: {dc} vs {want}");
            let rec = cable_admittance(&p, C64::new(0.0, 0.0)).unwrap();
            assert!((rec.re - want).abs() <= 1e-12 * want && rec.im == 0.0);
        }
    }
}

#[test]
fn ladder_modes_are_real_and_stable() {
    for n in [1, 5, 15, 20] {
        let p = CableParams::new(n, 100.0, 400.0, 1e-4).unwrap();
        let a = cable_ss(&p).unwrap().a;
        let scale = a.amax();
        for e in eig_general(&a).unwrap() {
            assert!(e.re < 0.0 && e.im.abs() <= 1e-9 * scale, "n={n}: {e}");
        }
    }
}

#[test]
fn disconnected_cable_leaves_the_oscillator_unchanged() {
    // A single segment behind a huge series resistance draws no current.
    let d = cable_design();
    let osc = closed_loop(&nominal_a(), &cable_b(), d.k());
    let far = CableParams::new(1, 1e12, 400.0, 1e-4).unwrap();
    let joined = interconnect(&osc, &cable_ss(&far).unwrap()).unwrap();
    let top = joined.system.a.view((0, 0), (3, 3)).clone_owned();
    assert!((&top - &osc.a).amax() <= 1e-7, "{top} vs {}", osc.a);
    let opts = IntegratorOptions {
        output_dt: Some(0.01),
        h_max: Some(joined.step_bound),
        ..Default::default()
    };
    let a = integrate(&osc, &x0_kick(3), &Reference::constant(0.0), 5.0, &opts).unwrap();
    let b = integrate(&joined.system, &x0_kick(4), &Reference::constant(0.0), 5.0, &opts).unwrap();
    assert_eq!(a.t, b.t);
    let worst = a
        .x
        .iter()
        .zip(&b.x)
        .flat_map(|(p, q)| (0..3).map(move |i| (p[i] - q[i]).abs()))
        .fold(0.0_f64, f64::max);
    assert!(worst <= 1e-5, "oscillator states differ by {worst:e}");
}

#[test]
fn node_voltages_expose_the_port_and_ladder() {
    let d = cable_design();
    let sys = cable_system(&d, 400.0);
    assert_eq!(sys.system.order(), 3 + 15);
    let x: Vec<f64> = (0..18).map(|i| i as f64).collect();
    let v = sys.node_voltages(&x);
    assert_eq!(v.len(), 16);
    assert_eq!(v[0], 0.0);
    assert_eq!(&v[1..], &x[3..]);
    let state = DVector::from_vec(x);
    assert_eq!(sys.system.output(&state), v[0]);
}
