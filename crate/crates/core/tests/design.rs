mod common;

use common::*;
use mixfeed::lmi::{
    design_2dominant, design_passive, design_robust, feasibility, verify_p_gain, verify_passivity, Certificate,
    DesignOptions, VerifyOptions,
};
use mixfeed::lti::{eig_symmetric, shifted_min_real, shifted_sup_mag, FreqGrid, Inertia, StateSpace};
use mixfeed::Error;
use nalgebra::DMatrix;

fn with_instability() -> DesignOptions {
    DesignOptions {
        instability: true,
        ..Default::default()
    }
}

fn closed_ss(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, k: &DMatrix<f64>) -> StateSpace {
    StateSpace::new(a + b * k, b.clone(), c.clone(), DMatrix::zeros(c.nrows(), b.ncols())).unwrap()
}

#[test]
fn repeated_design_is_bit_identical() {
    let (a, b) = (nominal_a(), nominal_b());
    let x = design_2dominant(&a, &b, LAMBDA, &with_instability()).unwrap();
    let y = design_2dominant(&a, &b, LAMBDA, &with_instability()).unwrap();
    assert_eq!(x.y.as_slice(), y.y.as_slice());
    assert_eq!(x.z.as_slice(), y.z.as_slice());
    let ja = serde_json::to_string(&Certificate::from_design(&x)).unwrap();
    let jb = serde_json::to_string(&Certificate::from_design(&y)).unwrap();
    assert_eq!(ja, jb);
}

#[test]
fn storage_and_design_inertia_agree() {
    let (a, b) = (nominal_a(), nominal_b());
    for d in [
        design_2dominant(&a, &b, LAMBDA, &with_instability()).unwrap(),
        cable_design(),
    ] {
        let (_, iy) = eig_symmetric(&d.y, 1e-12).unwrap();
        let (_, ip) = eig_symmetric(d.p(), 1e-12).unwrap();
        assert_eq!(iy, Inertia::new(2, 0, 1));
        assert_eq!(iy, ip);
        assert!(d.eval.p_residuals.iter().all(|r| *r < 0.0), "{:?}", d.eval.p_residuals);
    }
}

#[test]
fn slow_rate_is_a_precondition_failure() {
    let r = design_2dominant(&nominal_a(), &nominal_b(), 5.0, &DesignOptions::default());
    assert!(matches!(r, Err(Error::PreconditionFailed(_))), "{r:?}");
}

#[test]
fn robust_design_meets_its_gain() {
    let (a, b) = (nominal_a(), nominal_b());
    let c2 = row(&[0.0, 1.0, 0.0]);
    let gamma = 5.0;
    let d = design_robust(&a, &b, &b, &c2, LAMBDA, gamma, &with_instability()).unwrap();
    assert_eq!(d.inertia(), Inertia::new(2, 0, 1));
    let g = closed_ss(&a, &b, &c2, d.k());
    let sup = shifted_sup_mag(&g, LAMBDA, &FreqGrid::default()).unwrap().value;
    assert!(sup <= gamma * (1.0 + 1e-4), "sup = {sup}");
}

#[test]
fn loose_robust_gain_still_dominant() {
    let (a, b) = (nominal_a(), nominal_b());
    let c2 = row(&[0.0, 1.0, 0.0]);
    let plain = design_2dominant(&a, &b, LAMBDA, &with_instability()).unwrap();
    let loose = design_robust(&a, &b, &b, &c2, LAMBDA, 1e6, &with_instability()).unwrap();
    assert_eq!(loose.inertia(), plain.inertia());
    assert!(loose.dc_gain().unwrap() < 1.0);
}

#[test]
fn passive_design_meets_shortage() {
    let d = cable_design();
    let g = closed_ss(&nominal_a(), &cable_b(), &c1(), d.k());
    let m = shifted_min_real(&g, CABLE_LAMBDA, &FreqGrid::with_points(20000)).unwrap().value;
    assert!(2.0 * m + CABLE_MU >= -1e-6 * CABLE_MU, "min Re = {m}");
}

#[test]
fn strictly_passive_demand_is_infeasible() {
    let r = design_passive(&nominal_a(), &cable_b(), &c1(), CABLE_LAMBDA, -1.0, &with_instability());
    assert!(
        matches!(r, Err(Error::Infeasible { .. }) | Err(Error::InertiaMismatch { .. })),
        "{r:?}"
    );
}

fn linearization() -> DMatrix<f64> {
    nominal_a() + cable_b() * cable_design().k()
}

fn fine() -> VerifyOptions {
    VerifyOptions {
        epsilon: Some(1e-6),
        ..Default::default()
    }
}

#[test]
fn gain_storage_brackets_the_sweep() {
    let a_bar = linearization();
    let (b, c) = (cable_b(), c1());
    let d = DMatrix::zeros(1, 1);
    let sweep = shifted_sup_mag(&StateSpace::new(a_bar.clone(), b.clone(), c.clone(), d.clone()).unwrap(), 0.0, &FreqGrid::default())
        .unwrap()
        .value;
    let target = Inertia::new(2, 0, 1);
    let verts = [a_bar];
    for gamma in [60.0, 1.05 * sweep] {
        let cert = verify_p_gain(&verts, &b, &c, &d, 0.0, gamma, target, &fine()).unwrap();
        assert_eq!(cert.inertia, target);
        assert!(sweep <= gamma * (1.0 + 1e-4));
    }
    let low = verify_p_gain(&verts, &b, &c, &d, 0.0, 0.9 * sweep, target, &fine());
    assert!(!feasibility(low).unwrap(), "γ below the sweep certified");
}

#[test]
fn cable_passivity_storage() {
    let grid = FreqGrid::default();
    for r2 in [300.0, 600.0] {
        let ss = mixfeed::cable::cable_ss(&cable_params(r2)).unwrap();
        let excess = mixfeed::cable::passivity_excess(&cable_params(r2), CABLE_LAMBDA, &grid).unwrap();
        let target = Inertia::new(0, 0, ss.order());
        let verts = [ss.a.clone()];
        let ok = verify_passivity(&verts, &ss.b, &ss.c, &ss.d, CABLE_LAMBDA, CABLE_MU, 0.0, target, &fine());
        assert!(ok.is_ok(), "R2={r2}: {ok:?}");
        // The storage supply uses 2yu, so the LMI threshold is twice the frequency-domain excess.
        let over = verify_passivity(&verts, &ss.b, &ss.c, &ss.d, CABLE_LAMBDA, 2.5 * excess, 0.0, target, &fine());
        assert!(!feasibility(over).unwrap(), "R2={r2}: α above the excess certified");
    }
}
