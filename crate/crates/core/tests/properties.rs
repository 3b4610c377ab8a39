mod common;

use common::props::*;
use mixfeed::lti::C64;
use proptest::prelude::*;

fn check(r: PropResult) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn tanh_saturation_is_bounded_and_slope_restricted(m in 0.1..10.0f64, ys in sample_points()) {
        check(saturation_tanh(m, &ys))?;
    }

    #[test]
    fn table_saturation_is_bounded_and_slope_restricted(steps in table_steps(), ys in sample_points()) {
        check(saturation_table(&steps, &ys))?;
    }

    #[test]
    fn polynomial_roots_are_conjugate_closed(c in polynomial()) {
        check(conjugate_roots(&c))?;
    }

    #[test]
    fn eigenvalues_are_conjugate_closed((n, m) in square_matrix()) {
        check(conjugate_eigenvalues(n, &m))?;
    }

    #[test]
    fn inertia_survives_congruence((n, s, q, t) in congruence_case()) {
        check(inertia_congruence(n, &s, &q, &t))?;
    }

    #[test]
    fn loop_is_linear_in_gain((k, b, tp, tn, tl) in loop_case()) {
        check(gain_linearity(k, b, tp, tn, tl))?;
    }

    #[test]
    fn controller_zero_avoids_pole_interval((tp, tn, b) in zero_case()) {
        check(zero_exclusion(tp, tn, b))?;
    }

    #[test]
    fn extrema_scale_with_gain((c, b, l) in scaling_case()) {
        check(extremum_scaling(c, b, l))?;
    }

    #[test]
    fn recursion_matches_ladder((n, r1, r2, cm, re, im) in cable_case()) {
        check(recursion_ladder(n, r1, r2, cm, C64::new(re, im)))?;
    }
}
