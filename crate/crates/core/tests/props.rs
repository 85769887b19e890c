//! Property suites over randomized states and parameters.

use mechsqueeze::analytics;
use mechsqueeze::gaussian::{
    beam_splitter_5050, single_mode_squeezed_vacuum, squeeze_symplectic,
    two_mode_squeezed_vacuum, GaussianState, SqueezingParams,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// A random physical two-mode state: thermal occupations pushed through a
/// product of local squeezers, rotations and beam splitters.
fn arb_two_mode_state() -> impl Strategy<Value = GaussianState> {
    (
        0.0..2.0f64,
        0.0..2.0f64,
        0.0..0.9f64,
        0.0..std::f64::consts::TAU,
        0.0..0.9f64,
        0.0..std::f64::consts::TAU,
        0.0..std::f64::consts::TAU,
        0.0..std::f64::consts::TAU,
        proptest::bool::ANY,
    )
        .prop_map(|(n1, n2, r1, p1, r2, p2, th1, th2, mix)| {
            let base = GaussianState::thermal(&[n1, n2]).unwrap();
            let s1 = squeeze_symplectic(&SqueezingParams::new(r1, p1).unwrap());
            let s2 = squeeze_symplectic(&SqueezingParams::new(r2, p2).unwrap());
            let mut local = DMatrix::zeros(4, 4);
            local.view_mut((0, 0), (2, 2)).copy_from(&s1);
            local.view_mut((2, 2), (2, 2)).copy_from(&s2);
            let rot = mechsqueeze::gaussian::local_rotation_symplectic(&[th1, th2]);
            let mut state = base
                .apply_symplectic(&local)
                .unwrap()
                .apply_symplectic(&rot)
                .unwrap();
            if mix {
                state = beam_splitter_5050(&state).unwrap();
            }
            state
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symplectic_maps_preserve_purity(state in arb_two_mode_state(),
                                       r in 0.0..0.8f64,
                                       phi in 0.0..std::f64::consts::TAU) {
        let before = state.purity().unwrap();
        let p = SqueezingParams::new(r, phi).unwrap();
        let s = mechsqueeze::gaussian::two_mode_squeeze_symplectic(&p);
        let after = state.apply_symplectic(&s).unwrap().purity().unwrap();
        prop_assert!((after - before).abs() <= 1e-10 * before.max(1.0),
                     "purity drift {} -> {}", before, after);
    }

    #[test]
    fn epr_variance_nonnegative_and_min_is_a_lower_bound(
        state in arb_two_mode_state(),
        t1 in 0.0..std::f64::consts::TAU,
        t2 in 0.0..std::f64::consts::TAU,
    ) {
        let v = state.epr_variance(t1, t2).unwrap();
        prop_assert!(v >= 0.0);
        let min = state.epr_min().unwrap();
        prop_assert!(min.value <= v + 1e-9, "min {} above sample {v}", min.value);
    }

    #[test]
    fn heisenberg_bound_holds_after_operations(state in arb_two_mode_state()) {
        prop_assert!(state.heisenberg_margin() >= -1e-9);
        let split = beam_splitter_5050(&state).unwrap();
        prop_assert!(split.heisenberg_margin() >= -1e-9);
        let marginal = split.marginal(&[1]).unwrap();
        prop_assert!(marginal.heisenberg_margin() >= -1e-9);
    }

    #[test]
    fn beam_splitter_is_an_involution(state in arb_two_mode_state()) {
        let twice = beam_splitter_5050(&beam_splitter_5050(&state).unwrap()).unwrap();
        let dmean = (twice.mean() - state.mean()).norm();
        let dcov = (twice.cov() - state.cov()).norm();
        prop_assert!(dmean < 1e-12 && dcov < 1e-12, "involution broke: {dmean} {dcov}");
    }

    #[test]
    fn steady_moment_state_reproduces_epr_formula(
        r in 0.0..1.2f64,
        phi in 0.0..std::f64::consts::TAU,
        d0 in 0.0..1.0f64,
        n_th in 0.0..30.0f64,
    ) {
        // Building the Gaussian state from the closed-form moments and
        // minimizing numerically must land exactly on the closed-form EPR
        // minimum (the identity is algebraic).
        let (occupation, cross) = analytics::steady_moments(r, phi, d0, n_th);
        let state = GaussianState::from_pair_moments(&mechsqueeze::gaussian::PairMoments {
            n1: occupation,
            n2: occupation,
            m1: num_complex::Complex64::new(0.0, 0.0),
            m2: num_complex::Complex64::new(0.0, 0.0),
            cross,
            cross_dag: num_complex::Complex64::new(0.0, 0.0),
        }).unwrap();
        let numeric = state.epr_min().unwrap().value;
        let formula = analytics::epr_min_setup1(r, d0, n_th);
        let scale = formula.abs().max(1.0);
        prop_assert!((numeric - formula).abs() <= 1e-10 * scale,
                     "numeric {numeric} vs formula {formula}");
    }

    #[test]
    fn squeezed_vacua_are_pure_minimum_uncertainty(
        r in 0.0..1.0f64,
        phi in 0.0..std::f64::consts::TAU,
    ) {
        let p = SqueezingParams::new(r, phi).unwrap();
        let one = single_mode_squeezed_vacuum(&p);
        let two = two_mode_squeezed_vacuum(&p);
        prop_assert!((one.purity().unwrap() - 1.0).abs() < 1e-10);
        prop_assert!((two.purity().unwrap() - 1.0).abs() < 1e-10);
        prop_assert!(one.heisenberg_margin().abs() < 1e-9);
    }
}
