//! The validation campaign: every closed-form identity, oracle comparison and
//! property suite, each reduced to a measured error against a pinned
//! tolerance. The acceptance tests assert exactly these checks.

use mechsqueeze::analytics;
use mechsqueeze::dynamics::{
    build_rwa_model, evolve, stability_eigenvalues, steady_state, CouplingProfile,
};
use mechsqueeze::fock::{self, DensityOperator, FockConfig};
use mechsqueeze::gaussian::{
    beam_splitter_5050, local_rotation_symplectic, single_mode_squeezed_vacuum, squeeze_symplectic,
    two_mode_squeezed_vacuum, GaussianState, PairMoments, SqueezingParams,
};
use mechsqueeze::meanfield;
use mechsqueeze::protocols::{
    run_setup1, run_setup1_full, run_setup2, setup1_params, setup2_params, ProtocolError,
    TwoStepSchedule,
};
use num_complex::Complex64;

/// Which subset of checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationLevel {
    /// Completes in well under a minute.
    Fast,
    /// Everything, including the rotating-wave ladder and the full Fock
    /// campaign.
    Full,
}

/// One validation check: a measured error against a pinned tolerance.
#[derive(Debug, Clone)]
pub struct Check {
    /// Stable identifier.
    pub name: &'static str,
    /// Acceptance criterion this check belongs to, when applicable.
    pub criterion: Option<u8>,
    /// Measured error (exact semantics per check; infinity on hard failure).
    pub measured: f64,
    /// Pinned tolerance.
    pub tolerance: f64,
    /// `measured <= tolerance` and finite.
    pub passed: bool,
    /// Extra context for the report.
    pub detail: String,
}

fn check(
    name: &'static str,
    criterion: Option<u8>,
    measured: f64,
    tolerance: f64,
    detail: String,
) -> Check {
    Check {
        name,
        criterion,
        measured,
        tolerance,
        passed: measured.is_finite() && measured <= tolerance,
        detail,
    }
}

fn broken(name: &'static str, criterion: Option<u8>, tolerance: f64, err: impl ToString) -> Check {
    Check {
        name,
        criterion,
        measured: f64::INFINITY,
        tolerance,
        passed: false,
        detail: err.to_string(),
    }
}

const KAPPA: f64 = 0.05;
const GAMMA: f64 = 1e-4;
const CHI1: f64 = 0.01;
const CHI2: f64 = 0.03;

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1).max(1) as f64)
        .collect()
}

/// Builds the mechanical pair state from simulated subsystem states.
fn pair_of(sub1: &GaussianState, sub2: &GaussianState) -> Result<GaussianState, ProtocolError> {
    let b1 = sub1.marginal(&[1]).map_err(ProtocolError::from)?;
    let b2 = sub2.marginal(&[1]).map_err(ProtocolError::from)?;
    beam_splitter_5050(&b1.tensor(&b2)).map_err(ProtocolError::from)
}

/// Steady EPR minimum of setup I at given thermal occupation, via the exact
/// Lyapunov solve of both subsystems.
fn steady_epr_setup1(n_th: f64) -> Result<f64, ProtocolError> {
    let p1 = CouplingProfile::new(CHI1, CHI2, 2.0, 0.0).map_err(ProtocolError::from)?;
    let p2 = CouplingProfile::new(CHI1, CHI2, 2.0, core::f64::consts::PI)
        .map_err(ProtocolError::from)?;
    let s1 = steady_state(&build_rwa_model(&p1, KAPPA, GAMMA, n_th)?)?;
    let s2 = steady_state(&build_rwa_model(&p2, KAPPA, GAMMA, n_th)?)?;
    Ok(pair_of(&s1, &s2)?.epr_min().map_err(ProtocolError::from)?.value)
}

/// Exact algebraic identity: the Gaussian state built from the closed-form
/// steady moments minimizes to exactly the closed-form EPR value, over a
/// 10 x 10 x 5 grid of (r, d0, n_th).
pub fn check_identity_moments_epr() -> Check {
    const NAME: &str = "identity: steady moments vs EPR formula";
    let mut worst = 0.0f64;
    for r in linspace(0.02, 1.2, 10) {
        for d0 in linspace(0.001, 0.999, 10) {
            for n_th in [0.0, 0.5, 2.0, 10.0, 40.0] {
                let (occupation, cross) = analytics::steady_moments(r, 0.7, d0, n_th);
                let state = match GaussianState::from_pair_moments(&PairMoments {
                    n1: occupation,
                    n2: occupation,
                    m1: Complex64::new(0.0, 0.0),
                    m2: Complex64::new(0.0, 0.0),
                    cross,
                    cross_dag: Complex64::new(0.0, 0.0),
                }) {
                    Ok(s) => s,
                    Err(e) => return broken(NAME, Some(11), 1e-12, e),
                };
                let numeric = match state.epr_min() {
                    Ok(m) => m.value,
                    Err(e) => return broken(NAME, Some(11), 1e-12, e),
                };
                let formula = analytics::epr_min_setup1(r, d0, n_th);
                worst = worst.max((numeric - formula).abs() / formula.abs().max(1.0));
            }
        }
    }
    check(NAME, Some(11), worst, 1e-12, String::new())
}

/// Threshold consistency: plugging `n_th,max` back into the EPR formulas
/// gives exactly 2, for both setups.
pub fn check_threshold_consistency() -> Check {
    const NAME: &str = "identity: EPR threshold consistency";
    let mut worst = 0.0f64;
    for r in linspace(0.05, 1.0, 8) {
        for d0 in linspace(0.001, 0.95, 8) {
            let nmax = match analytics::nth_max_setup1(r, d0) {
                Ok(v) => v,
                Err(e) => return broken(NAME, Some(11), 1e-12, e),
            };
            worst = worst.max((analytics::epr_min_setup1(r, d0, nmax) - 2.0).abs());
            let s2 = analytics::setup2_thermal(r, 0.0, d0, 0.0);
            let at_max = analytics::setup2_thermal(r, 0.0, d0, s2.nth_max);
            worst = worst.max((at_max.epr_min_inf - 2.0).abs());
        }
    }
    check(NAME, Some(11), worst, 1e-12, String::new())
}

/// Monotonicity of the EPR formula in `n_th` and `d0`.
pub fn check_monotonicity() -> Check {
    const NAME: &str = "property: EPR monotone in n_th and d0";
    let mut worst_violation = 0.0f64;
    for r in [0.1, 0.35, 0.8] {
        for d0 in [1e-3, 0.1, 0.6] {
            let mut prev = f64::NEG_INFINITY;
            for n in linspace(0.0, 60.0, 20) {
                let v = analytics::epr_min_setup1(r, d0, n);
                worst_violation = worst_violation.max(prev - v);
                prev = v;
            }
        }
        for n in [0.0, 1.0, 10.0] {
            let mut prev = f64::NEG_INFINITY;
            for d0 in linspace(1e-4, 1.0, 20) {
                let v = analytics::epr_min_setup1(r, d0, n);
                worst_violation = worst_violation.max(prev - v);
                prev = v;
            }
        }
    }
    check(NAME, None, worst_violation, 0.0, String::new())
}

/// Weak-damping approximations track the exact formulas within 2% at the
/// operating point.
pub fn check_weak_damping_approximations() -> Check {
    const NAME: &str = "approx: d0 and n_th,max within 2%";
    let g = match analytics::transfer_rate(CHI1, CHI2) {
        Ok(v) => v,
        Err(e) => return broken(NAME, None, 0.02, e),
    };
    let exact_d0 = analytics::d0(KAPPA, GAMMA, g).unwrap_or(f64::NAN);
    let approx_d0 = analytics::d0_approx(KAPPA, GAMMA, g).unwrap_or(f64::NAN);
    let r = analytics::squeeze_param(CHI1, CHI2).unwrap_or(f64::NAN);
    let exact_n = analytics::nth_max_setup1(r, exact_d0).unwrap_or(f64::NAN);
    let approx_n = analytics::nth_max_setup1_approx(KAPPA, GAMMA, CHI1, CHI2).unwrap_or(f64::NAN);
    let measured = ((exact_d0 - approx_d0) / exact_d0)
        .abs()
        .max(((exact_n - approx_n) / exact_n).abs());
    check(
        NAME,
        None,
        measured,
        0.02,
        format!("d0 {exact_d0:.4e}/{approx_d0:.4e}, n_max {exact_n:.2}/{approx_n:.2}"),
    )
}

/// Time integration of the moment equations lands on the Lyapunov solution.
pub fn check_lyapunov_vs_evolve() -> Check {
    const NAME: &str = "dynamics: evolve converges to Lyapunov steady state";
    let run = || -> Result<f64, ProtocolError> {
        let profile = CouplingProfile::new(CHI1, CHI2, 2.0, 0.4)?;
        let model = build_rwa_model(&profile, KAPPA, GAMMA, 1.0)?;
        let ss = steady_state(&model)?;
        let slowest = stability_eigenvalues(&model)?
            .iter()
            .map(|e| e.re.abs())
            .fold(f64::INFINITY, f64::min);
        let t_end = 20.0 / slowest;
        let init = GaussianState::vacuum(1)
            .map_err(ProtocolError::from)?
            .tensor(&GaussianState::thermal(&[1.0]).map_err(ProtocolError::from)?);
        let traj = evolve(&model, &init, (0.0, t_end), &[t_end])?;
        Ok((traj.states[0].cov() - ss.cov())
            .iter()
            .fold(0.0f64, |a, &v| a.max(v.abs())))
    };
    match run() {
        Ok(m) => check(NAME, None, m, 1e-7, String::new()),
        Err(e) => broken(NAME, None, 1e-7, e),
    }
}

/// The Lyapunov steady state reproduces the closed-form moments to numerical
/// precision at one operating point.
pub fn check_closed_form_point() -> Check {
    const NAME: &str = "identity: Lyapunov matches closed-form moments";
    let run = || -> Result<f64, ProtocolError> {
        let phi = 0.9;
        let n_th = 3.0;
        let profile = CouplingProfile::new(CHI1, CHI2, 2.0, phi)?;
        let ss = steady_state(&build_rwa_model(&profile, KAPPA, GAMMA, n_th)?)?;
        let (n_b, m_b) = ss.mode_moments(1).map_err(ProtocolError::from)?;
        let r = analytics::squeeze_param(CHI1, CHI2)?;
        let g = analytics::transfer_rate(CHI1, CHI2)?;
        let d0 = analytics::d0(KAPPA, GAMMA, g)?;
        let (n_pred, m_pred) = analytics::steady_moments(r, phi, d0, n_th);
        Ok(((n_b - n_pred) / n_pred)
            .abs()
            .max((m_b - m_pred).norm() / m_pred.norm()))
    };
    match run() {
        Ok(m) => check(NAME, None, m, 1e-11, String::new()),
        Err(e) => broken(NAME, None, 1e-11, e),
    }
}

/// Criterion 2: simulated steady moments and EPR match the closed forms over
/// a grid of squeeze ratios and thermal occupations, at 1e-6 relative.
pub fn check_steady_identity_grid(n_ratio: usize, n_thermal: usize) -> Check {
    const NAME: &str = "criterion 2: steady moments and EPR match closed forms";
    let run = || -> Result<f64, ProtocolError> {
        let mut worst = 0.0f64;
        for ratio in linspace(0.1, 0.8, n_ratio) {
            for n_th in linspace(0.0, 50.0, n_thermal) {
                let chi1 = ratio * CHI2;
                let params = setup1_params(chi1, CHI2, KAPPA, GAMMA, n_th, 0.0)?;
                let res = run_setup1(&params, 2200.0, 8)?;
                let p = &res.prediction;
                let occ = res.occupations.last().unwrap();
                let cross = res.cross_moments.last().unwrap();
                worst = worst.max(((occ.0 - p.occupation) / p.occupation).abs());
                worst = worst.max(((occ.1 - p.occupation) / p.occupation).abs());
                worst = worst.max((cross - p.cross).norm() / p.cross.norm());
                worst = worst.max(((res.final_epr.value - p.epr_min) / p.epr_min).abs());
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(m) => check(NAME, Some(2), m, 1e-6, format!("{n_ratio}x{n_thermal} grid")),
        Err(e) => broken(NAME, Some(2), 1e-6, e),
    }
}

/// Criterion 7: truncated-Fock steady moments against the Gaussian engine.
pub fn check_fock_vs_gaussian(full: bool) -> Check {
    const NAME: &str = "criterion 7: Fock oracle matches Gaussian engine";
    let cases: &[(f64, f64)] = if full {
        &[(0.0, 0.0), (1e-4, 0.0), (1e-4, 1.0)]
    } else {
        &[(0.0, 0.0)]
    };
    let run = || -> Result<f64, String> {
        let profile = CouplingProfile::new(CHI1, CHI2, 2.0, 0.0).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for &(gamma, n_th) in cases {
            let cfg = FockConfig {
                dim_cavity: 12,
                dim_mech: 12,
                rtol: 1e-8,
                atol: 1e-10,
                t_end: if full { 600.0 } else { 400.0 },
            };
            let rho0 = DensityOperator::vacuum(&cfg).map_err(|e| e.to_string())?;
            let rho = fock::evolve_dm(&profile, KAPPA, gamma, n_th, &cfg, &rho0)
                .map_err(|e| e.to_string())?;
            let state = fock::moments_from_dm(&rho).map_err(|e| e.to_string())?;
            let lyap = steady_state(&build_rwa_model(&profile, KAPPA, gamma, n_th).unwrap())
                .map_err(|e| e.to_string())?;
            for i in 0..4 {
                worst = worst.max((state.mean()[i] - lyap.mean()[i]).abs());
                for j in 0..4 {
                    worst = worst.max((state.cov()[(i, j)] - lyap.cov()[(i, j)]).abs());
                }
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(m) => check(
            NAME,
            Some(7),
            m,
            1e-3,
            format!("{} parameter set(s)", cases.len()),
        ),
        Err(e) => broken(NAME, Some(7), 1e-3, e),
    }
}

/// Criterion 7: the truncation-convergence gate at N = 12 vs 16.
pub fn check_fock_convergence() -> Check {
    const NAME: &str = "criterion 7: Fock truncation converged (12 vs 16)";
    let profile = match CouplingProfile::new(CHI1, CHI2, 2.0, 0.0) {
        Ok(p) => p,
        Err(e) => return broken(NAME, Some(7), 1e-4, e),
    };
    let cfg = FockConfig {
        dim_cavity: 12,
        dim_mech: 12,
        rtol: 1e-8,
        atol: 1e-10,
        t_end: 300.0,
    };
    match fock::convergence_check(&profile, KAPPA, 0.0, 0.0, &cfg) {
        Ok(report) => {
            let measured = report.max_moment_diff.unwrap_or(f64::INFINITY);
            check(
                NAME,
                Some(7),
                measured,
                1e-4,
                format!("leak = {}", report.truncation_leak),
            )
        }
        Err(e) => broken(NAME, Some(7), 1e-4, e),
    }
}

/// Criterion 6: mean-field perturbation theory at the quoted pump strengths.
pub fn check_meanfield_perturbation() -> Check {
    const NAME: &str = "criterion 6: mean-field tones match perturbation theory";
    let run = || -> Result<(f64, String), String> {
        let phases = meanfield::phase_conditions(KAPPA, 1.0, 0.0).map_err(|e| e.to_string())?;
        let drive = mechsqueeze::dynamics::DriveSpec::new(1e4, 1e4, 2.0, phases.phi11, phases.phi12)
            .map_err(|e| e.to_string())?;
        let params = mechsqueeze::dynamics::SystemParams {
            omega_m: 1.0,
            kappa: KAPPA,
            gamma_m: 1e-6,
            n_th: 0.0,
            g: 1e-6,
            pump: vec![drive],
            j12: 0.0,
            delta: 1.0,
        };
        let traj = meanfield::integrate_meanfield(&params, 400.0, 4000).map_err(|e| e.to_string())?;
        let start = 3 * traj.times.len() / 4;
        let s2 = KAPPA * KAPPA + 1.0;
        let s = s2.sqrt();

        // Fitted alpha tone amplitudes against E_k / sqrt(kappa^2 + omega_m^2).
        let fit = meanfield::fit_tones(&traj.times[start..], &traj.alpha[0][start..], 2.0)
            .map_err(|e| e.to_string())?;
        let expect = 1e4 / s;
        let mut worst = ((fit.dc.norm() - expect) / expect).abs();
        worst = worst.max(((fit.minus.norm() - expect) / expect).abs());

        // |alpha^(2)| ~ O(1) << |alpha^(0)| ~ 1e4.
        let sol = meanfield::perturbative_solution(&params, 0, 350.0).map_err(|e| e.to_string())?;
        let a2 = sol.alpha2.norm();
        let a0 = sol.alpha0.norm();
        if !(0.05..=20.0).contains(&a2) || a0 < 1e3 {
            return Err(format!("perturbative magnitudes off: |a2| = {a2}, |a0| = {a0}"));
        }

        // beta DC term against the closed form, ringing tone included in the
        // fit basis.
        let coeffs = meanfield::fit_frequencies(
            &traj.times[start..],
            &traj.beta[0][start..],
            &[0.0, -2.0, 2.0, -4.0, 4.0, -1.0, 1.0],
        )
        .map_err(|e| e.to_string())?;
        let dc_pred = -params.g * 2e8 / s2;
        worst = worst.max(((coeffs[0].re - dc_pred) / dc_pred).abs());
        Ok((worst, format!("|a2| = {a2:.2}, |a0| = {a0:.0}")))
    };
    match run() {
        Ok((m, detail)) => check(NAME, Some(6), m, 1e-3, detail),
        Err(e) => broken(NAME, Some(6), 1e-3, e),
    }
}

/// Criterion 11: Heisenberg bound margin after a battery of operations.
pub fn check_heisenberg_after_operations() -> Check {
    const NAME: &str = "property: Heisenberg bound after every operation";
    let run = || -> Result<f64, String> {
        let mut worst = 0.0f64;
        let mut track = |s: &GaussianState| {
            worst = worst.max(-s.heisenberg_margin());
        };
        let p = SqueezingParams::new(0.7, 1.3).map_err(|e| e.to_string())?;
        let tmsv = two_mode_squeezed_vacuum(&p);
        track(&tmsv);
        let split = beam_splitter_5050(&tmsv).map_err(|e| e.to_string())?;
        track(&split);
        let rot = split
            .apply_symplectic(&local_rotation_symplectic(&[0.4, 2.2]))
            .map_err(|e| e.to_string())?;
        track(&rot);
        track(&rot.marginal(&[0]).map_err(|e| e.to_string())?);
        track(&single_mode_squeezed_vacuum(&p));
        // Along a lab-frame trajectory.
        let profile = CouplingProfile::new(CHI1, CHI2, 2.0, 0.0).map_err(|e| e.to_string())?;
        let model = mechsqueeze::dynamics::build_full_model(&profile, 1.0, 1.0, KAPPA, GAMMA, 2.0)
            .map_err(|e| e.to_string())?;
        let init = GaussianState::vacuum(1)
            .map_err(|e| e.to_string())?
            .tensor(&GaussianState::thermal(&[2.0]).map_err(|e| e.to_string())?);
        let grid: Vec<f64> = (1..=20).map(|i| 10.0 * i as f64).collect();
        let traj = evolve(&model, &init, (0.0, 200.0), &grid).map_err(|e| e.to_string())?;
        for s in &traj.states {
            track(s);
        }
        Ok(worst)
    };
    match run() {
        Ok(m) => check(NAME, Some(11), m.max(0.0), 1e-9, String::new()),
        Err(e) => broken(NAME, Some(11), 1e-9, e),
    }
}

/// Criterion 11: symplectic maps preserve purity.
pub fn check_symplectic_purity() -> Check {
    const NAME: &str = "property: symplectic maps preserve purity";
    let run = || -> Result<f64, String> {
        let mut worst = 0.0f64;
        for (n1, n2, r, phi) in [
            (0.0, 0.0, 0.5, 0.0),
            (1.0, 0.3, 0.8, 1.1),
            (3.0, 0.0, 0.2, 2.7),
            (0.2, 5.0, 1.1, 4.0),
        ] {
            let state = GaussianState::thermal(&[n1, n2]).map_err(|e| e.to_string())?;
            let before = state.purity().map_err(|e| e.to_string())?;
            let p = SqueezingParams::new(r, phi).map_err(|e| e.to_string())?;
            let mut local = nalgebra::DMatrix::identity(4, 4);
            local
                .view_mut((0, 0), (2, 2))
                .copy_from(&squeeze_symplectic(&p));
            let after = state
                .apply_symplectic(&local)
                .and_then(|s| beam_splitter_5050(&s))
                .and_then(|s| s.apply_symplectic(&local_rotation_symplectic(&[0.9, 5.1])))
                .map_err(|e| e.to_string())?
                .purity()
                .map_err(|e| e.to_string())?;
            worst = worst.max((after - before).abs() / before);
        }
        Ok(worst)
    };
    match run() {
        Ok(m) => check(NAME, Some(11), m, 1e-10, String::new()),
        Err(e) => broken(NAME, Some(11), 1e-10, e),
    }
}

/// Criterion 11: the 50:50 beam splitter is an involution.
pub fn check_beam_splitter_involution() -> Check {
    const NAME: &str = "property: beam splitter involution";
    let run = || -> Result<f64, String> {
        let mut worst = 0.0f64;
        for (r, phi) in [(0.3, 0.0), (0.9, 2.0), (0.0, 0.0)] {
            let p = SqueezingParams::new(r, phi).map_err(|e| e.to_string())?;
            let state = two_mode_squeezed_vacuum(&p);
            let twice = beam_splitter_5050(&beam_splitter_5050(&state).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            worst = worst.max((twice.cov() - state.cov()).norm());
            worst = worst.max((twice.mean() - state.mean()).norm());
        }
        Ok(worst)
    };
    match run() {
        Ok(m) => check(NAME, Some(11), m, 1e-12, String::new()),
        Err(e) => broken(NAME, Some(11), 1e-12, e),
    }
}

/// Criterion 1: the pure two-mode squeezed vacuum of setup I.
pub fn check_setup1_pure() -> Check {
    const NAME: &str = "criterion 1: setup I reaches the pure TMSV";
    let run = || -> Result<f64, ProtocolError> {
        let params = setup1_params(CHI1, CHI2, KAPPA, 0.0, 0.0, 0.0)?;
        let res = run_setup1(&params, 800.0, 100)?;
        let epr_dev = (res.final_epr.value - 1.0).abs();
        let purity_dev = (res.purities.last().unwrap() - 1.0).abs();
        Ok(epr_dev.max(purity_dev))
    };
    match run() {
        Ok(m) => check(NAME, Some(1), m, 1e-6, String::new()),
        Err(e) => broken(NAME, Some(1), 1e-6, e),
    }
}

/// Criterion 4: without cavity dissipation the pair only thermalizes.
pub fn check_kappa_zero_control() -> Check {
    const NAME: &str = "criterion 4: kappa = 0 leaves the thermal state";
    let run = || -> Result<f64, ProtocolError> {
        let mut worst = 0.0f64;
        for n_th in [0.5, 3.0] {
            let params = setup1_params(CHI1, CHI2, 0.0, 0.02, n_th, 0.0)?;
            let res = run_setup1(&params, 3200.0, 40)?;
            let expect = 4.0 * n_th + 2.0;
            worst = worst.max(((res.final_epr.value - expect) / expect).abs());
            if res.final_epr.value < 2.0 {
                return Ok(f64::INFINITY);
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(m) => check(NAME, Some(4), m, 1e-6, String::new()),
        Err(e) => broken(NAME, Some(4), 1e-6, e),
    }
}

/// Criterion 10: any configuration with `chi1 >= chi2` is rejected before
/// simulation with a stability error.
pub fn check_stability_gate() -> Check {
    const NAME: &str = "criterion 10: chi1 >= chi2 rejected before simulation";
    let mut rejected = 0usize;
    let mut attempts = 0usize;
    for (c1, c2) in [(0.03, 0.01), (0.03, 0.03), (0.010000001, 0.01)] {
        attempts += 1;
        if let Ok(params) = setup1_params(c1, c2, KAPPA, 0.0, 0.0, 0.0) {
            if matches!(
                run_setup1(&params, 10.0, 2),
                Err(ProtocolError::Unstable { .. })
            ) {
                rejected += 1;
            }
        }
        attempts += 1;
        if matches!(
            analytics::squeeze_param(c1, c2),
            Err(analytics::AnalyticsError::StabilityViolated { .. })
        ) {
            rejected += 1;
        }
    }
    // Setup II path.
    attempts += 1;
    let gate2 = (|| -> Result<bool, ProtocolError> {
        let (mut params, _, _) = setup2_params(0.03, 0.01, KAPPA, 0.0, 0.0, 10.0)?;
        let e = 0.03 * (KAPPA * KAPPA + 1.0).sqrt() / params.g;
        let schedule =
            TwoStepSchedule::standard(KAPPA, 1.0, 10.0, e, e / 3.0, 0.0, 240.0)?;
        params.pump = vec![schedule.step1.drive];
        Ok(matches!(
            run_setup2(&params, &schedule, 480.0, 10),
            Err(ProtocolError::Unstable { .. })
        ))
    })();
    if matches!(gate2, Ok(true)) {
        rejected += 1;
    }
    check(
        NAME,
        Some(10),
        (attempts - rejected) as f64,
        0.0,
        format!("{rejected}/{attempts} rejected"),
    )
}

/// Criterion 3: the simulated squeezing-loss threshold sits near 70 thermal
/// phonons; measured is the distance of root/exact/approx outside [68, 72].
pub fn check_thermal_threshold_near_seventy() -> Check {
    const NAME: &str = "criterion 3: n_th,max root in [68, 72]";
    let run = || -> Result<(f64, String), ProtocolError> {
        let mut lo = 10.0f64;
        let mut hi = 150.0;
        let f = |n: f64| steady_epr_setup1(n).map(|e| e - 2.0);
        if f(lo)? > 0.0 || f(hi)? < 0.0 {
            return Ok((f64::INFINITY, String::from("no bracketing interval")));
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if f(mid)? > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        let r = analytics::squeeze_param(CHI1, CHI2)?;
        let g = analytics::transfer_rate(CHI1, CHI2)?;
        let d0 = analytics::d0(KAPPA, GAMMA, g)?;
        let exact = analytics::nth_max_setup1(r, d0)?;
        let approx = analytics::nth_max_setup1_approx(KAPPA, GAMMA, CHI1, CHI2)?;
        let outside = |v: f64| (68.0 - v).max(v - 72.0).max(0.0);
        let measured = outside(root).max(outside(exact)).max(outside(approx));
        Ok((
            measured,
            format!("root {root:.2}, exact {exact:.2}, approx {approx:.2}"),
        ))
    };
    match run() {
        Ok((m, detail)) => check(NAME, Some(3), m, 0.0, detail),
        Err(e) => broken(NAME, Some(3), 0.0, e),
    }
}

fn ladder_discrepancies() -> Result<Vec<f64>, ProtocolError> {
    let mut out = Vec::new();
    for (scale, t_end) in [(1.0, 1000.0), (1.0 / 3.0, 3000.0), (0.1, 10000.0)] {
        let params = setup1_params(
            CHI1 * scale,
            CHI2 * scale,
            KAPPA * scale,
            0.0,
            0.0,
            0.0,
        )?;
        let res = run_setup1_full(&params, t_end, 25)?;
        let avg = res.epr_min_period_avg.expect("full run reports the average");
        let rwa = res.rwa_reference_epr.expect("full run reports the reference");
        out.push((avg - rwa).abs() / rwa);
    }
    Ok(out)
}

/// Criterion 5, agreement part: the lab-frame run at `omega_m/chi2 ~ 33`
/// matches the rotating-frame steady EPR within 5%.
pub fn check_rwa_agreement() -> Check {
    const NAME: &str = "criterion 5: lab frame within 5% of rotating frame";
    match ladder_discrepancies() {
        Ok(d) => check(
            NAME,
            Some(5),
            d[0],
            0.05,
            format!("ladder {:.3e} / {:.3e} / {:.3e}", d[0], d[1], d[2]),
        ),
        Err(e) => broken(NAME, Some(5), 0.05, e),
    }
}

/// Criterion 5, convergence part: the discrepancy decreases monotonically as
/// `omega_m/chi2` grows over the x1, x3, x10 ladder.
pub fn check_rwa_ladder_monotone() -> Check {
    const NAME: &str = "criterion 5: discrepancy decreases along the ladder";
    match ladder_discrepancies() {
        Ok(d) => {
            let worst = (d[1] - d[0]).max(d[2] - d[1]);
            check(
                NAME,
                Some(5),
                worst,
                0.0,
                format!("{:.3e} -> {:.3e} -> {:.3e}", d[0], d[1], d[2]),
            )
        }
        Err(e) => broken(NAME, Some(5), 0.0, e),
    }
}

fn setup2_standard(
    n_th: f64,
    gamma_m: f64,
    t_switch: f64,
) -> Result<(mechsqueeze::dynamics::SystemParams, TwoStepSchedule), ProtocolError> {
    let j12 = 10.0;
    let (mut params, e1, e2) = setup2_params(CHI1, CHI2, KAPPA, gamma_m, n_th, j12)?;
    let schedule = TwoStepSchedule::standard(KAPPA, 1.0, j12, e1, e2, 0.0, t_switch)?;
    params.pump = vec![schedule.step1.drive];
    Ok((params, schedule))
}

/// Criterion 8, final-state part: after the two-step schedule the pair EPR
/// sits within 1% of `2 e^{-2r}`.
pub fn check_setup2_two_step_epr() -> Check {
    const NAME: &str = "criterion 8: setup II two-step EPR within 1%";
    let run = || -> Result<f64, ProtocolError> {
        let (params, schedule) = setup2_standard(0.0, 0.0, 240.0)?;
        let res = run_setup2(&params, &schedule, 480.0, 60)?;
        Ok((res.final_epr.value - 1.0).abs())
    };
    match run() {
        Ok(m) => check(NAME, Some(8), m, 0.01, String::from("t_switch = 3 t_min")),
        Err(e) => broken(NAME, Some(8), 0.01, e),
    }
}

/// Criterion 8, intermediate part: after step 1 only, normal mode `b1`
/// carries squeeze parameter `atanh(chi1/chi2)` within 1%.
pub fn check_setup2_step_one_squeeze() -> Check {
    const NAME: &str = "criterion 8: step 1 squeezes b1 to atanh(chi1/chi2)";
    let run = || -> Result<f64, ProtocolError> {
        let (params, mut schedule) = setup2_standard(0.0, 0.0, 240.0)?;
        schedule.t_switch = 1e9; // single step
        let res = run_setup2(&params, &schedule, 240.0, 30)?;
        let (r1, _) = *res
            .normal_mode_squeeze
            .as_ref()
            .expect("setup II reports normal modes")
            .last()
            .unwrap();
        let target = (CHI1 / CHI2).atanh();
        Ok(((r1 - target) / target).abs())
    };
    match run() {
        Ok(m) => check(NAME, Some(8), m, 0.01, String::new()),
        Err(e) => broken(NAME, Some(8), 0.01, e),
    }
}

/// Criterion 9, steady part: single-step thermal runs match the closed form
/// within 5%.
pub fn check_setup2_thermal_epr() -> Check {
    const NAME: &str = "criterion 9: setup II single-step thermal EPR within 5%";
    let run = || -> Result<f64, ProtocolError> {
        let mut worst = 0.0f64;
        for n_th in [0.1, 0.2] {
            let (params, schedule) = setup2_standard(n_th, 1e-4, 1e9)?;
            let res = run_setup2(&params, &schedule, 1500.0, 50)?;
            let predicted = res.prediction.setup2.epr_min_inf;
            worst = worst.max(((res.final_epr.value - predicted) / predicted).abs());
        }
        Ok(worst)
    };
    match run() {
        Ok(m) => check(NAME, Some(9), m, 0.05, String::new()),
        Err(e) => broken(NAME, Some(9), 0.05, e),
    }
}

/// Criterion 9, threshold part: the simulated squeezing-loss threshold of the
/// single-step protocol matches the closed form within 10%.
pub fn check_setup2_thermal_threshold() -> Check {
    const NAME: &str = "criterion 9: setup II thermal threshold within 10%";
    let run = || -> Result<(f64, String), ProtocolError> {
        let epr_at = |n_th: f64| -> Result<f64, ProtocolError> {
            let (params, schedule) = setup2_standard(n_th, 1e-4, 1e9)?;
            Ok(run_setup2(&params, &schedule, 1500.0, 8)?.final_epr.value)
        };
        let mut lo = 0.05f64;
        let mut hi = 0.6;
        if epr_at(lo)? > 2.0 || epr_at(hi)? < 2.0 {
            return Ok((f64::INFINITY, String::from("no bracketing interval")));
        }
        for _ in 0..10 {
            let mid = 0.5 * (lo + hi);
            if epr_at(mid)? > 2.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        let r = analytics::squeeze_param(CHI1, CHI2)?;
        let g = analytics::transfer_rate(CHI1, CHI2)?;
        let d0 = analytics::d0(KAPPA, GAMMA, g)?;
        let predicted = analytics::setup2_thermal(r, 0.0, d0, 0.0).nth_max;
        Ok((
            ((root - predicted) / predicted).abs(),
            format!("root {root:.4} vs predicted {predicted:.4}"),
        ))
    };
    match run() {
        Ok((m, detail)) => check(NAME, Some(9), m, 0.10, detail),
        Err(e) => broken(NAME, Some(9), 0.10, e),
    }
}

/// The fast campaign: analytic identities, Lyapunov-vs-evolve,
/// Fock-vs-Gaussian, mean-field-vs-perturbative and the property suites.
pub fn fast_checks() -> Vec<Check> {
    vec![
        check_identity_moments_epr(),
        check_threshold_consistency(),
        check_monotonicity(),
        check_weak_damping_approximations(),
        check_lyapunov_vs_evolve(),
        check_closed_form_point(),
        check_steady_identity_grid(2, 2),
        check_fock_vs_gaussian(false),
        check_meanfield_perturbation(),
        check_heisenberg_after_operations(),
        check_symplectic_purity(),
        check_beam_splitter_involution(),
        check_setup1_pure(),
        check_kappa_zero_control(),
        check_stability_gate(),
    ]
}

/// The full campaign: the fast set plus the rotating-wave ladder, the full
/// steady-identity grid, both setup II criteria, the complete Fock campaign
/// and the thermal-threshold scans.
pub fn full_checks() -> Vec<Check> {
    let mut checks = fast_checks();
    checks.push(check_steady_identity_grid(5, 5));
    checks.push(check_rwa_agreement());
    checks.push(check_rwa_ladder_monotone());
    checks.push(check_setup2_two_step_epr());
    checks.push(check_setup2_step_one_squeeze());
    checks.push(check_setup2_thermal_epr());
    checks.push(check_setup2_thermal_threshold());
    checks.push(check_fock_vs_gaussian(true));
    checks.push(check_fock_convergence());
    checks.push(check_thermal_threshold_near_seventy());
    checks
}

/// Runs the campaign at the requested level.
pub fn run_checks(level: ValidationLevel) -> Vec<Check> {
    match level {
        ValidationLevel::Fast => fast_checks(),
        ValidationLevel::Full => full_checks(),
    }
}
