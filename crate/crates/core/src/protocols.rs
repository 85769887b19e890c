//! End-to-end simulations of both preparation protocols.
//!
//! Setup I: two mechanical modes in one two-mode resonator. The normal modes
//! decouple into two (cavity, mechanics) subsystems driven with equal squeeze
//! magnitude and effective phases `phi` and `phi + pi`; the mechanical
//! marginals are recombined through the 50:50 beam splitter into the physical
//! pair `(c1, c2)` whose EPR variance is tracked over time.
//!
//! Setup II: two tunnel-coupled single-mode cavities, one drive. The full
//! four-mode lab-frame model is integrated through a two-step pump schedule
//! (normal mode `b1` squeezed first, then `b2` after retuning the laser), so
//! the off-resonant corrections the rotating-wave treatment discards are
//! quantified rather than assumed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::fmt;
use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;

use crate::analytics::{self, AnalyticPrediction, AnalyticsError};
use crate::dynamics::{
    self, build_rwa_model, build_two_cavity_model, CouplingProfile, DriveSpec, DynamicsError,
    LinearDynamics, SystemParams,
};
use crate::gaussian::{
    beam_splitter_5050, local_rotation_symplectic, EprMinimum, GaussianError, GaussianState,
};
use crate::meanfield::{self, MeanFieldError};

/// Safety multiplier applied to the analytic minimum preparation time when a
/// switch time is not given explicitly.
pub const T_SWITCH_SAFETY: f64 = 3.0;

/// Errors from protocol validation and execution.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolError {
    /// `chi1 >= chi2`: rejected before any simulation.
    Unstable {
        /// Parametric tone amplitude.
        chi1: f64,
        /// Beam-splitter tone amplitude.
        chi2: f64,
    },
    /// Drive configuration violates the protocol's resonance or phase
    /// conditions.
    ConditionViolation(String),
    /// Unknown sweep axis.
    UnknownAxis(String),
    /// Invalid parameter.
    InvalidParameter(String),
    /// Underlying dynamics failure.
    Dynamics(DynamicsError),
    /// Underlying state-algebra failure.
    Gaussian(GaussianError),
    /// Closed-form evaluation failure.
    Analytics(AnalyticsError),
    /// Mean-field failure.
    MeanField(MeanFieldError),
}

impl fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolError::Unstable { chi1, chi2 } => write!(
                f,
                "stability violated: chi1 = {chi1} >= chi2 = {chi2} \
                 (cooling must dominate over anti-damping)"
            ),
            ProtocolError::ConditionViolation(msg) => write!(f, "condition violation: {msg}"),
            ProtocolError::UnknownAxis(axis) => write!(f, "unknown sweep axis `{axis}`"),
            ProtocolError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            ProtocolError::Dynamics(e) => write!(f, "dynamics: {e}"),
            ProtocolError::Gaussian(e) => write!(f, "state algebra: {e}"),
            ProtocolError::Analytics(e) => write!(f, "analytics: {e}"),
            ProtocolError::MeanField(e) => write!(f, "mean field: {e}"),
        }
    }
}

impl core::error::Error for ProtocolError {}

impl From<DynamicsError> for ProtocolError {
    fn from(e: DynamicsError) -> Self {
        ProtocolError::Dynamics(e)
    }
}

impl From<GaussianError> for ProtocolError {
    fn from(e: GaussianError) -> Self {
        ProtocolError::Gaussian(e)
    }
}

impl From<MeanFieldError> for ProtocolError {
    fn from(e: MeanFieldError) -> Self {
        ProtocolError::MeanField(e)
    }
}

impl From<AnalyticsError> for ProtocolError {
    fn from(e: AnalyticsError) -> Self {
        match e {
            AnalyticsError::StabilityViolated { chi1, chi2 } => {
                ProtocolError::Unstable { chi1, chi2 }
            }
            other => ProtocolError::Analytics(other),
        }
    }
}

/// Everything a protocol run produces.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    /// Output times.
    pub times: Vec<f64>,
    /// Minimized EPR variance of the mechanical pair at each time.
    pub epr_min_series: Vec<f64>,
    /// Mechanical occupations `(<c1^dag c1>, <c2^dag c2>)`.
    pub occupations: Vec<(f64, f64)>,
    /// Cross moment `<c1 c2>`.
    pub cross_moments: Vec<Complex64>,
    /// Purity of the mechanical pair state.
    pub purities: Vec<f64>,
    /// Mechanical pair state at the final time.
    pub final_state: GaussianState,
    /// Final EPR minimum with its minimizing phases.
    pub final_epr: EprMinimum,
    /// Closed-form predictions for these parameters.
    pub prediction: AnalyticPrediction,
    /// `(t_switch, drive)` entries actually applied.
    pub schedule: Vec<(f64, DriveSpec)>,
    /// Late-time EPR minimum averaged over one modulation period
    /// (lab-frame runs only).
    pub epr_min_period_avg: Option<f64>,
    /// Steady EPR minimum of the corresponding rotating-frame model
    /// (lab-frame runs only).
    pub rwa_reference_epr: Option<f64>,
    /// Squeeze estimates `(r_b1, r_b2)` of the mechanical normal modes
    /// (setup II only).
    pub normal_mode_squeeze: Option<Vec<(f64, f64)>>,
    /// Non-fatal validity warnings.
    pub warnings: Vec<String>,
}

fn linspace(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

fn check_grid(t_end: f64, n_grid: usize) -> Result<(), ProtocolError> {
    if !t_end.is_finite() || t_end <= 0.0 {
        return Err(ProtocolError::InvalidParameter(format!(
            "t_end must be positive and finite, got {t_end}"
        )));
    }
    if n_grid == 0 {
        return Err(ProtocolError::InvalidParameter(String::from(
            "output grid needs at least one interval",
        )));
    }
    Ok(())
}

fn angle_distance(a: f64, b: f64) -> f64 {
    let d = crate::gaussian::wrap_angle(a - b);
    d.min(TAU - d)
}

/// Builds setup I parameters realizing effective couplings `(chi1, chi2)`
/// with target phase `phi_1 = phi_target` (and `phi_2 = phi_target + pi`),
/// on resonance.
pub fn setup1_params(
    chi1: f64,
    chi2: f64,
    kappa: f64,
    gamma_m: f64,
    n_th: f64,
    phi_target: f64,
) -> Result<SystemParams, ProtocolError> {
    let omega_m = 1.0;
    let g = 1e-6;
    let s = (kappa * kappa + omega_m * omega_m).sqrt();
    let (e1, e2) = (chi1 * s / g, chi2 * s / g);
    // phase_conditions needs kappa > 0; the kappa = 0 limit of
    // arctan(omega_m/kappa) is pi/2.
    let (phi11, phi12) = if kappa > 0.0 {
        let ph = meanfield::phase_conditions(kappa, omega_m, phi_target)?;
        (ph.phi11, ph.phi12)
    } else {
        (phi_target - PI / 2.0, PI / 2.0)
    };
    let pump = alloc::vec![
        DriveSpec::new(e1, e2, 2.0 * omega_m, phi11, phi12)?,
        DriveSpec::new(e1, e2, 2.0 * omega_m, phi11 + PI, phi12)?,
    ];
    Ok(SystemParams {
        omega_m,
        kappa,
        gamma_m,
        n_th,
        g,
        pump,
        j12: 0.0,
        delta: omega_m,
    })
}

struct Setup1Profiles {
    profiles: [CouplingProfile; 2],
}

fn validate_setup1(params: &SystemParams) -> Result<Setup1Profiles, ProtocolError> {
    params.validate()?;
    if params.pump.len() != 2 {
        return Err(ProtocolError::ConditionViolation(format!(
            "setup I needs exactly two pump drives, got {}",
            params.pump.len()
        )));
    }
    let tol = 1e-9 * params.omega_m;
    if (params.delta - params.omega_m).abs() > tol {
        return Err(ProtocolError::ConditionViolation(format!(
            "resonance requires delta = omega_m, got delta = {}",
            params.delta
        )));
    }
    for d in &params.pump {
        if (d.omega_mod - 2.0 * params.omega_m).abs() > tol {
            return Err(ProtocolError::ConditionViolation(format!(
                "resonance requires Omega = 2 omega_m, got {}",
                d.omega_mod
            )));
        }
    }
    let p1 = meanfield::chi_from_drive(params.g, &params.pump[0], params.kappa, params.omega_m);
    let p2 = meanfield::chi_from_drive(params.g, &params.pump[1], params.kappa, params.omega_m);
    // Equal squeeze parameters and opposite squeeze directions.
    if p1.chi2 <= 0.0 || p2.chi2 <= 0.0 {
        return Err(ProtocolError::Unstable {
            chi1: p1.chi1,
            chi2: p1.chi2,
        });
    }
    if (p1.chi1 / p1.chi2 - p2.chi1 / p2.chi2).abs() > 1e-9 {
        return Err(ProtocolError::ConditionViolation(format!(
            "subsystems must share the squeeze ratio: {} vs {}",
            p1.chi1 / p1.chi2,
            p2.chi1 / p2.chi2
        )));
    }
    if angle_distance(p2.phi - p1.phi, PI) > 1e-9 {
        return Err(ProtocolError::ConditionViolation(format!(
            "effective phases must differ by pi, got phi2 - phi1 = {}",
            p2.phi - p1.phi
        )));
    }
    // Stability gate, before any simulation.
    analytics::squeeze_param(p1.chi1, p1.chi2)?;
    Ok(Setup1Profiles { profiles: [p1, p2] })
}

fn initial_pair_state(n_th: f64) -> Result<GaussianState, ProtocolError> {
    // Cavity vacuum, mechanics thermal at the bath occupation.
    Ok(GaussianState::vacuum(1)?.tensor(&GaussianState::thermal(&[n_th])?))
}

/// Mechanical marginals of the two subsystems, recombined into `(c1, c2)`
/// through the (involutive) 50:50 beam splitter.
fn mech_pair(sub1: &GaussianState, sub2: &GaussianState) -> Result<GaussianState, ProtocolError> {
    let b1 = sub1.marginal(&[1])?;
    let b2 = sub2.marginal(&[1])?;
    Ok(beam_splitter_5050(&b1.tensor(&b2))?)
}

struct Series {
    times: Vec<f64>,
    epr: Vec<f64>,
    occupations: Vec<(f64, f64)>,
    cross: Vec<Complex64>,
    purity: Vec<f64>,
    last_epr: Option<EprMinimum>,
    last_state: Option<GaussianState>,
}

impl Series {
    fn new() -> Self {
        Self {
            times: Vec::new(),
            epr: Vec::new(),
            occupations: Vec::new(),
            cross: Vec::new(),
            purity: Vec::new(),
            last_epr: None,
            last_state: None,
        }
    }

    fn push(&mut self, t: f64, pair: GaussianState) -> Result<(), ProtocolError> {
        let epr = pair.epr_min()?;
        self.times.push(t);
        self.epr.push(epr.value);
        self.occupations
            .push((pair.mode_occupation(0)?, pair.mode_occupation(1)?));
        self.cross.push(pair.cross_moments(0, 1)?.0);
        self.purity.push(pair.purity()?);
        self.last_epr = Some(epr);
        self.last_state = Some(pair);
        Ok(())
    }
}

/// Runs setup I in the rotating frame (constant drift per subsystem).
///
/// Drives must satisfy the resonance conditions, equal squeeze ratios and the
/// `phi_2 = phi_1 + pi` phase relation; `chi1 >= chi2` is rejected before
/// simulation.
pub fn run_setup1(
    params: &SystemParams,
    t_end: f64,
    n_grid: usize,
) -> Result<ProtocolResult, ProtocolError> {
    check_grid(t_end, n_grid)?;
    let setup = validate_setup1(params)?;
    let models: Vec<LinearDynamics> = setup
        .profiles
        .iter()
        .map(|p| build_rwa_model(p, params.kappa, params.gamma_m, params.n_th))
        .collect::<Result<_, _>>()?;
    let init = initial_pair_state(params.n_th)?;
    let grid = linspace(t_end, n_grid);
    let traj1 = dynamics::evolve(&models[0], &init, (0.0, t_end), &grid)?;
    let traj2 = dynamics::evolve(&models[1], &init, (0.0, t_end), &grid)?;
    let mut series = Series::new();
    for ((t, s1), s2) in grid
        .iter()
        .zip(traj1.states.iter())
        .zip(traj2.states.iter())
    {
        series.push(*t, mech_pair(s1, s2)?)?;
    }
    let prediction = analytics::predict(
        &setup.profiles[0],
        params.kappa,
        params.gamma_m,
        params.n_th,
    )?;
    Ok(ProtocolResult {
        times: series.times,
        epr_min_series: series.epr,
        occupations: series.occupations,
        cross_moments: series.cross,
        purities: series.purity,
        final_state: series.last_state.expect("grid is nonempty"),
        final_epr: series.last_epr.expect("grid is nonempty"),
        prediction,
        schedule: alloc::vec![(0.0, params.pump[0]), (0.0, params.pump[1])],
        epr_min_period_avg: None,
        rwa_reference_epr: None,
        normal_mode_squeeze: None,
        warnings: Vec::new(),
    })
}

/// Runs setup I with the full lab-frame time-periodic model (no rotating-wave
/// approximation), reporting the late-time EPR minimum averaged over one
/// modulation period alongside the rotating-frame steady value.
pub fn run_setup1_full(
    params: &SystemParams,
    t_end: f64,
    n_grid: usize,
) -> Result<ProtocolResult, ProtocolError> {
    check_grid(t_end, n_grid)?;
    let setup = validate_setup1(params)?;
    let mut warnings = Vec::new();
    let chi_max = setup.profiles[0].chi1.max(setup.profiles[0].chi2);
    if chi_max > 0.1 * params.omega_m {
        warnings.push(format!(
            "omega_m/chi = {:.2} is small; the lab-frame run leaves the \
             rotating-wave validity window",
            params.omega_m / chi_max
        ));
    }
    let models: Vec<LinearDynamics> = setup
        .profiles
        .iter()
        .map(|p| {
            dynamics::build_full_model(
                p,
                params.delta,
                params.omega_m,
                params.kappa,
                params.gamma_m,
                params.n_th,
            )
        })
        .collect::<Result<_, _>>()?;
    let init = initial_pair_state(params.n_th)?;
    let grid = linspace(t_end, n_grid);
    let traj1 = dynamics::evolve(&models[0], &init, (0.0, t_end), &grid)?;
    let traj2 = dynamics::evolve(&models[1], &init, (0.0, t_end), &grid)?;
    let mut series = Series::new();
    for ((t, s1), s2) in grid
        .iter()
        .zip(traj1.states.iter())
        .zip(traj2.states.iter())
    {
        series.push(*t, mech_pair(s1, s2)?)?;
    }

    // Average the EPR minimum over one further modulation period; with
    // Omega = 2 omega_m every residual oscillation is commensurate.
    let period = models[0].period().expect("full model is periodic");
    const SAMPLES: usize = 128;
    let sub_grid: Vec<f64> = (0..SAMPLES)
        .map(|k| t_end + period * k as f64 / SAMPLES as f64)
        .collect();
    let tail1 = dynamics::evolve(
        &models[0],
        traj1.states.last().expect("grid nonempty"),
        (t_end, t_end + period),
        &sub_grid,
    )?;
    let tail2 = dynamics::evolve(
        &models[1],
        traj2.states.last().expect("grid nonempty"),
        (t_end, t_end + period),
        &sub_grid,
    )?;
    let mut avg = 0.0;
    for (s1, s2) in tail1.states.iter().zip(tail2.states.iter()) {
        avg += mech_pair(s1, s2)?.epr_min()?.value;
    }
    avg /= SAMPLES as f64;

    // Rotating-frame steady reference for the same parameters.
    let rwa_reference = {
        let pair = [
            dynamics::steady_state(&build_rwa_model(
                &setup.profiles[0],
                params.kappa,
                params.gamma_m,
                params.n_th,
            )?)?,
            dynamics::steady_state(&build_rwa_model(
                &setup.profiles[1],
                params.kappa,
                params.gamma_m,
                params.n_th,
            )?)?,
        ];
        mech_pair(&pair[0], &pair[1])?.epr_min()?.value
    };

    let prediction = analytics::predict(
        &setup.profiles[0],
        params.kappa,
        params.gamma_m,
        params.n_th,
    )?;
    Ok(ProtocolResult {
        times: series.times,
        epr_min_series: series.epr,
        occupations: series.occupations,
        cross_moments: series.cross,
        purities: series.purity,
        final_state: series.last_state.expect("grid is nonempty"),
        final_epr: series.last_epr.expect("grid is nonempty"),
        prediction,
        schedule: alloc::vec![(0.0, params.pump[0]), (0.0, params.pump[1])],
        epr_min_period_avg: Some(avg),
        rwa_reference_epr: Some(rwa_reference),
        normal_mode_squeeze: None,
        warnings,
    })
}

/// One step of the setup II pump sequence: laser detuning plus drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDrive {
    /// Cavity-laser detuning `delta = omega_c - omega_l` during this step.
    pub delta: f64,
    /// Pump drive during this step.
    pub drive: DriveSpec,
}

/// The two-step pump schedule of setup II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStepSchedule {
    /// First step: `delta + j12 = omega_m` (normal mode `b1` driven).
    pub step1: StepDrive,
    /// Second step: `delta - j12 = omega_m`, modulated-tone phase shifted by
    /// pi (normal mode `b2` driven).
    pub step2: StepDrive,
    /// Time of the parameter change. A switch at or beyond the run end makes
    /// the run single-step.
    pub t_switch: f64,
}

impl TwoStepSchedule {
    /// Standard schedule: step-1 detuning `omega_m - j12`, step-2 detuning
    /// `omega_m + j12`, phases from the pump phase conditions with the
    /// modulated tone shifted by pi in step 2.
    pub fn standard(
        kappa: f64,
        omega_m: f64,
        j12: f64,
        e1: f64,
        e2: f64,
        phi_target: f64,
        t_switch: f64,
    ) -> Result<Self, ProtocolError> {
        if t_switch.is_nan() || t_switch <= 0.0 {
            return Err(ProtocolError::InvalidParameter(format!(
                "t_switch must be positive, got {t_switch}"
            )));
        }
        let ph = meanfield::phase_conditions(kappa, omega_m, phi_target)?;
        let omega_mod = 2.0 * omega_m;
        Ok(Self {
            step1: StepDrive {
                delta: omega_m - j12,
                drive: DriveSpec::new(e1, e2, omega_mod, ph.phi11, ph.phi12)?,
            },
            step2: StepDrive {
                delta: omega_m + j12,
                drive: DriveSpec::new(e1, e2, omega_mod, ph.phi11 + PI, ph.phi12)?,
            },
            t_switch,
        })
    }
}

/// Setup II parameters with the pump of the schedule's first step.
pub fn setup2_params(
    chi1: f64,
    chi2: f64,
    kappa: f64,
    gamma_m: f64,
    n_th: f64,
    j12: f64,
) -> Result<(SystemParams, f64, f64), ProtocolError> {
    let omega_m = 1.0;
    let g = 1e-6;
    let s = (kappa * kappa + omega_m * omega_m).sqrt();
    let (e1, e2) = (chi1 * s / g, chi2 * s / g);
    let params = SystemParams {
        omega_m,
        kappa,
        gamma_m,
        n_th,
        g,
        pump: Vec::new(),
        j12,
        delta: omega_m - j12,
    };
    Ok((params, e1, e2))
}

/// Runs setup II on the full four-mode lab-frame model through the two-step
/// schedule. A schedule with `t_switch >= t_end` runs single-step.
///
/// Couplings outside the validity window
/// `chi << min(omega_m, j12, |j12 - omega_m|)` produce a warning on the
/// result; the run proceeds.
pub fn run_setup2(
    params: &SystemParams,
    schedule: &TwoStepSchedule,
    t_end: f64,
    n_grid: usize,
) -> Result<ProtocolResult, ProtocolError> {
    check_grid(t_end, n_grid)?;
    params.validate()?;
    if params.j12 == 0.0 || !params.j12.is_finite() {
        return Err(ProtocolError::InvalidParameter(format!(
            "setup II needs nonzero j12, got {}",
            params.j12
        )));
    }
    if schedule.t_switch.is_nan() || schedule.t_switch <= 0.0 {
        return Err(ProtocolError::InvalidParameter(String::from(
            "t_switch must be positive",
        )));
    }
    let single_step = schedule.t_switch >= t_end;
    let tol = 1e-9 * params.omega_m;

    let profile1 = meanfield::chi_from_drive(
        params.g,
        &schedule.step1.drive,
        params.kappa,
        params.omega_m,
    );
    let profile2 = meanfield::chi_from_drive(
        params.g,
        &schedule.step2.drive,
        params.kappa,
        params.omega_m,
    );
    // Resonance conditions: each step must bring one normal mode onto
    // resonance (delta +- j12 = omega_m); the two steps must cover both.
    let hits_plus = |d: f64| (d + params.j12 - params.omega_m).abs() <= tol;
    let hits_minus = |d: f64| (d - params.j12 - params.omega_m).abs() <= tol;
    let step1_plus = hits_plus(schedule.step1.delta);
    if !step1_plus && !hits_minus(schedule.step1.delta) {
        return Err(ProtocolError::ConditionViolation(format!(
            "step 1 requires delta +- j12 = omega_m, got delta = {}",
            schedule.step1.delta
        )));
    }
    if (schedule.step1.drive.omega_mod - 2.0 * params.omega_m).abs() > tol {
        return Err(ProtocolError::ConditionViolation(String::from(
            "step 1 requires Omega = 2 omega_m",
        )));
    }
    if !single_step {
        let step2_hits_other = if step1_plus {
            hits_minus(schedule.step2.delta)
        } else {
            hits_plus(schedule.step2.delta)
        };
        if !step2_hits_other {
            return Err(ProtocolError::ConditionViolation(format!(
                "step 2 must bring the other normal mode onto resonance, got delta = {}",
                schedule.step2.delta
            )));
        }
        if (schedule.step2.drive.omega_mod - 2.0 * params.omega_m).abs() > tol {
            return Err(ProtocolError::ConditionViolation(String::from(
                "step 2 requires Omega = 2 omega_m",
            )));
        }
        if angle_distance(profile2.phi - profile1.phi, PI) > 1e-9 {
            return Err(ProtocolError::ConditionViolation(format!(
                "step 2 must shift the effective phase by pi, got {}",
                profile2.phi - profile1.phi
            )));
        }
    }
    // Stability gate.
    analytics::squeeze_param(profile1.chi1, profile1.chi2)?;

    let mut warnings = Vec::new();
    let window = params
        .omega_m
        .min(params.j12.abs())
        .min((params.j12.abs() - params.omega_m).abs());
    let chi_max = profile1.chi1.max(profile1.chi2);
    if chi_max > 0.1 * window {
        warnings.push(format!(
            "coupling {chi_max:.4} is not small against the validity window \
             min(omega_m, j12, |j12 - omega_m|) = {window:.4}; rotating-wave \
             arguments are marginal here"
        ));
    }

    // Models for the two steps (laser retuned between them).
    let mut p1 = params.clone();
    p1.delta = schedule.step1.delta;
    p1.pump = alloc::vec![schedule.step1.drive];
    let model1 = build_two_cavity_model(&p1, &profile1)?;
    let init = GaussianState::vacuum(2)?.tensor(&GaussianState::thermal(&[
        params.n_th,
        params.n_th,
    ])?);

    let grid = linspace(t_end, n_grid);
    let t_sw = schedule.t_switch.min(t_end);
    let split = grid.iter().position(|&t| t > t_sw).unwrap_or(grid.len());
    let mut grid1: Vec<f64> = grid[..split].to_vec();
    let appended_switch = if single_step {
        false
    } else if grid1.last().map(|&t| (t - t_sw).abs() > 1e-12).unwrap_or(true) {
        grid1.push(t_sw);
        true
    } else {
        false
    };
    let run1_end = if single_step { t_end } else { t_sw };
    let traj1 = dynamics::evolve(&model1.full, &init, (0.0, run1_end), &grid1)?;

    let mut node_states: Vec<(f64, GaussianState)> = Vec::with_capacity(grid.len());
    let n_report1 = if appended_switch {
        grid1.len() - 1
    } else {
        grid1.len()
    };
    for (t, s) in grid1.iter().zip(traj1.states.iter()).take(n_report1) {
        node_states.push((*t, s.clone()));
    }

    let mut applied = alloc::vec![(0.0, schedule.step1.drive)];
    if !single_step {
        // Change of laser frame at the switch: the cavity fluctuation
        // operators rotate by (delta_1 - delta_2) t_switch.
        let theta = (schedule.step1.delta - schedule.step2.delta) * t_sw;
        let rot = local_rotation_symplectic(&[theta, theta, 0.0, 0.0]);
        let handover = traj1
            .states
            .last()
            .expect("step-1 grid nonempty")
            .apply_symplectic(&rot)?;
        let mut p2 = params.clone();
        p2.delta = schedule.step2.delta;
        p2.pump = alloc::vec![schedule.step2.drive];
        let model2 = build_two_cavity_model(&p2, &profile2)?;
        let grid2: Vec<f64> = grid[split..].to_vec();
        if !grid2.is_empty() {
            let traj2 = dynamics::evolve(&model2.full, &handover, (t_sw, t_end), &grid2)?;
            for (t, s) in grid2.iter().zip(traj2.states.iter()) {
                node_states.push((*t, s.clone()));
            }
        }
        applied.push((t_sw, schedule.step2.drive));
    }

    let mut series = Series::new();
    let mut normal = Vec::with_capacity(node_states.len());
    for (t, four_mode) in &node_states {
        let mech = four_mode.marginal(&[2, 3])?;
        let normal_modes = beam_splitter_5050(&mech)?;
        normal.push((
            normal_modes.marginal(&[0])?.estimated_squeeze()?,
            normal_modes.marginal(&[1])?.estimated_squeeze()?,
        ));
        series.push(*t, mech)?;
    }

    let prediction = analytics::predict(&profile1, params.kappa, params.gamma_m, params.n_th)?;
    Ok(ProtocolResult {
        times: series.times,
        epr_min_series: series.epr,
        occupations: series.occupations,
        cross_moments: series.cross,
        purities: series.purity,
        final_state: series.last_state.expect("grid is nonempty"),
        final_epr: series.last_epr.expect("grid is nonempty"),
        prediction,
        schedule: applied,
        epr_min_period_avg: None,
        rwa_reference_epr: None,
        normal_mode_squeeze: Some(normal),
        warnings,
    })
}

/// Which protocol a sweep runs per row.
#[derive(Debug, Clone)]
pub enum ProtocolSelector {
    /// Rotating-frame setup I.
    Setup1Rwa {
        /// Run length.
        t_end: f64,
        /// Output intervals.
        n_grid: usize,
    },
    /// Lab-frame setup I.
    Setup1Full {
        /// Run length.
        t_end: f64,
        /// Output intervals.
        n_grid: usize,
    },
    /// Setup II with a fixed schedule template.
    Setup2 {
        /// Schedule applied to every row.
        schedule: TwoStepSchedule,
        /// Run length.
        t_end: f64,
        /// Output intervals.
        n_grid: usize,
    },
}

/// Row outcome of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    /// Run completed.
    Ok,
    /// Rejected by the stability gate.
    Unstable,
    /// Any other failure, with its message.
    Failed(String),
}

/// Summary of one sweep row.
#[derive(Debug, Clone)]
pub struct SweepRow {
    /// Value assigned to the swept axis.
    pub value: f64,
    /// Outcome.
    pub status: RowStatus,
    /// Final EPR minimum, when the run completed.
    pub final_epr_min: Option<f64>,
    /// Closed-form EPR prediction for the row's parameters.
    pub predicted_epr_min: Option<f64>,
    /// Final mechanical occupations.
    pub occupations: Option<(f64, f64)>,
    /// Final pair purity.
    pub purity: Option<f64>,
}

/// Assigns `value` to the named parameter. Axes: `n_th`, `kappa`, `gamma_m`,
/// `g`, `j12`, `delta`, `e1`, `e2`, `chi1`, `chi2` (the chi axes rescale the
/// pump amplitudes through the current `g`, `kappa`, `omega_m`).
pub fn apply_axis(params: &mut SystemParams, axis: &str, value: f64) -> Result<(), ProtocolError> {
    match axis {
        "n_th" => params.n_th = value,
        "kappa" => params.kappa = value,
        "gamma_m" => params.gamma_m = value,
        "g" => params.g = value,
        "j12" => params.j12 = value,
        "delta" => params.delta = value,
        "e1" => params.pump.iter_mut().for_each(|d| d.e1 = value),
        "e2" => params.pump.iter_mut().for_each(|d| d.e2 = value),
        "chi1" | "chi2" => {
            if params.g <= 0.0 {
                return Err(ProtocolError::InvalidParameter(String::from(
                    "chi axes need g > 0",
                )));
            }
            let s = (params.kappa * params.kappa + params.omega_m * params.omega_m).sqrt();
            let e = value * s / params.g;
            if axis == "chi1" {
                params.pump.iter_mut().for_each(|d| d.e1 = e);
            } else {
                params.pump.iter_mut().for_each(|d| d.e2 = e);
            }
        }
        other => return Err(ProtocolError::UnknownAxis(String::from(other))),
    }
    Ok(())
}

/// Runs one sweep row. Only an unknown axis is an error; run failures are
/// recorded in the row status.
pub fn sweep_row(
    template: &SystemParams,
    axis: &str,
    value: f64,
    selector: &ProtocolSelector,
) -> Result<SweepRow, ProtocolError> {
    let mut params = template.clone();
    apply_axis(&mut params, axis, value)?;
    let outcome = match selector {
        ProtocolSelector::Setup1Rwa { t_end, n_grid } => run_setup1(&params, *t_end, *n_grid),
        ProtocolSelector::Setup1Full { t_end, n_grid } => run_setup1_full(&params, *t_end, *n_grid),
        ProtocolSelector::Setup2 {
            schedule,
            t_end,
            n_grid,
        } => run_setup2(&params, schedule, *t_end, *n_grid),
    };
    Ok(match outcome {
        Ok(res) => SweepRow {
            value,
            status: RowStatus::Ok,
            final_epr_min: Some(res.final_epr.value),
            predicted_epr_min: Some(match selector {
                ProtocolSelector::Setup2 { schedule, t_end, .. }
                    if schedule.t_switch >= *t_end =>
                {
                    res.prediction.setup2.epr_min_inf
                }
                _ => res.prediction.epr_min,
            }),
            occupations: res.occupations.last().copied(),
            purity: res.purities.last().copied(),
        },
        Err(ProtocolError::Unstable { .. }) => SweepRow {
            value,
            status: RowStatus::Unstable,
            final_epr_min: None,
            predicted_epr_min: None,
            occupations: None,
            purity: None,
        },
        Err(e) => SweepRow {
            value,
            status: RowStatus::Failed(format!("{e}")),
            final_epr_min: None,
            predicted_epr_min: None,
            occupations: None,
            purity: None,
        },
    })
}

/// Sweeps a named parameter over `values`, one row per value, in order.
/// Individual run failures are recorded per row; the sweep continues.
pub fn sweep(
    template: &SystemParams,
    axis: &str,
    values: &[f64],
    selector: &ProtocolSelector,
) -> Result<Vec<SweepRow>, ProtocolError> {
    // Validate the axis once up front so typos fail fast.
    apply_axis(&mut template.clone(), axis, values.first().copied().unwrap_or(0.0))?;
    values
        .iter()
        .map(|&v| sweep_row(template, axis, v, selector))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const KAPPA: f64 = 0.05;
    const CHI1: f64 = 0.01;
    const CHI2: f64 = 0.03;

    #[test]
    fn pure_two_mode_squeezed_vacuum() {
        // gamma_m = 0: steady state is the pure TMSV, Delta_EPR = 2 e^{-2r} = 1.
        let params = setup1_params(CHI1, CHI2, KAPPA, 0.0, 0.0, 0.0).unwrap();
        let res = run_setup1(&params, 800.0, 200).unwrap();
        assert_abs_diff_eq!(res.final_epr.value, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(
            res.purities.last().copied().unwrap(),
            1.0,
            epsilon = 1e-6
        );
        // Minimizing phases satisfy theta1 + theta2 = phi (phi = 0 here).
        let sum = (res.final_epr.theta1 + res.final_epr.theta2).rem_euclid(TAU);
        assert!(sum.min(TAU - sum) < 1e-4, "theta sum {sum}");
        // Moments match the d0 = 0 closed forms.
        let occ = res.occupations.last().unwrap();
        assert_abs_diff_eq!(occ.0, 0.125, epsilon = 1e-7);
        assert_abs_diff_eq!(occ.1, 0.125, epsilon = 1e-7);
    }

    #[test]
    fn thermal_steady_state_matches_closed_form() {
        let n_th = 2.0;
        let params = setup1_params(CHI1, CHI2, KAPPA, 1e-4, n_th, 0.7).unwrap();
        let res = run_setup1(&params, 2200.0, 110).unwrap();
        let p = &res.prediction;
        assert_relative_eq!(res.final_epr.value, p.epr_min, max_relative = 1e-6);
        let occ = res.occupations.last().unwrap();
        assert_relative_eq!(occ.0, p.occupation, max_relative = 1e-6);
        let cross = res.cross_moments.last().unwrap();
        assert!((cross - p.cross).norm() <= 1e-6 * p.cross.norm());
        // theta1 + theta2 = phi at the minimum.
        let sum = (res.final_epr.theta1 + res.final_epr.theta2 - 0.7).rem_euclid(TAU);
        assert!(sum.min(TAU - sum) < 1e-4, "theta sum offset {sum}");
    }

    #[test]
    fn epr_series_approaches_steady_value() {
        // The relaxation is oscillatory here (complex drift eigenvalues at
        // Re = -kappa/4), so the approach is monotone as an envelope: sample
        // the gap once per relaxation-oscillation period.
        let params = setup1_params(CHI1, CHI2, KAPPA, 0.0, 0.0, 0.0).unwrap();
        let res = run_setup1(&params, 992.0, 124).unwrap();
        let steady = res.prediction.epr_min;
        let period = 124.0; // 2 pi / (2 Im lambda), Im lambda = 0.02537
        let stride = (period / (res.times[1] - res.times[0])).round() as usize;
        let gaps: Vec<f64> = res
            .epr_min_series
            .iter()
            .step_by(stride)
            .map(|v| (v - steady).abs())
            .collect();
        for w in gaps.windows(2) {
            assert!(
                w[1] < w[0].max(1e-9),
                "EPR gap envelope grew: {} -> {}",
                w[0],
                w[1]
            );
        }
        assert!(*gaps.last().unwrap() < 1e-6);
    }

    #[test]
    fn stability_gate_rejects_before_simulation() {
        let params = setup1_params(0.03, 0.01, KAPPA, 0.0, 0.0, 0.0).unwrap();
        match run_setup1(&params, 10.0, 5) {
            Err(ProtocolError::Unstable { chi1, chi2 }) => {
                assert!(chi1 >= chi2);
            }
            other => panic!("expected Unstable, got {other:?}"),
        }
        // Equality is rejected too.
        let params = setup1_params(0.03, 0.03, KAPPA, 0.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            run_setup1(&params, 10.0, 5),
            Err(ProtocolError::Unstable { .. })
        ));
    }

    #[test]
    fn phase_condition_violation_is_reported() {
        let mut params = setup1_params(CHI1, CHI2, KAPPA, 0.0, 0.0, 0.0).unwrap();
        params.pump[1].phi1 += 0.3;
        assert!(matches!(
            run_setup1(&params, 10.0, 5),
            Err(ProtocolError::ConditionViolation(_))
        ));
        let mut params = setup1_params(CHI1, CHI2, KAPPA, 0.0, 0.0, 0.0).unwrap();
        params.delta = 1.2;
        assert!(matches!(
            run_setup1(&params, 10.0, 5),
            Err(ProtocolError::ConditionViolation(_))
        ));
    }

    #[test]
    fn kappa_zero_gives_thermal_epr() {
        // Without cavity dissipation the pair just thermalizes:
        // Delta_EPR = 4 n_th + 2.
        let n_th = 1.5;
        let params = setup1_params(CHI1, CHI2, 0.0, 0.02, n_th, 0.0).unwrap();
        let res = run_setup1(&params, 3200.0, 80).unwrap();
        assert_relative_eq!(res.final_epr.value, 4.0 * n_th + 2.0, max_relative = 1e-6);
    }

    #[test]
    fn full_model_agrees_with_rwa_at_reference_point() {
        let params = setup1_params(CHI1, CHI2, KAPPA, 0.0, 0.0, 0.0).unwrap();
        let res = run_setup1_full(&params, 800.0, 100).unwrap();
        let avg = res.epr_min_period_avg.unwrap();
        let rwa = res.rwa_reference_epr.unwrap();
        assert!(
            (avg - rwa).abs() / rwa < 0.05,
            "lab-frame {avg} vs rotating-frame {rwa}"
        );
        assert!(res.warnings.is_empty());
    }

    fn standard_setup2(
        n_th: f64,
        gamma_m: f64,
        t_switch: f64,
    ) -> (SystemParams, TwoStepSchedule) {
        // The undriven normal mode picks up spurious squeezing at a rate
        // ~ chi1 chi2 / detuning while it is undamped, so the tunneling must
        // put the off-resonant detunings far above omega_m.
        let j12 = 10.0;
        let (mut params, e1, e2) = setup2_params(CHI1, CHI2, KAPPA, gamma_m, n_th, j12).unwrap();
        let schedule =
            TwoStepSchedule::standard(KAPPA, 1.0, j12, e1, e2, 0.0, t_switch).unwrap();
        params.pump = alloc::vec![schedule.step1.drive];
        (params, schedule)
    }

    #[test]
    fn setup2_two_step_reaches_tmsv() {
        // t_switch = 3 t_min = 240; after both steps the pair is in the TMSV
        // up to rotating-wave corrections.
        let (params, schedule) = standard_setup2(0.0, 0.0, 240.0);
        let res = run_setup2(&params, &schedule, 480.0, 120).unwrap();
        assert!(
            (res.final_epr.value - 1.0).abs() < 0.01,
            "epr {}",
            res.final_epr.value
        );
        assert_eq!(res.schedule.len(), 2);
        let normal = res.normal_mode_squeeze.as_ref().unwrap();
        let (r1, r2) = normal.last().copied().unwrap();
        let r_target = (CHI1 / CHI2).atanh();
        assert!((r1 - r_target).abs() < 0.01 * r_target.max(1.0));
        assert!((r2 - r_target).abs() < 0.01 * r_target.max(1.0));
    }

    #[test]
    fn setup2_step_one_only_squeezes_b1() {
        let (params, schedule) = standard_setup2(0.0, 0.0, 240.0);
        // Run only through step 1 (switch beyond the run end => single step).
        let mut sched = schedule;
        sched.t_switch = 1e9;
        let res = run_setup2(&params, &sched, 240.0, 60).unwrap();
        let normal = res.normal_mode_squeeze.as_ref().unwrap();
        let (r1, r2) = normal.last().copied().unwrap();
        let r_target = (CHI1 / CHI2).atanh();
        assert!(
            (r1 - r_target).abs() < 0.01 * r_target,
            "b1 squeeze {r1} vs {r_target}"
        );
        // b2 is neither driven nor damped here: it stays (near) vacuum.
        assert!(r2.abs() < 0.01, "b2 squeeze {r2}");
        assert_eq!(res.schedule.len(), 1);
    }

    #[test]
    fn setup2_single_step_thermal_matches_closed_form() {
        let n_th = 0.1;
        let (params, schedule) = standard_setup2(n_th, 1e-4, 1e9);
        let res = run_setup2(&params, &schedule, 1500.0, 100).unwrap();
        let predicted = res.prediction.setup2.epr_min_inf;
        assert!(
            (res.final_epr.value - predicted).abs() / predicted < 0.05,
            "epr {} vs predicted {predicted}",
            res.final_epr.value
        );
    }

    #[test]
    fn setup2_warns_outside_validity_window() {
        // j12 close to omega_m shrinks the validity window below the coupling.
        let j12 = 1.0 + 0.1;
        let (mut params, e1, e2) = setup2_params(CHI1, CHI2, KAPPA, 0.0, 0.0, j12).unwrap();
        let schedule = TwoStepSchedule::standard(KAPPA, 1.0, j12, e1, e2, 0.0, 240.0).unwrap();
        params.pump = alloc::vec![schedule.step1.drive];
        let res = run_setup2(&params, &schedule, 100.0, 10).unwrap();
        assert!(!res.warnings.is_empty());
    }

    #[test]
    fn sweep_reports_unstable_rows_and_continues() {
        let params = setup1_params(CHI1, CHI2, KAPPA, 0.0, 0.0, 0.0).unwrap();
        let selector = ProtocolSelector::Setup1Rwa {
            t_end: 400.0,
            n_grid: 20,
        };
        let rows = sweep(&params, "chi1", &[0.01, 0.02, 0.029, 0.031], &selector).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(matches!(rows[0].status, RowStatus::Ok));
        assert!(matches!(rows[3].status, RowStatus::Unstable));
        // EPR decreases as chi1 approaches chi2 from below (stronger squeezing).
        let e0 = rows[0].final_epr_min.unwrap();
        let e2 = rows[2].final_epr_min.unwrap();
        assert!(e2 < e0, "epr should drop with stronger squeezing");
    }

    #[test]
    fn sweep_over_empty_list_is_empty() {
        let params = setup1_params(CHI1, CHI2, KAPPA, 0.0, 0.0, 0.0).unwrap();
        let selector = ProtocolSelector::Setup1Rwa {
            t_end: 10.0,
            n_grid: 2,
        };
        assert!(sweep(&params, "n_th", &[], &selector).unwrap().is_empty());
        assert!(matches!(
            sweep(&params, "nonsense", &[1.0], &selector),
            Err(ProtocolError::UnknownAxis(_))
        ));
    }

    #[test]
    fn nth_sweep_crosses_threshold_near_seventy() {
        let params = setup1_params(CHI1, CHI2, KAPPA, 1e-4, 0.0, 0.0).unwrap();
        let selector = ProtocolSelector::Setup1Rwa {
            t_end: 2000.0,
            n_grid: 40,
        };
        let rows = sweep(&params, "n_th", &[0.0, 10.0, 30.0, 50.0, 70.0, 90.0], &selector).unwrap();
        let eprs: Vec<f64> = rows.iter().map(|r| r.final_epr_min.unwrap()).collect();
        assert!(eprs[3] < 2.0, "epr at n_th = 50 should still be squeezed");
        assert!(eprs[5] > 2.0, "epr at n_th = 90 should exceed 2");
    }
}
