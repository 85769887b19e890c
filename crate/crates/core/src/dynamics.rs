//! Drift/diffusion generators for the linearized dissipative models and their
//! Gaussian moment dynamics.
//!
//! A [`LinearDynamics`] encodes the moment equations of a Lindblad master
//! equation with quadratic Hamiltonian: `d<R>/dt = A(t) <R>` and
//! `dV/dt = A(t) V + V A(t)^T + D`. The Lindblad form
//! `kappa/2 (2 a rho a^dag - a^dag a rho - rho a^dag a)` gives cavity
//! amplitude decay `kappa/2` (energy decay `kappa`) and, with a thermal
//! mechanical bath, amplitude decay `gamma_m/2` plus diffusion
//! `gamma_m (n_th + 1/2)`. All quantum-moment dynamics in the crate use this
//! convention; it reproduces the closed-form steady moments exactly.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;

use crate::gaussian::{symplectic_form, GaussianError, GaussianState};
use crate::ode::{self, OdeError, OdeOptions};

/// Integrator tolerances for [`evolve`]; chosen so that analytic-identity
/// checks at `1e-6` are integrator-noise-free.
pub const EVOLVE_RTOL: f64 = 1e-9;
/// Absolute counterpart of [`EVOLVE_RTOL`].
pub const EVOLVE_ATOL: f64 = 1e-12;

/// Errors from model construction and moment dynamics.
#[derive(Debug, Clone, PartialEq)]
pub enum DynamicsError {
    /// Operation (steady state, eigenvalues) requires a constant drift.
    TimeDependentDrift,
    /// The drift is not Hurwitz; carries the offending eigenvalue.
    NonHurwitz {
        /// Real part of the eigenvalue with the largest real part.
        re: f64,
        /// Its imaginary part.
        im: f64,
    },
    /// State and model disagree on the number of modes.
    ModeMismatch {
        /// Modes in the model.
        model: usize,
        /// Modes in the state.
        state: usize,
    },
    /// Time-integration failure.
    Ode(OdeError),
    /// A state produced along the way failed validation.
    Gaussian(GaussianError),
    /// Invalid model parameter.
    InvalidParameter(String),
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::TimeDependentDrift => {
                write!(f, "operation requires a constant (time-independent) drift")
            }
            DynamicsError::NonHurwitz { re, im } => write!(
                f,
                "drift is not Hurwitz: eigenvalue {re:+.6e} {im:+.6e}i has nonnegative real part"
            ),
            DynamicsError::ModeMismatch { model, state } => {
                write!(f, "model has {model} modes but state has {state}")
            }
            DynamicsError::Ode(e) => write!(f, "integration failed: {e}"),
            DynamicsError::Gaussian(e) => write!(f, "state validation failed: {e}"),
            DynamicsError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl core::error::Error for DynamicsError {}

impl From<OdeError> for DynamicsError {
    fn from(e: OdeError) -> Self {
        DynamicsError::Ode(e)
    }
}

impl From<GaussianError> for DynamicsError {
    fn from(e: GaussianError) -> Self {
        DynamicsError::Gaussian(e)
    }
}

/// Two-tone effective optomechanical coupling
/// `chi(t) = chi1 e^{-i(Omega t - phi)} + chi2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingProfile {
    /// Modulated (parametric-gain) tone amplitude, units of `omega_m`.
    pub chi1: f64,
    /// Constant (beam-splitter) tone amplitude.
    pub chi2: f64,
    /// Modulation frequency `Omega`.
    pub omega_mod: f64,
    /// Modulation phase `phi`.
    pub phi: f64,
}

impl CouplingProfile {
    /// Builds a profile; tone amplitudes must be finite and nonnegative.
    /// Stability (`chi2 > chi1`) is checked at use sites, not here.
    pub fn new(chi1: f64, chi2: f64, omega_mod: f64, phi: f64) -> Result<Self, DynamicsError> {
        for (name, v) in [("chi1", chi1), ("chi2", chi2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(DynamicsError::InvalidParameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self {
            chi1,
            chi2,
            omega_mod,
            phi,
        })
    }

    /// Complex coupling value at time `t`.
    pub fn value_at(&self, t: f64) -> Complex64 {
        let arg = self.omega_mod * t - self.phi;
        Complex64::new(arg.cos(), -arg.sin()) * self.chi1 + self.chi2
    }
}

/// One two-tone pump: amplitudes, modulation frequency and initial phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    /// Modulated tone amplitude, units of `omega_m`.
    pub e1: f64,
    /// Constant tone amplitude.
    pub e2: f64,
    /// Modulation frequency.
    pub omega_mod: f64,
    /// Initial phase of the modulated tone.
    pub phi1: f64,
    /// Initial phase of the constant tone.
    pub phi2: f64,
}

impl DriveSpec {
    /// Builds a pump spec; amplitudes must be finite and nonnegative.
    pub fn new(e1: f64, e2: f64, omega_mod: f64, phi1: f64, phi2: f64) -> Result<Self, DynamicsError> {
        for (name, v) in [("e1", e1), ("e2", e2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(DynamicsError::InvalidParameter(format!(
                    "pump amplitude {name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self {
            e1,
            e2,
            omega_mod,
            phi1,
            phi2,
        })
    }
}

/// All physical constants of a run, in units of `omega_m = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Mechanical frequency (sets the unit; normally 1).
    pub omega_m: f64,
    /// Cavity energy-decay rate `kappa`.
    pub kappa: f64,
    /// Mechanical damping rate `gamma_m`.
    pub gamma_m: f64,
    /// Mean thermal phonon number of the mechanical bath.
    pub n_th: f64,
    /// Single-photon optomechanical coupling `g`.
    pub g: f64,
    /// Pump drives, one per (normal-mode) subsystem.
    pub pump: Vec<DriveSpec>,
    /// Inter-cavity coupling (setup II only).
    pub j12: f64,
    /// Cavity-laser detuning `delta = omega_c - omega_l`.
    pub delta: f64,
}

impl SystemParams {
    /// Validates rate positivity and finiteness.
    pub fn validate(&self) -> Result<(), DynamicsError> {
        for (name, v) in [
            ("omega_m", self.omega_m),
            ("kappa", self.kappa),
            ("gamma_m", self.gamma_m),
            ("n_th", self.n_th),
            ("g", self.g),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(DynamicsError::InvalidParameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.omega_m <= 0.0 {
            return Err(DynamicsError::InvalidParameter(String::from(
                "omega_m must be positive",
            )));
        }
        Ok(())
    }
}

type DriftEval = Box<dyn Fn(f64, &mut DMatrix<f64>) + Send + Sync>;

enum Drift {
    Constant(DMatrix<f64>),
    Periodic { period: f64, eval: DriftEval },
}

/// Time-dependent drift generator plus constant diffusion matrix for the
/// Gaussian moment equations of `n_modes` bosonic modes.
pub struct LinearDynamics {
    n_modes: usize,
    drift: Drift,
    diffusion: DMatrix<f64>,
}

impl fmt::Debug for LinearDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearDynamics")
            .field("n_modes", &self.n_modes)
            .field("time_dependent", &self.is_time_dependent())
            .finish()
    }
}

impl LinearDynamics {
    fn check_diffusion(n_modes: usize, d: &DMatrix<f64>) -> Result<(), DynamicsError> {
        let dim = 2 * n_modes;
        if d.nrows() != dim || d.ncols() != dim {
            return Err(DynamicsError::InvalidParameter(format!(
                "diffusion must be {dim}x{dim}"
            )));
        }
        let asym = (d - d.transpose())
            .iter()
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        if asym > 1e-12 {
            return Err(DynamicsError::InvalidParameter(format!(
                "diffusion asymmetry {asym:.3e}"
            )));
        }
        let min_eig = d
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-12 {
            return Err(DynamicsError::InvalidParameter(format!(
                "diffusion not PSD: min eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    /// Model with a constant drift matrix.
    pub fn constant(drift: DMatrix<f64>, diffusion: DMatrix<f64>) -> Result<Self, DynamicsError> {
        let dim = drift.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || drift.ncols() != dim {
            return Err(DynamicsError::InvalidParameter(String::from(
                "drift must be square with even dimension",
            )));
        }
        let n_modes = dim / 2;
        Self::check_diffusion(n_modes, &diffusion)?;
        Ok(Self {
            n_modes,
            drift: Drift::Constant(drift),
            diffusion,
        })
    }

    /// Model with a time-periodic drift evaluated by `eval(t, &mut A)`.
    pub fn periodic<F>(
        n_modes: usize,
        period: f64,
        eval: F,
        diffusion: DMatrix<f64>,
    ) -> Result<Self, DynamicsError>
    where
        F: Fn(f64, &mut DMatrix<f64>) + Send + Sync + 'static,
    {
        if n_modes == 0 {
            return Err(DynamicsError::InvalidParameter(String::from(
                "need at least one mode",
            )));
        }
        if !period.is_finite() || period <= 0.0 {
            return Err(DynamicsError::InvalidParameter(format!(
                "period must be positive, got {period}"
            )));
        }
        Self::check_diffusion(n_modes, &diffusion)?;
        Ok(Self {
            n_modes,
            drift: Drift::Periodic {
                period,
                eval: Box::new(eval),
            },
            diffusion,
        })
    }

    /// Number of modes.
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Constant diffusion matrix `D`.
    pub fn diffusion(&self) -> &DMatrix<f64> {
        &self.diffusion
    }

    /// Whether the drift depends on time.
    pub fn is_time_dependent(&self) -> bool {
        matches!(self.drift, Drift::Periodic { .. })
    }

    /// Drift period, when time-dependent.
    pub fn period(&self) -> Option<f64> {
        match &self.drift {
            Drift::Constant(_) => None,
            Drift::Periodic { period, .. } => Some(*period),
        }
    }

    /// Writes the drift matrix `A(t)` into `out`.
    pub fn drift_into(&self, t: f64, out: &mut DMatrix<f64>) {
        match &self.drift {
            Drift::Constant(a) => out.copy_from(a),
            Drift::Periodic { eval, .. } => eval(t, out),
        }
    }

    /// Drift matrix `A(t)` (allocating convenience wrapper).
    pub fn drift_at(&self, t: f64) -> DMatrix<f64> {
        let dim = 2 * self.n_modes;
        let mut a = DMatrix::zeros(dim, dim);
        self.drift_into(t, &mut a);
        a
    }

    fn constant_drift(&self) -> Option<&DMatrix<f64>> {
        match &self.drift {
            Drift::Constant(a) => Some(a),
            Drift::Periodic { .. } => None,
        }
    }
}

/// Hamiltonian part of the drift: `A_H = Omega M` for `H = (1/2) r^T M r`.
fn hamiltonian_drift(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n_modes = m.nrows() / 2;
    symplectic_form(n_modes) * m
}

/// Diffusion of a cavity (vacuum bath, rate `kappa`) or mechanical mode
/// (thermal bath): diagonal blocks `kappa/2` and `gamma (n + 1/2)`.
fn bath_diffusion(entries: &[f64]) -> DMatrix<f64> {
    let n = entries.len();
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    for (j, &v) in entries.iter().enumerate() {
        d[(2 * j, 2 * j)] = v;
        d[(2 * j + 1, 2 * j + 1)] = v;
    }
    d
}

fn subtract_decays(a: &mut DMatrix<f64>, half_rates: &[f64]) {
    for (j, &hr) in half_rates.iter().enumerate() {
        a[(2 * j, 2 * j)] -= hr;
        a[(2 * j + 1, 2 * j + 1)] -= hr;
    }
}

/// Quadrature Hamiltonian matrix of the rotating-frame model
/// `H = (chi1 e^{-i phi} b + chi2 b^dag) a + h.c.` on modes `(a, b)`.
fn rwa_hamiltonian(chi1: f64, chi2: f64, phi: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4, 4);
    let (sp, cp) = phi.sin_cos();
    // x_a x_b, p_a p_b, x_a p_b, p_a x_b couplings.
    let pairs = [
        (0, 2, chi1 * cp + chi2),
        (1, 3, chi2 - chi1 * cp),
        (0, 3, chi1 * sp),
        (1, 2, chi1 * sp),
    ];
    for (i, j, v) in pairs {
        m[(i, j)] += v;
        m[(j, i)] += v;
    }
    m
}

/// Interaction `[chi^*(t) a + chi(t) a^dag](b + b^dag)` in quadratures:
/// `2 (Re chi x_a + Im chi p_a) x_b`, written into the Hamiltonian matrix at
/// mode offsets `a_off`, `b_off` (quadrature indices).
fn lab_interaction(m: &mut DMatrix<f64>, a_off: usize, b_off: usize, chi: Complex64) {
    m[(a_off, b_off)] += 2.0 * chi.re;
    m[(b_off, a_off)] += 2.0 * chi.re;
    m[(a_off + 1, b_off)] += 2.0 * chi.im;
    m[(b_off, a_off + 1)] += 2.0 * chi.im;
}

/// Constant-drift rotating-frame model for one `(cavity, mechanical)` pair
/// with `H = (chi1 e^{-i phi} b + chi2 b^dag) a + h.c.`, cavity amplitude
/// decay `kappa/2`, mechanical amplitude decay `gamma_m/2` and thermal
/// diffusion `gamma_m (n_th + 1/2)`.
pub fn build_rwa_model(
    profile: &CouplingProfile,
    kappa: f64,
    gamma_m: f64,
    n_th: f64,
) -> Result<LinearDynamics, DynamicsError> {
    check_rates(kappa, gamma_m, n_th)?;
    let mut a = hamiltonian_drift(&rwa_hamiltonian(profile.chi1, profile.chi2, profile.phi));
    subtract_decays(&mut a, &[kappa / 2.0, gamma_m / 2.0]);
    let d = bath_diffusion(&[kappa / 2.0, gamma_m * (n_th + 0.5)]);
    LinearDynamics::constant(a, d)
}

/// Lab-frame (non-rotating) model for one `(cavity, mechanical)` pair:
/// `H = delta a^dag a + omega_m b^dag b + [chi^*(t) a + chi(t) a^dag](b + b^dag)`
/// with the two-tone `chi(t)` of the profile; periodic with period
/// `2 pi / Omega`.
pub fn build_full_model(
    profile: &CouplingProfile,
    delta: f64,
    omega_m: f64,
    kappa: f64,
    gamma_m: f64,
    n_th: f64,
) -> Result<LinearDynamics, DynamicsError> {
    check_rates(kappa, gamma_m, n_th)?;
    if !profile.omega_mod.is_finite() || profile.omega_mod <= 0.0 {
        return Err(DynamicsError::InvalidParameter(format!(
            "modulation frequency must be positive, got {}",
            profile.omega_mod
        )));
    }
    let profile = *profile;
    let half_rates = [kappa / 2.0, gamma_m / 2.0];
    let eval = move |t: f64, a: &mut DMatrix<f64>| {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = delta;
        m[(1, 1)] = delta;
        m[(2, 2)] = omega_m;
        m[(3, 3)] = omega_m;
        lab_interaction(&mut m, 0, 2, profile.value_at(t));
        a.copy_from(&hamiltonian_drift(&m));
        subtract_decays(a, &half_rates);
    };
    let d = bath_diffusion(&[kappa / 2.0, gamma_m * (n_th + 0.5)]);
    LinearDynamics::periodic(2, TAU / profile.omega_mod, eval, d)
}

/// Four-mode setup II model plus its two-subsystem normal-mode reduction.
#[derive(Debug)]
pub struct TwoCavityModel {
    /// Lab-frame model on modes `(a1, a2, c1, c2)`.
    pub full: LinearDynamics,
    /// Reduction onto `(d1, b1) = ((a1 + a2), (c1 + c2))/sqrt(2)`, detuning
    /// `delta + j12`.
    pub normal_plus: LinearDynamics,
    /// Reduction onto `(d2, b2)`, detuning `delta - j12`.
    pub normal_minus: LinearDynamics,
}

/// Builds the coupled-cavity model: two identically driven cavities with
/// photon tunneling `j12`, each coupled to its own mechanical mode.
pub fn build_two_cavity_model(
    params: &SystemParams,
    profile: &CouplingProfile,
) -> Result<TwoCavityModel, DynamicsError> {
    params.validate()?;
    if !params.j12.is_finite() {
        return Err(DynamicsError::InvalidParameter(format!(
            "two-cavity model needs finite j12, got {}",
            params.j12
        )));
    }
    if !profile.omega_mod.is_finite() || profile.omega_mod <= 0.0 {
        return Err(DynamicsError::InvalidParameter(String::from(
            "modulation frequency must be positive",
        )));
    }
    let (delta, omega_m, kappa, gamma_m, n_th, j12) = (
        params.delta,
        params.omega_m,
        params.kappa,
        params.gamma_m,
        params.n_th,
        params.j12,
    );
    let p = *profile;
    let half_rates = [kappa / 2.0; 2]
        .into_iter()
        .chain([gamma_m / 2.0; 2])
        .collect::<Vec<_>>();
    let eval = move |t: f64, a: &mut DMatrix<f64>| {
        let mut m = DMatrix::zeros(8, 8);
        for cav in 0..2 {
            m[(2 * cav, 2 * cav)] = delta;
            m[(2 * cav + 1, 2 * cav + 1)] = delta;
            m[(4 + 2 * cav, 4 + 2 * cav)] = omega_m;
            m[(4 + 2 * cav + 1, 4 + 2 * cav + 1)] = omega_m;
            lab_interaction(&mut m, 2 * cav, 4 + 2 * cav, p.value_at(t));
        }
        // Photon tunneling j12 (a1 a2^dag + a1^dag a2) = j12 (x1 x2 + p1 p2).
        for q in 0..2 {
            m[(q, 2 + q)] += j12;
            m[(2 + q, q)] += j12;
        }
        a.copy_from(&hamiltonian_drift(&m));
        subtract_decays(a, &half_rates);
    };
    let d = bath_diffusion(&[
        kappa / 2.0,
        kappa / 2.0,
        gamma_m * (n_th + 0.5),
        gamma_m * (n_th + 0.5),
    ]);
    Ok(TwoCavityModel {
        full: LinearDynamics::periodic(4, TAU / profile.omega_mod, eval, d)?,
        normal_plus: build_full_model(profile, delta + j12, omega_m, kappa, gamma_m, n_th)?,
        normal_minus: build_full_model(profile, delta - j12, omega_m, kappa, gamma_m, n_th)?,
    })
}

fn check_rates(kappa: f64, gamma_m: f64, n_th: f64) -> Result<(), DynamicsError> {
    for (name, v) in [("kappa", kappa), ("gamma_m", gamma_m), ("n_th", n_th)] {
        if !v.is_finite() || v < 0.0 {
            return Err(DynamicsError::InvalidParameter(format!(
                "{name} must be finite and nonnegative, got {v}"
            )));
        }
    }
    Ok(())
}

/// A time series of Gaussian states on an output grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Output times.
    pub times: Vec<f64>,
    /// State at each output time.
    pub states: Vec<GaussianState>,
}

/// Integrates the moment equations from `state` over `t_span`, returning the
/// states at the requested grid times (each covariance symmetrized).
///
/// Uses the embedded adaptive pair at relative tolerance `1e-9`, absolute
/// `1e-12`; grid nodes are hit exactly by step clipping.
pub fn evolve(
    dynamics: &LinearDynamics,
    state: &GaussianState,
    t_span: (f64, f64),
    output_grid: &[f64],
) -> Result<Trajectory, DynamicsError> {
    if state.n_modes() != dynamics.n_modes() {
        return Err(DynamicsError::ModeMismatch {
            model: dynamics.n_modes(),
            state: state.n_modes(),
        });
    }
    let (t0, t1) = t_span;
    if t1.is_nan() || t0.is_nan() || t1 < t0 {
        return Err(DynamicsError::Ode(OdeError::BadGrid(String::from(
            "t_span must be increasing",
        ))));
    }
    if output_grid.iter().any(|&t| t < t0 || t > t1) {
        return Err(DynamicsError::Ode(OdeError::BadGrid(String::from(
            "output grid must lie within t_span",
        ))));
    }
    let dim = 2 * dynamics.n_modes();
    // Packed state: mean (dim entries) followed by row-major covariance.
    let mut y = DVector::zeros(dim + dim * dim);
    for i in 0..dim {
        y[i] = state.mean()[i];
        for j in 0..dim {
            y[dim + i * dim + j] = state.cov()[(i, j)];
        }
    }
    let d = dynamics.diffusion().clone();
    let mut a = DMatrix::zeros(dim, dim);
    let rhs = move |t: f64, y: &DVector<f64>, dy: &mut DVector<f64>| {
        dynamics.drift_into(t, &mut a);
        // d mu = A mu
        for i in 0..dim {
            let mut acc = 0.0;
            for k in 0..dim {
                acc += a[(i, k)] * y[k];
            }
            dy[i] = acc;
        }
        // d V = A V + V A^T + D
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = d[(i, j)];
                for k in 0..dim {
                    acc += a[(i, k)] * y[dim + k * dim + j] + y[dim + i * dim + k] * a[(j, k)];
                }
                dy[dim + i * dim + j] = acc;
            }
        }
    };
    let opts = OdeOptions::with_tolerances(EVOLVE_RTOL, EVOLVE_ATOL);
    let mut times = Vec::with_capacity(output_grid.len());
    let mut states = Vec::with_capacity(output_grid.len());
    let mut first_err: Option<GaussianError> = None;
    let on_node = |_idx: usize, t: f64, y: &DVector<f64>| {
        if first_err.is_some() {
            return;
        }
        let mean = DVector::from_fn(dim, |i, _| y[i]);
        let cov = DMatrix::from_fn(dim, dim, |i, j| y[dim + i * dim + j]);
        match GaussianState::from_parts(mean, cov) {
            Ok(s) => {
                times.push(t);
                states.push(s);
            }
            Err(e) => first_err = Some(e),
        }
    };
    ode::integrate_path(rhs, t0, &mut y, output_grid, &opts, on_node)?;
    if let Some(e) = first_err {
        return Err(DynamicsError::Gaussian(e));
    }
    Ok(Trajectory { times, states })
}

/// Exact stationary solution of `A V + V A^T + D = 0` for a constant Hurwitz
/// drift, via the vectorized dense linear system; the mean is zero.
pub fn steady_state(dynamics: &LinearDynamics) -> Result<GaussianState, DynamicsError> {
    let a = dynamics
        .constant_drift()
        .ok_or(DynamicsError::TimeDependentDrift)?;
    // Hurwitz check first: report the offending eigenvalue if unstable.
    let eigs = a.complex_eigenvalues();
    if let Some(bad) = eigs.iter().find(|e| e.re >= 0.0) {
        return Err(DynamicsError::NonHurwitz {
            re: bad.re,
            im: bad.im,
        });
    }
    let dim = 2 * dynamics.n_modes();
    let n2 = dim * dim;
    // (A (x) I + I (x) A) vec(V) = -vec(D), row-major vec.
    let mut big = DMatrix::zeros(n2, n2);
    for i in 0..dim {
        for j in 0..dim {
            let row = i * dim + j;
            for k in 0..dim {
                big[(row, k * dim + j)] += a[(i, k)];
                big[(row, i * dim + k)] += a[(j, k)];
            }
        }
    }
    let rhs = DVector::from_fn(n2, |idx, _| -dynamics.diffusion()[(idx / dim, idx % dim)]);
    let sol = big
        .lu()
        .solve(&rhs)
        .ok_or_else(|| DynamicsError::InvalidParameter(String::from("singular Lyapunov system")))?;
    let cov = DMatrix::from_fn(dim, dim, |i, j| sol[i * dim + j]);
    Ok(GaussianState::from_parts(DVector::zeros(dim), cov)?)
}

/// Eigenvalues of the (constant) drift matrix, sorted by real part then
/// imaginary part for determinism.
pub fn stability_eigenvalues(dynamics: &LinearDynamics) -> Result<Vec<Complex64>, DynamicsError> {
    let a = dynamics
        .constant_drift()
        .ok_or(DynamicsError::TimeDependentDrift)?;
    let mut eigs: Vec<Complex64> = a.complex_eigenvalues().iter().cloned().collect();
    eigs.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(core::cmp::Ordering::Equal))
    });
    Ok(eigs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const KAPPA: f64 = 0.05;
    const CHI1: f64 = 0.01;
    const CHI2: f64 = 0.03;

    fn reference_profile(phi: f64) -> CouplingProfile {
        CouplingProfile::new(CHI1, CHI2, 2.0, phi).unwrap()
    }

    fn linspace(t0: f64, t1: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect()
    }

    #[test]
    fn decay_only_steady_state_is_vacuum_tensor_thermal() {
        let profile = CouplingProfile::new(0.0, 0.0, 2.0, 0.0).unwrap();
        let n_th = 2.5;
        let dyn_ = build_rwa_model(&profile, KAPPA, 1e-3, n_th).unwrap();
        // Drift is block diagonal, pure decay.
        let a = dyn_.drift_at(0.0);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(a[(i, j)], 0.0);
                }
            }
        }
        let ss = steady_state(&dyn_).unwrap();
        assert_relative_eq!(ss.cov()[(0, 0)], 0.5, max_relative = 1e-12);
        assert_relative_eq!(ss.cov()[(2, 2)], n_th + 0.5, max_relative = 1e-12);
        assert_abs_diff_eq!(ss.cov()[(0, 2)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn pure_beam_splitter_cools_to_joint_vacuum() {
        let profile = CouplingProfile::new(0.0, CHI2, 2.0, 0.0).unwrap();
        let dyn_ = build_rwa_model(&profile, KAPPA, 0.0, 0.0).unwrap();
        let ss = steady_state(&dyn_).unwrap();
        let vac = GaussianState::vacuum(2).unwrap();
        assert!((ss.cov() - vac.cov()).norm() < 1e-12);
    }

    #[test]
    fn diffusion_consistency_single_decaying_mode() {
        let a = DMatrix::identity(2, 2) * (-KAPPA / 2.0);
        let d = DMatrix::identity(2, 2) * (KAPPA / 2.0);
        let dyn_ = LinearDynamics::constant(a, d).unwrap();
        let ss = steady_state(&dyn_).unwrap();
        assert!((ss.cov() - DMatrix::identity(2, 2) * 0.5).norm() < 1e-14);
    }

    #[test]
    fn drift_spectrum_at_the_reference_point() {
        // Honest drift eigenvalues of the amplitude-level moment equations:
        // lambda = -(kappa + gamma)/4 +- sqrt((kappa - gamma)^2/16 - G^2),
        // each twice. At the reference point (gamma = 0, G > kappa/4) the real
        // parts are -kappa/4 and the covariance relaxes at kappa/2, which is
        // the coarse eta eigenvalue real part (see analytics::eta_eigenvalues).
        let dyn_ = build_rwa_model(&reference_profile(0.0), KAPPA, 0.0, 0.0).unwrap();
        let eigs = stability_eigenvalues(&dyn_).unwrap();
        assert_eq!(eigs.len(), 4);
        let g = analytics::transfer_rate(CHI1, CHI2).unwrap();
        let im_expected = (g * g - KAPPA * KAPPA / 16.0).sqrt();
        for e in &eigs {
            assert_abs_diff_eq!(e.re, -KAPPA / 4.0, epsilon = 1e-12);
            assert_abs_diff_eq!(e.im.abs(), im_expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn unstable_when_gain_dominates() {
        let profile = CouplingProfile::new(0.03, 0.01, 2.0, 0.0).unwrap();
        let dyn_ = build_rwa_model(&profile, KAPPA, 0.0, 0.0).unwrap();
        match steady_state(&dyn_) {
            Err(DynamicsError::NonHurwitz { re, .. }) => assert!(re >= 0.0),
            other => panic!("expected NonHurwitz, got {other:?}"),
        }
    }

    #[test]
    fn lyapunov_steady_state_matches_closed_form_moments() {
        // The steady mechanical moments of the RWA model must reproduce the
        // closed-form two-mode squeezed thermal expressions exactly.
        for &(kappa, gamma, n_th, chi1, chi2, phi) in &[
            (0.05, 1e-4, 3.0, 0.01, 0.03, 0.0),
            (0.05, 2e-3, 0.5, 0.02, 0.03, 1.0471975511965976),
            (0.142857, 0.02, 5.0, 0.1, 0.2, 0.62831853),
            (0.05, 1e-4, 50.0, 0.024, 0.03, 4.0),
        ] {
            let profile = CouplingProfile::new(chi1, chi2, 2.0, phi).unwrap();
            let dyn_ = build_rwa_model(&profile, kappa, gamma, n_th).unwrap();
            let ss = steady_state(&dyn_).unwrap();
            let (n_b, m_b) = ss.mode_moments(1).unwrap();

            let r = analytics::squeeze_param(chi1, chi2).unwrap();
            let g = analytics::transfer_rate(chi1, chi2).unwrap();
            let d0 = analytics::d0(kappa, gamma, g).unwrap();
            let (n_pred, m_pred) = analytics::steady_moments(r, phi, d0, n_th);
            assert_relative_eq!(n_b, n_pred, max_relative = 1e-11);
            assert!((m_b - m_pred).norm() <= 1e-11 * m_pred.norm().max(1.0));
        }
    }

    #[test]
    fn kappa_zero_steady_state_is_thermal() {
        let n_th = 3.0;
        let dyn_ = build_rwa_model(&reference_profile(0.0), 0.0, 0.01, n_th).unwrap();
        let ss = steady_state(&dyn_).unwrap();
        let (n_b, m_b) = ss.mode_moments(1).unwrap();
        assert_relative_eq!(n_b, n_th, max_relative = 1e-11);
        assert_abs_diff_eq!(m_b.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn evolve_converges_to_steady_state() {
        let dyn_ = build_rwa_model(&reference_profile(0.3), KAPPA, 1e-4, 1.0).unwrap();
        let ss = steady_state(&dyn_).unwrap();
        let slowest = stability_eigenvalues(&dyn_)
            .unwrap()
            .iter()
            .map(|e| e.re.abs())
            .fold(f64::INFINITY, f64::min);
        let t_end = 20.0 / slowest;
        let init = GaussianState::vacuum(1).unwrap().tensor(&GaussianState::thermal(&[1.0]).unwrap());
        let traj = evolve(&dyn_, &init, (0.0, t_end), &[t_end]).unwrap();
        let diff = (traj.states[0].cov() - ss.cov())
            .iter()
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(diff < 1e-7, "max-norm covariance gap {diff}");
    }

    #[test]
    fn hamiltonian_flow_preserves_purity() {
        // D = 0, no damping: symplectic flow keeps the state pure.
        let dyn_ = build_rwa_model(&reference_profile(0.8), 0.0, 0.0, 0.0).unwrap();
        let init = GaussianState::vacuum(2).unwrap();
        let grid = linspace(0.0, 60.0, 12);
        let traj = evolve(&dyn_, &init, (0.0, 60.0), &grid).unwrap();
        for s in &traj.states {
            assert_abs_diff_eq!(s.purity().unwrap(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn rwa_steady_mechanical_marginal_is_squeezed_vacuum() {
        // Reference point: chi = (0.01, 0.03), kappa = 0.05, gamma_m = 0:
        // mechanical marginal tends to the squeezed vacuum with
        // e^{-2r}/2 = 0.25 and e^{+2r}/2 = 1.0.
        let dyn_ = build_rwa_model(&reference_profile(0.0), KAPPA, 0.0, 0.0).unwrap();
        let init = GaussianState::vacuum(2).unwrap();
        let t_end = 1600.0;
        let traj = evolve(&dyn_, &init, (0.0, t_end), &[t_end]).unwrap();
        let mech = traj.states[0].marginal(&[1]).unwrap();
        let (lo, hi) = mech.principal_variances().unwrap();
        assert_relative_eq!(lo, 0.25, max_relative = 1e-7);
        assert_relative_eq!(hi, 1.0, max_relative = 1e-7);
    }

    #[test]
    fn mechanical_only_thermalization() {
        let profile = CouplingProfile::new(0.0, 0.0, 2.0, 0.0).unwrap();
        let n_th = 1.8;
        let dyn_ = build_rwa_model(&profile, 0.0, 0.02, n_th).unwrap();
        // Cavity block undamped: no steady state for the joint model.
        assert!(matches!(
            steady_state(&dyn_),
            Err(DynamicsError::NonHurwitz { .. })
        ));
        // The mechanical marginal still thermalizes along the trajectory.
        let init = GaussianState::vacuum(2).unwrap();
        let t_end = 20.0 / 0.01;
        let traj = evolve(&dyn_, &init, (0.0, t_end), &[t_end]).unwrap();
        let mech = traj.states[0].marginal(&[1]).unwrap();
        assert_relative_eq!(mech.cov()[(0, 0)], n_th + 0.5, max_relative = 1e-7);
        assert_relative_eq!(mech.cov()[(1, 1)], n_th + 0.5, max_relative = 1e-7);
    }

    #[test]
    fn full_model_free_oscillation_and_decay() {
        // chi = 0: cavity mean rotates at -delta and decays at kappa/2.
        let profile = CouplingProfile::new(0.0, 0.0, 2.0, 0.0).unwrap();
        let delta = 1.0;
        let dyn_ = build_full_model(&profile, delta, 1.0, KAPPA, 0.0, 0.0).unwrap();
        let mut mean = DVector::zeros(4);
        mean[0] = 1.0;
        let init = GaussianState::from_parts(mean, DMatrix::identity(4, 4) * 0.5).unwrap();
        let t = 7.3;
        let traj = evolve(&dyn_, &init, (0.0, t), &[t]).unwrap();
        let m = traj.states[0].mean();
        let damp = (-KAPPA / 2.0 * t).exp();
        assert_relative_eq!(m[0], damp * (delta * t).cos(), max_relative = 1e-7);
        assert_relative_eq!(m[1], -damp * (delta * t).sin(), max_relative = 1e-7);
        assert_abs_diff_eq!(m[2], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn two_cavity_model_with_zero_tunneling_decouples() {
        // j12 = 0: the four-mode model is two uncoupled copies of the
        // two-mode lab-frame model.
        let params = SystemParams {
            omega_m: 1.0,
            kappa: KAPPA,
            gamma_m: 1e-3,
            n_th: 0.5,
            g: 1e-6,
            pump: Vec::new(),
            j12: 0.0,
            delta: 1.0,
        };
        let profile = reference_profile(0.2);
        let model = build_two_cavity_model(&params, &profile).unwrap();
        let single = build_full_model(&profile, 1.0, 1.0, KAPPA, 1e-3, 0.5).unwrap();
        let init4 = GaussianState::vacuum(2)
            .unwrap()
            .tensor(&GaussianState::thermal(&[0.5, 0.5]).unwrap());
        let init2 = GaussianState::vacuum(1)
            .unwrap()
            .tensor(&GaussianState::thermal(&[0.5]).unwrap());
        let t = 60.0;
        let four = evolve(&model.full, &init4, (0.0, t), &[t]).unwrap();
        let two = evolve(&single, &init2, (0.0, t), &[t]).unwrap();
        // Subsystem (a1, c1) of the four-mode run equals the two-mode run.
        let sub = four.states[0].marginal(&[0, 2]).unwrap();
        assert!((sub.cov() - two.states[0].cov()).norm() < 1e-9);
        // No cross correlations between the two copies.
        let (cross, cross_dag) = four.states[0]
            .marginal(&[2, 3])
            .unwrap()
            .cross_moments(0, 1)
            .unwrap();
        assert!(cross.norm() < 1e-12 && cross_dag.norm() < 1e-12);
    }

    #[test]
    fn steady_state_requires_constant_drift() {
        let dyn_ = build_full_model(&reference_profile(0.0), 1.0, 1.0, KAPPA, 0.0, 0.0).unwrap();
        assert!(matches!(
            steady_state(&dyn_),
            Err(DynamicsError::TimeDependentDrift)
        ));
        assert!(dyn_.is_time_dependent());
        assert_relative_eq!(dyn_.period().unwrap(), core::f64::consts::PI, max_relative = 1e-14);
    }

    #[test]
    fn evolve_checks_mode_count_and_grid() {
        let dyn_ = build_rwa_model(&reference_profile(0.0), KAPPA, 0.0, 0.0).unwrap();
        let one_mode = GaussianState::vacuum(1).unwrap();
        assert!(matches!(
            evolve(&dyn_, &one_mode, (0.0, 1.0), &[1.0]),
            Err(DynamicsError::ModeMismatch { .. })
        ));
        let two = GaussianState::vacuum(2).unwrap();
        assert!(evolve(&dyn_, &two, (0.0, 1.0), &[2.0]).is_err());
    }
}
