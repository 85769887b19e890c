//! Classical pump-field dynamics, perturbative solutions, pump-phase
//! bookkeeping and membrane-geometry couplings.
//!
//! The mean-field equations follow the classical-amplitude convention with
//! cavity amplitude decay `kappa` (not `kappa/2`):
//!
//! ```text
//! d alpha/dt = -[kappa + i delta + i g (beta + beta^*)] alpha + E(t)
//! d beta/dt  = -(gamma_m + i omega_m) beta - i g |alpha|^2
//! ```
//!
//! The quantum moment equations in [`crate::dynamics`] use amplitude decay
//! `kappa/2` instead; the two conventions are deliberately kept as written in
//! their respective sources and are not reconciled here. Reports carry both.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dynamics::{CouplingProfile, DriveSpec, SystemParams};
use crate::ode::{self, OdeError, OdeOptions};

/// Relative tolerance of the mean-field integration.
pub const MEANFIELD_RTOL: f64 = 1e-10;
/// Cavity amplitudes beyond this are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Errors from mean-field integration and geometry solving.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanFieldError {
    /// Cavity amplitude exceeded [`DIVERGENCE_LIMIT`].
    Divergence {
        /// Time at which the divergence was detected.
        t: f64,
    },
    /// Integration failure.
    Ode(OdeError),
    /// The perturbative formulas are only valid on resonance
    /// (`delta = omega_m`, `Omega = 2 omega_m`, `omega_m >> gamma_m`).
    OffResonance(String),
    /// No membrane placement met the residual tolerance.
    NoSolution {
        /// Best residual found on the grid after refinement.
        best_residual: f64,
    },
    /// Invalid parameter or geometry.
    InvalidParameter(String),
}

impl fmt::Display for MeanFieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanFieldError::Divergence { t } => {
                write!(f, "cavity amplitude diverged (|alpha| > {DIVERGENCE_LIMIT:e}) at t = {t}")
            }
            MeanFieldError::Ode(e) => write!(f, "integration failed: {e}"),
            MeanFieldError::OffResonance(msg) => {
                write!(f, "perturbative solution invalid off-resonance: {msg}")
            }
            MeanFieldError::NoSolution { best_residual } => write!(
                f,
                "no membrane placement within tolerance (best residual {best_residual:.3e})"
            ),
            MeanFieldError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl core::error::Error for MeanFieldError {}

impl From<OdeError> for MeanFieldError {
    fn from(e: OdeError) -> Self {
        MeanFieldError::Ode(e)
    }
}

/// Classical cavity and mechanical amplitudes on a time grid, one series per
/// pump in [`SystemParams::pump`].
#[derive(Debug, Clone)]
pub struct MeanFieldTrajectory {
    /// Strictly increasing time grid.
    pub times: Vec<f64>,
    /// `alpha[j][i]` is the cavity amplitude of subsystem `j` at `times[i]`.
    pub alpha: Vec<Vec<Complex64>>,
    /// Mechanical amplitudes, same layout.
    pub beta: Vec<Vec<Complex64>>,
}

/// Integrates the classical pump-field equations from `alpha = beta = 0`
/// for every pump in `params.pump`, sampling `n_grid + 1` uniform nodes on
/// `[0, t_end]`.
pub fn integrate_meanfield(
    params: &SystemParams,
    t_end: f64,
    n_grid: usize,
) -> Result<MeanFieldTrajectory, MeanFieldError> {
    params
        .validate()
        .map_err(|e| MeanFieldError::InvalidParameter(format!("{e}")))?;
    if !t_end.is_finite() || t_end <= 0.0 || n_grid == 0 {
        return Err(MeanFieldError::InvalidParameter(String::from(
            "need t_end > 0 and at least one grid interval",
        )));
    }
    if params.pump.is_empty() {
        return Err(MeanFieldError::InvalidParameter(String::from(
            "no pump drives configured",
        )));
    }
    let times: Vec<f64> = (0..=n_grid)
        .map(|i| t_end * i as f64 / n_grid as f64)
        .collect();
    let mut alpha = Vec::with_capacity(params.pump.len());
    let mut beta = Vec::with_capacity(params.pump.len());
    let opts = OdeOptions::with_tolerances(MEANFIELD_RTOL, 1e-8);
    for drive in &params.pump {
        let (kappa, delta, g, gamma, omega_m) = (
            params.kappa,
            params.delta,
            params.g,
            params.gamma_m,
            params.omega_m,
        );
        let drive = *drive;
        let rhs = move |t: f64, y: &DVector<f64>, dy: &mut DVector<f64>| {
            let a = Complex64::new(y[0], y[1]);
            let b = Complex64::new(y[2], y[3]);
            let pump1 = Complex64::from_polar(drive.e1, -(drive.omega_mod * t - drive.phi1));
            let pump2 = Complex64::from_polar(drive.e2, drive.phi2);
            let da = -(Complex64::new(kappa, delta + g * (b + b.conj()).re)) * a + pump1 + pump2;
            let db = -(Complex64::new(gamma, omega_m)) * b - Complex64::i() * g * a.norm_sqr();
            dy[0] = da.re;
            dy[1] = da.im;
            dy[2] = db.re;
            dy[3] = db.im;
        };
        let mut y = DVector::zeros(4);
        let mut a_series = Vec::with_capacity(times.len());
        let mut b_series = Vec::with_capacity(times.len());
        let mut diverged_at: Option<f64> = None;
        ode::integrate_path(rhs, 0.0, &mut y, &times, &opts, |_i, t, y| {
            let a = Complex64::new(y[0], y[1]);
            if a.norm() > DIVERGENCE_LIMIT && diverged_at.is_none() {
                diverged_at = Some(t);
            }
            a_series.push(a);
            b_series.push(Complex64::new(y[2], y[3]));
        })?;
        if let Some(t) = diverged_at {
            return Err(MeanFieldError::Divergence { t });
        }
        alpha.push(a_series);
        beta.push(b_series);
    }
    Ok(MeanFieldTrajectory { times, alpha, beta })
}

/// Perturbative long-time amplitudes at order `g^0`, `g^2` (cavity) and `g^1`
/// (mechanics).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbativeAmplitudes {
    /// Zeroth-order cavity amplitude `alpha^(0)(t)`.
    pub alpha0: Complex64,
    /// Second-order cavity correction `alpha^(2)(t)`.
    pub alpha2: Complex64,
    /// First-order mechanical amplitude `beta^(1)(t)`.
    pub beta1: Complex64,
}

fn polar(amp: f64, phase: f64) -> Complex64 {
    Complex64::from_polar(amp, phase)
}

/// Evaluates the closed-form perturbative solution for pump `j` at time `t`.
///
/// Valid for `t >> 1/kappa` on resonance (`delta = omega_m`,
/// `Omega = 2 omega_m`) with `omega_m >> gamma_m`; anything else is refused.
pub fn perturbative_solution(
    params: &SystemParams,
    j: usize,
    t: f64,
) -> Result<PerturbativeAmplitudes, MeanFieldError> {
    let drive = params
        .pump
        .get(j)
        .ok_or_else(|| MeanFieldError::InvalidParameter(format!("no pump with index {j}")))?;
    let (omega_m, kappa, gamma) = (params.omega_m, params.kappa, params.gamma_m);
    if (params.delta - omega_m).abs() > 1e-9 * omega_m {
        return Err(MeanFieldError::OffResonance(format!(
            "delta = {} but omega_m = {omega_m}",
            params.delta
        )));
    }
    if (drive.omega_mod - 2.0 * omega_m).abs() > 1e-9 * omega_m {
        return Err(MeanFieldError::OffResonance(format!(
            "Omega = {} but 2 omega_m = {}",
            drive.omega_mod,
            2.0 * omega_m
        )));
    }
    if gamma > 1e-2 * omega_m {
        return Err(MeanFieldError::OffResonance(format!(
            "gamma_m = {gamma} is not << omega_m = {omega_m}"
        )));
    }
    let omega = drive.omega_mod;
    let (e1, e2) = (drive.e1, drive.e2);
    let g = params.g;
    let s2 = kappa * kappa + omega_m * omega_m;
    let s = s2.sqrt();
    let phi = drive.phi1 + drive.phi2;

    let alpha0 = polar(e1 / s, -(omega * t - phi)) + Complex64::new(e2 / s, 0.0);

    let i = Complex64::i();
    let pref = 2.0 * g * g / (3.0 * omega_m * s2 * s2);
    let alpha2 = i * pref * e2 * (2.0 * e1 * e1 + 3.0 * e2 * e2) * polar(1.0, -(phi - drive.phi1))
        + i * pref
            * e1
            * (3.0 * e1 * e1 + 2.0 * e2 * e2)
            * polar(1.0, -(omega * t - (2.0 * phi - drive.phi1)))
        - i * pref * e1 * e2 * e2 * polar(1.0, omega * t - drive.phi1)
        - i * 2.0 * g * g * e1 * e1 * e2
            / (3.0 * omega_m * s2 * s * Complex64::new(kappa, -3.0 * omega_m))
            * polar(1.0, -2.0 * (omega * t - phi));

    let beta1 = Complex64::new(-g * (e1 * e1 + e2 * e2) / (omega_m * s2), 0.0)
        - g * e1 * e2 / (3.0 * omega_m * s2) * polar(1.0, omega * t - phi)
        + g * e1 * e2 / (omega_m * s2) * polar(1.0, -(omega * t - phi));

    Ok(PerturbativeAmplitudes {
        alpha0,
        alpha2,
        beta1,
    })
}

/// Laser phases for one drive pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpPhases {
    /// Modulated-tone phase of pump 1.
    pub phi11: f64,
    /// Constant-tone phase of pump 1.
    pub phi12: f64,
    /// Modulated-tone phase of pump 2.
    pub phi21: f64,
    /// Constant-tone phase of pump 2.
    pub phi22: f64,
}

/// Laser phases that realize effective coupling phases `phi_1 = phi_target1`
/// and `phi_2 = phi_target1 + pi`: `phi_j2 = arctan(omega_m / kappa)`,
/// `phi_21 - phi_11 = pi`.
pub fn phase_conditions(
    kappa: f64,
    omega_m: f64,
    phi_target1: f64,
) -> Result<PumpPhases, MeanFieldError> {
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(MeanFieldError::InvalidParameter(format!(
            "phase conditions need kappa > 0, got {kappa}"
        )));
    }
    let phi_j2 = (omega_m / kappa).atan();
    let phi11 = phi_target1 - phi_j2;
    Ok(PumpPhases {
        phi11,
        phi12: phi_j2,
        phi21: phi11 + core::f64::consts::PI,
        phi22: phi_j2,
    })
}

/// Effective coupling profile of a drive:
/// `chi_k = g E_k / sqrt(kappa^2 + omega_m^2)`, `phi = phi_1 + phi_2`.
///
/// Assumes the resonance conditions `delta = omega_m`, `Omega = 2 omega_m`
/// and constant-tone phase `phi_2 = arctan(omega_m / kappa)` under which the
/// zeroth-order cavity response takes the two-tone form.
pub fn chi_from_drive(g: f64, drive: &DriveSpec, kappa: f64, omega_m: f64) -> CouplingProfile {
    let s = (kappa * kappa + omega_m * omega_m).sqrt();
    CouplingProfile {
        chi1: g * drive.e1 / s,
        chi2: g * drive.e2 / s,
        omega_mod: drive.omega_mod,
        phi: drive.phi1 + drive.phi2,
    }
}

/// Complex tone amplitudes fitted to a time series by linear least squares
/// against the basis `{1, e^{-i w t}, e^{+i w t}, e^{-2i w t}, e^{+2i w t}}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneFit {
    /// DC component.
    pub dc: Complex64,
    /// Coefficient of `e^{-i w t}`.
    pub minus: Complex64,
    /// Coefficient of `e^{+i w t}`.
    pub plus: Complex64,
    /// Coefficient of `e^{-2i w t}`.
    pub minus2: Complex64,
    /// Coefficient of `e^{+2i w t}`.
    pub plus2: Complex64,
}

/// Least-squares coefficients of `sum_k c_k e^{+i f_k t}` for the signed
/// frequencies `freqs`, fitted to `values(times)`.
pub fn fit_frequencies(
    times: &[f64],
    values: &[Complex64],
    freqs: &[f64],
) -> Result<Vec<Complex64>, MeanFieldError> {
    let n = freqs.len();
    if times.len() != values.len() || times.len() < n || n == 0 {
        return Err(MeanFieldError::InvalidParameter(String::from(
            "tone fit needs at least as many samples as frequencies",
        )));
    }
    let mut gram = DMatrix::<Complex64>::zeros(n, n);
    let mut rhs = DVector::<Complex64>::zeros(n);
    let mut basis = alloc::vec![Complex64::new(0.0, 0.0); n];
    for (&t, &v) in times.iter().zip(values.iter()) {
        for (k, &f) in freqs.iter().enumerate() {
            basis[k] = polar(1.0, f * t);
        }
        for r in 0..n {
            rhs[r] += basis[r].conj() * v;
            for c in 0..n {
                gram[(r, c)] += basis[r].conj() * basis[c];
            }
        }
    }
    let sol = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| MeanFieldError::InvalidParameter(String::from("singular tone-fit system")))?;
    Ok(sol.iter().cloned().collect())
}

/// Fits the five-tone basis `{1, e^{-+i w t}, e^{-+2i w t}}`; `times` and
/// `values` must have equal length of at least 5.
pub fn fit_tones(
    times: &[f64],
    values: &[Complex64],
    omega: f64,
) -> Result<ToneFit, MeanFieldError> {
    let sol = fit_frequencies(
        times,
        values,
        &[0.0, -omega, omega, -2.0 * omega, 2.0 * omega],
    )?;
    Ok(ToneFit {
        dc: sol[0],
        minus: sol[1],
        plus: sol[2],
        minus2: sol[3],
        plus2: sol[4],
    })
}

/// Membrane-in-the-middle geometry of setup I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneGeometry {
    /// Cavity length `L`.
    pub length: f64,
    /// Membrane mass `m` (identical membranes).
    pub mass: f64,
    /// Mechanical frequency entering the zero-point scale.
    pub omega_m: f64,
    /// Reflection coefficients of the two membranes, each in `(0, 1)`.
    pub reflectivity: [f64; 2],
    /// Equilibrium positions, each in `(0, L)`.
    pub positions: [f64; 2],
    /// Wave numbers of the two cavity modes.
    pub wavenumbers: [f64; 2],
    /// Frequencies of the two cavity modes.
    pub cavity_freqs: [f64; 2],
}

impl MembraneGeometry {
    /// Validates the geometric invariants.
    pub fn validate(&self) -> Result<(), MeanFieldError> {
        if [self.length, self.mass, self.omega_m].iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(MeanFieldError::InvalidParameter(String::from(
                "length, mass and omega_m must be positive",
            )));
        }
        for &r in &self.reflectivity {
            if r.is_nan() || r <= 0.0 || r >= 1.0 {
                return Err(MeanFieldError::InvalidParameter(format!(
                    "reflectivity must lie in (0, 1), got {r}"
                )));
            }
        }
        for &x in &self.positions {
            if x.is_nan() || x <= 0.0 || x >= self.length {
                return Err(MeanFieldError::InvalidParameter(format!(
                    "membrane position {x} outside (0, {})",
                    self.length
                )));
            }
        }
        Ok(())
    }
}

/// Membrane mode function
/// `f(R, k, x) = 2 R sin(2 k x) / sqrt(1 - R^2 cos^2(2 k x))`.
pub fn membrane_mode_function(reflectivity: f64, wavenumber: f64, x: f64) -> f64 {
    let arg = 2.0 * wavenumber * x;
    let c = arg.cos();
    2.0 * reflectivity * arg.sin() / (1.0 - reflectivity * reflectivity * c * c).sqrt()
}

/// Single-photon couplings `g_jk = omega_cj f_jk(x_k) / (L sqrt(m omega_m))`
/// (row `j`: cavity mode, column `k`: membrane).
pub fn coupling_from_geometry(geom: &MembraneGeometry) -> Result<Matrix2<f64>, MeanFieldError> {
    geom.validate()?;
    let scale = geom.length * (geom.mass * geom.omega_m).sqrt();
    let mut g = Matrix2::zeros();
    for j in 0..2 {
        for k in 0..2 {
            g[(j, k)] = geom.cavity_freqs[j]
                * membrane_mode_function(
                    geom.reflectivity[k],
                    geom.wavenumbers[j],
                    geom.positions[k],
                )
                / scale;
        }
    }
    Ok(g)
}

/// Finds membrane positions with `g_11 = g_12` and `g_21 = -g_22` by a
/// 10^4-point-per-axis grid scan followed by Newton refinement of the
/// residual `(g_11 - g_12, g_21 + g_22)`.
///
/// The `positions` field of `geom` is ignored; the returned pair satisfies
/// `|residual| < tolerance * max|g|` or [`MeanFieldError::NoSolution`] is
/// raised.
pub fn solve_membrane_positions(
    geom: &MembraneGeometry,
    tolerance: f64,
) -> Result<(f64, f64), MeanFieldError> {
    let mut probe = *geom;
    probe.positions = [geom.length / 2.0, geom.length / 2.0];
    probe.validate()?;
    if geom.wavenumbers[0] == geom.wavenumbers[1] {
        return Err(MeanFieldError::InvalidParameter(String::from(
            "cavity wavenumbers must differ",
        )));
    }
    let scale = geom.length * (geom.mass * geom.omega_m).sqrt();
    // Residual components depend on one position each:
    //   p(x1) = (g_11(x1), g_21(x1)),  q(x2) = (g_12(x2), -g_22(x2)).
    let p1 = |x: f64| {
        geom.cavity_freqs[0] * membrane_mode_function(geom.reflectivity[0], geom.wavenumbers[0], x)
            / scale
    };
    let p2 = |x: f64| {
        geom.cavity_freqs[1] * membrane_mode_function(geom.reflectivity[0], geom.wavenumbers[1], x)
            / scale
    };
    let q1 = |x: f64| {
        geom.cavity_freqs[0] * membrane_mode_function(geom.reflectivity[1], geom.wavenumbers[0], x)
            / scale
    };
    let q2 = |x: f64| {
        -geom.cavity_freqs[1] * membrane_mode_function(geom.reflectivity[1], geom.wavenumbers[1], x)
            / scale
    };

    const N: usize = 10_000;
    let xs: Vec<f64> = (1..N).map(|i| geom.length * i as f64 / N as f64).collect();
    let pv: Vec<(f64, f64)> = xs.iter().map(|&x| (p1(x), p2(x))).collect();
    let qv: Vec<(f64, f64)> = xs.iter().map(|&x| (q1(x), q2(x))).collect();
    let mut best = (f64::INFINITY, 0usize, 0usize);
    for (i, &(a, b)) in pv.iter().enumerate() {
        for (j, &(c, d)) in qv.iter().enumerate() {
            let r = (a - c) * (a - c) + (b - d) * (b - d);
            if r < best.0 {
                best = (r, i, j);
            }
        }
    }
    let (mut x1, mut x2) = (xs[best.1], xs[best.2]);

    // Newton refinement with finite-difference Jacobian.
    let resid = |x1: f64, x2: f64| (p1(x1) - q1(x2), p2(x1) - q2(x2));
    let h = 1e-7 * geom.length;
    for _ in 0..60 {
        let (r1, r2) = resid(x1, x2);
        let norm = (r1 * r1 + r2 * r2).sqrt();
        if norm < 1e-14 {
            break;
        }
        let (r1a, r2a) = resid(x1 + h, x2);
        let (r1b, r2b) = resid(x1, x2 + h);
        let j11 = (r1a - r1) / h;
        let j21 = (r2a - r2) / h;
        let j12 = (r1b - r1) / h;
        let j22 = (r2b - r2) / h;
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-30 {
            break;
        }
        let dx1 = (r1 * j22 - r2 * j12) / det;
        let dx2 = (j11 * r2 - j21 * r1) / det;
        let clamp = geom.length * 2.0 / N as f64;
        x1 -= dx1.clamp(-clamp, clamp);
        x2 -= dx2.clamp(-clamp, clamp);
        x1 = x1.clamp(1e-9 * geom.length, (1.0 - 1e-9) * geom.length);
        x2 = x2.clamp(1e-9 * geom.length, (1.0 - 1e-9) * geom.length);
    }
    let (r1, r2) = resid(x1, x2);
    let residual = (r1 * r1 + r2 * r2).sqrt();
    let g_scale = [p1(x1).abs(), p2(x1).abs(), q1(x2).abs(), q2(x2).abs()]
        .into_iter()
        .fold(0.0f64, f64::max);
    if residual < tolerance * g_scale.max(f64::MIN_POSITIVE) {
        Ok((x1, x2))
    } else {
        Err(MeanFieldError::NoSolution {
            best_residual: residual,
        })
    }
}
