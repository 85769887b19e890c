//! Brute-force master-equation integration in a truncated Fock space.
//!
//! This is the validation oracle for the Gaussian engine: the constant
//! rotating-frame model (cavity `a`, mechanical `b`, Hamiltonian
//! `(chi1 e^{-i phi} b + chi2 b^dag) a + h.c.`) is integrated as a full
//! density matrix with Lindblad dissipators
//! `kappa D[a] + gamma_m (n_th + 1) D[b] + gamma_m n_th D[b^dag]`,
//! `D[L] rho = L rho L^dag - {L^dag L, rho}/2`. The Liouvillian is applied
//! term by term with ladder-operator index arithmetic (`O(d^2)` per
//! evaluation), never as dense superoperator algebra, which keeps the
//! default truncation cheap enough to run inside the test suite.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dynamics::CouplingProfile;
use crate::gaussian::{GaussianState, PairMoments};
use crate::ode::{self, OdeError, OdeOptions};

/// Population allowed in the top Fock level before the truncation is deemed
/// leaky.
pub const LEAK_TOL: f64 = 1e-6;

/// Errors from Fock-space evolution.
#[derive(Debug, Clone, PartialEq)]
pub enum FockError {
    /// Truncation too small: top-level population exceeded [`LEAK_TOL`].
    TruncationLeak {
        /// Summed top-level population (cavity and mechanical).
        population: f64,
    },
    /// Trace drifted more than `1e-6` from 1 during integration.
    TraceDrift {
        /// `|tr rho - 1|` observed.
        drift: f64,
    },
    /// Density matrix failed a structural invariant.
    InvalidDensity(String),
    /// Configuration rejected.
    InvalidConfig(String),
    /// Integration failure.
    Ode(OdeError),
    /// Bridge to the Gaussian representation failed.
    Moments(String),
}

impl fmt::Display for FockError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FockError::TruncationLeak { population } => write!(
                f,
                "truncation leak: top Fock level holds {population:.3e} (> {LEAK_TOL:e})"
            ),
            FockError::TraceDrift { drift } => {
                write!(f, "trace drifted by {drift:.3e} during integration")
            }
            FockError::InvalidDensity(msg) => write!(f, "invalid density operator: {msg}"),
            FockError::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            FockError::Ode(e) => write!(f, "integration failed: {e}"),
            FockError::Moments(msg) => write!(f, "moment extraction failed: {msg}"),
        }
    }
}

impl core::error::Error for FockError {}

impl From<OdeError> for FockError {
    fn from(e: OdeError) -> Self {
        FockError::Ode(e)
    }
}

/// Truncation dimensions, integrator tolerances and evolution time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockConfig {
    /// Cavity Fock-space dimension.
    pub dim_cavity: usize,
    /// Mechanical Fock-space dimension.
    pub dim_mech: usize,
    /// Relative integrator tolerance.
    pub rtol: f64,
    /// Absolute integrator tolerance.
    pub atol: f64,
    /// Evolution time.
    pub t_end: f64,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self {
            dim_cavity: 12,
            dim_mech: 12,
            rtol: 1e-8,
            atol: 1e-10,
            t_end: 600.0,
        }
    }
}

impl FockConfig {
    fn validate(&self) -> Result<(), FockError> {
        if self.dim_cavity < 4 || self.dim_mech < 4 {
            return Err(FockError::InvalidConfig(format!(
                "truncation dimensions must be at least 4, got ({}, {})",
                self.dim_cavity, self.dim_mech
            )));
        }
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return Err(FockError::InvalidConfig(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        Ok(())
    }
}

/// Density matrix on the composite space `cavity (x) mechanics`,
/// index `i = i_a * dim_mech + i_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    dim_cavity: usize,
    dim_mech: usize,
    rho: DMatrix<Complex64>,
}

impl DensityOperator {
    /// Joint vacuum `|0_a 0_b>`.
    pub fn vacuum(cfg: &FockConfig) -> Result<Self, FockError> {
        cfg.validate()?;
        let d = cfg.dim_cavity * cfg.dim_mech;
        let mut rho = DMatrix::zeros(d, d);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        Ok(Self {
            dim_cavity: cfg.dim_cavity,
            dim_mech: cfg.dim_mech,
            rho,
        })
    }

    /// Cavity vacuum tensored with a (truncated, renormalized) mechanical
    /// thermal state of mean occupation `n_bar`.
    pub fn cavity_vacuum_mech_thermal(cfg: &FockConfig, n_bar: f64) -> Result<Self, FockError> {
        cfg.validate()?;
        if !n_bar.is_finite() || n_bar < 0.0 {
            return Err(FockError::InvalidConfig(format!(
                "thermal occupation must be nonnegative, got {n_bar}"
            )));
        }
        let d = cfg.dim_cavity * cfg.dim_mech;
        let mut rho = DMatrix::zeros(d, d);
        let ratio = n_bar / (n_bar + 1.0);
        let mut w = 1.0 / (n_bar + 1.0);
        let mut total = 0.0;
        let mut weights = Vec::with_capacity(cfg.dim_mech);
        for _ in 0..cfg.dim_mech {
            weights.push(w);
            total += w;
            w *= ratio;
        }
        for (nb, w) in weights.iter().enumerate() {
            rho[(nb, nb)] = Complex64::new(w / total, 0.0);
        }
        Ok(Self {
            dim_cavity: cfg.dim_cavity,
            dim_mech: cfg.dim_mech,
            rho,
        })
    }

    /// Builds from a raw matrix, validating Hermiticity (`1e-10`), unit trace
    /// (`1e-8`) and positivity (eigenvalues `>= -1e-8`).
    pub fn from_matrix(
        dim_cavity: usize,
        dim_mech: usize,
        rho: DMatrix<Complex64>,
    ) -> Result<Self, FockError> {
        let d = dim_cavity * dim_mech;
        if rho.nrows() != d || rho.ncols() != d {
            return Err(FockError::InvalidDensity(format!(
                "matrix is {}x{}, expected {d}x{d}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let op = Self {
            dim_cavity,
            dim_mech,
            rho,
        };
        op.validate()?;
        Ok(op)
    }

    /// Checks Hermiticity, trace and positivity invariants.
    pub fn validate(&self) -> Result<(), FockError> {
        let herm = (&self.rho - self.rho.adjoint())
            .iter()
            .fold(0.0f64, |a, v| a.max(v.norm()));
        if herm > 1e-10 {
            return Err(FockError::InvalidDensity(format!(
                "Hermiticity violated by {herm:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-8 {
            return Err(FockError::InvalidDensity(format!(
                "trace {tr} is not 1 within 1e-8"
            )));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -1e-8 {
            return Err(FockError::InvalidDensity(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    /// Real part of the trace (the imaginary part is zero for valid states).
    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|v| v.re).sum()
    }

    /// Purity `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // tr(rho^2) = sum_ij |rho_ij|^2 for Hermitian rho.
        self.rho.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Smallest eigenvalue, via the real embedding of the Hermitian matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.rho.nrows();
        let mut em = DMatrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                let v = self.rho[(i, j)];
                em[(i, j)] = v.re;
                em[(d + i, d + j)] = v.re;
                em[(i, d + j)] = -v.im;
                em[(d + i, j)] = v.im;
            }
        }
        em.symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Summed population of the top cavity and top mechanical Fock levels.
    pub fn top_level_population(&self) -> f64 {
        let (da, db) = (self.dim_cavity, self.dim_mech);
        let mut pop = 0.0;
        for ib in 0..db {
            pop += self.rho[((da - 1) * db + ib, (da - 1) * db + ib)].re;
        }
        for ia in 0..da {
            pop += self.rho[(ia * db + db - 1, ia * db + db - 1)].re;
        }
        pop
    }

    /// Cavity dimension.
    pub fn dim_cavity(&self) -> usize {
        self.dim_cavity
    }

    /// Mechanical dimension.
    pub fn dim_mech(&self) -> usize {
        self.dim_mech
    }

    /// Raw matrix access.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }
}

/// The Liouvillian terms, applied with index arithmetic.
struct Liouvillian {
    da: usize,
    db: usize,
    /// `u = chi1 e^{-i phi}` (two-mode-squeezing tone), `v = chi2`.
    u: Complex64,
    v: f64,
    kappa: f64,
    gamma_down: f64,
    gamma_up: f64,
}

impl Liouvillian {
    /// `d rho/dt` written into `out` (both packed as re/im pairs).
    ///
    /// H = u (b a) + v (b^dag a) + conj terms;
    /// dissipators kappa D[a], gamma_down D[b], gamma_up D[b^dag].
    fn apply(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let (da, db) = (self.da, self.db);
        let d = da * db;
        let idx = |ia: usize, ib: usize| ia * db + ib;
        let sq = |n: usize| (n as f64).sqrt();
        for x in out.iter_mut() {
            *x = Complex64::new(0.0, 0.0);
        }
        let minus_i = Complex64::new(0.0, -1.0);
        // -i [H, rho]: for each Hamiltonian monomial T, add -i (T rho - rho T).
        // Left multiplication by (b a): (b a rho)[ia,ib] = sqrt((ia+1)(ib+1)) rho[ia+1, ib+1].
        for row in 0..d {
            let (ia, ib) = (row / db, row % db);
            for col in 0..d {
                let (ja, jb) = (col / db, col % db);
                let mut acc = Complex64::new(0.0, 0.0);
                // u * (b a) rho
                if ia + 1 < da && ib + 1 < db {
                    acc += self.u * sq(ia + 1) * sq(ib + 1) * rho[idx(ia + 1, ib + 1) * d + col];
                }
                // u^* (b^dag a^dag) rho
                if ia >= 1 && ib >= 1 {
                    acc += self.u.conj() * sq(ia) * sq(ib) * rho[idx(ia - 1, ib - 1) * d + col];
                }
                // v (b^dag a) rho
                if ia + 1 < da && ib >= 1 {
                    acc += self.v * sq(ia + 1) * sq(ib) * rho[idx(ia + 1, ib - 1) * d + col];
                }
                // v (b a^dag) rho
                if ia >= 1 && ib + 1 < db {
                    acc += self.v * sq(ia) * sq(ib + 1) * rho[idx(ia - 1, ib + 1) * d + col];
                }
                // minus rho H: (rho (b a))[., ja jb] = sqrt(ja jb) rho[., ja-1 jb-1]
                if ja >= 1 && jb >= 1 {
                    acc -= self.u * sq(ja) * sq(jb) * rho[row * d + idx(ja - 1, jb - 1)];
                }
                if ja + 1 < da && jb + 1 < db {
                    acc -= self.u.conj() * sq(ja + 1) * sq(jb + 1) * rho[row * d + idx(ja + 1, jb + 1)];
                }
                if ja >= 1 && jb + 1 < db {
                    acc -= self.v * sq(ja) * sq(jb + 1) * rho[row * d + idx(ja - 1, jb + 1)];
                }
                if ja + 1 < da && jb >= 1 {
                    acc -= self.v * sq(ja + 1) * sq(jb) * rho[row * d + idx(ja + 1, jb - 1)];
                }
                let mut total = minus_i * acc;

                let r = rho[row * d + col];
                // kappa D[a]: a rho a^dag - (n_a rho + rho n_a)/2
                if ia + 1 < da && ja + 1 < da {
                    total += self.kappa * sq(ia + 1) * sq(ja + 1) * rho[idx(ia + 1, ib) * d + idx(ja + 1, jb)];
                }
                total -= self.kappa * 0.5 * (ia + ja) as f64 * r;
                // gamma_down D[b]
                if ib + 1 < db && jb + 1 < db {
                    total += self.gamma_down * sq(ib + 1) * sq(jb + 1) * rho[idx(ia, ib + 1) * d + idx(ja, jb + 1)];
                }
                total -= self.gamma_down * 0.5 * (ib + jb) as f64 * r;
                // gamma_up D[b^dag]: b^dag rho b - (b b^dag rho + rho b b^dag)/2.
                // In the truncated space (b b^dag) vanishes at the top level;
                // composing truncated operators keeps the generator exactly
                // trace-preserving.
                if ib >= 1 && jb >= 1 {
                    total += self.gamma_up * sq(ib) * sq(jb) * rho[idx(ia, ib - 1) * d + idx(ja, jb - 1)];
                }
                let bbd = |n: usize| if n + 1 < db { (n + 1) as f64 } else { 0.0 };
                total -= self.gamma_up * 0.5 * (bbd(ib) + bbd(jb)) * r;

                out[row * d + col] = total;
            }
        }
    }
}

/// Integrates the master equation for the constant rotating-frame model from
/// `rho0`, returning the (hermitized, trace-renormalized) final state.
///
/// Fails with [`FockError::TruncationLeak`] if the top Fock level accumulates
/// more than [`LEAK_TOL`] population, and with [`FockError::TraceDrift`] if
/// the trace wanders from 1 by more than `1e-6`.
pub fn evolve_dm(
    profile: &CouplingProfile,
    kappa: f64,
    gamma_m: f64,
    n_th: f64,
    cfg: &FockConfig,
    rho0: &DensityOperator,
) -> Result<DensityOperator, FockError> {
    cfg.validate()?;
    if rho0.dim_cavity != cfg.dim_cavity || rho0.dim_mech != cfg.dim_mech {
        return Err(FockError::InvalidConfig(String::from(
            "initial state dimensions disagree with the configuration",
        )));
    }
    for (name, v) in [("kappa", kappa), ("gamma_m", gamma_m), ("n_th", n_th)] {
        if !v.is_finite() || v < 0.0 {
            return Err(FockError::InvalidConfig(format!(
                "{name} must be finite and nonnegative, got {v}"
            )));
        }
    }
    let lv = Liouvillian {
        da: cfg.dim_cavity,
        db: cfg.dim_mech,
        u: Complex64::new(profile.phi.cos(), -profile.phi.sin()) * profile.chi1,
        v: profile.chi2,
        kappa,
        gamma_down: gamma_m * (n_th + 1.0),
        gamma_up: gamma_m * n_th,
    };
    let d = cfg.dim_cavity * cfg.dim_mech;
    // Pack rho into a real vector: [re, im] per entry.
    let mut y = DVector::zeros(2 * d * d);
    for (k, v) in rho0.rho.iter().enumerate() {
        y[2 * k] = v.re;
        y[2 * k + 1] = v.im;
    }
    let mut rho_buf = alloc::vec![Complex64::new(0.0, 0.0); d * d];
    let mut out_buf = alloc::vec![Complex64::new(0.0, 0.0); d * d];
    // nalgebra stores column-major; the Liouvillian uses row-major [row*d+col].
    // The packed vector is treated as row-major throughout, consistently on
    // pack and unpack, so the layout choice is immaterial.
    let rhs = move |_t: f64, y: &DVector<f64>, dy: &mut DVector<f64>| {
        for k in 0..d * d {
            rho_buf[k] = Complex64::new(y[2 * k], y[2 * k + 1]);
        }
        lv.apply(&rho_buf, &mut out_buf);
        for (k, v) in out_buf.iter().enumerate() {
            dy[2 * k] = v.re;
            dy[2 * k + 1] = v.im;
        }
    };
    let opts = OdeOptions::with_tolerances(cfg.rtol, cfg.atol);
    let y_end = {
        let mut y_end = y.clone();
        ode::integrate_path(rhs, 0.0, &mut y_end, &[cfg.t_end], &opts, |_, _, _| {})?;
        y_end
    };
    let _ = y;
    let mut rho = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let k = i * d + j;
            rho[(i, j)] = Complex64::new(y_end[2 * k], y_end[2 * k + 1]);
        }
    }
    // Hermitize and renormalize; the drift must stay within tolerance.
    let tr: f64 = rho.diagonal().iter().map(|v| v.re).sum();
    let drift = (tr - 1.0).abs();
    if drift > 1e-6 {
        return Err(FockError::TraceDrift { drift });
    }
    let rho = (rho.adjoint() + &rho) / Complex64::new(2.0 * tr, 0.0);
    let op = DensityOperator {
        dim_cavity: cfg.dim_cavity,
        dim_mech: cfg.dim_mech,
        rho,
    };
    let leak = op.top_level_population();
    if leak > LEAK_TOL {
        return Err(FockError::TruncationLeak { population: leak });
    }
    op.validate()?;
    Ok(op)
}

/// Quadrature mean and covariance extracted from a density operator, as a
/// two-mode Gaussian state (modes ordered `(a, b)`).
pub fn moments_from_dm(rho: &DensityOperator) -> Result<GaussianState, FockError> {
    let (da, db) = (rho.dim_cavity, rho.dim_mech);
    let m = &rho.rho;
    let idx = |ia: usize, ib: usize| ia * db + ib;
    let sq = |n: usize| (n as f64).sqrt();

    let mut mean_a = Complex64::new(0.0, 0.0);
    let mut mean_b = Complex64::new(0.0, 0.0);
    let mut aa = Complex64::new(0.0, 0.0); // <a^2>
    let mut bb = Complex64::new(0.0, 0.0); // <b^2>
    let mut ab = Complex64::new(0.0, 0.0); // <a b>
    let mut abd = Complex64::new(0.0, 0.0); // <a b^dag>
    let mut na = 0.0; // <a^dag a>
    let mut nb = 0.0;
    for ia in 0..da {
        for ib in 0..db {
            let row = idx(ia, ib);
            let p = m[(row, row)].re;
            na += ia as f64 * p;
            nb += ib as f64 * p;
            // <X> = tr(X rho); <a> picks rho[(ia,ib),(ia+1,ib)] etc.
            if ia + 1 < da {
                mean_a += sq(ia + 1) * m[(idx(ia + 1, ib), row)];
            }
            if ib + 1 < db {
                mean_b += sq(ib + 1) * m[(idx(ia, ib + 1), row)];
            }
            if ia + 2 < da {
                aa += sq(ia + 1) * sq(ia + 2) * m[(idx(ia + 2, ib), row)];
            }
            if ib + 2 < db {
                bb += sq(ib + 1) * sq(ib + 2) * m[(idx(ia, ib + 2), row)];
            }
            if ia + 1 < da && ib + 1 < db {
                ab += sq(ia + 1) * sq(ib + 1) * m[(idx(ia + 1, ib + 1), row)];
            }
            if ia + 1 < da && ib >= 1 {
                abd += sq(ia + 1) * sq(ib) * m[(idx(ia + 1, ib - 1), row)];
            }
        }
    }
    // Central moments of the fluctuations.
    let c_aa = aa - mean_a * mean_a;
    let c_bb = bb - mean_b * mean_b;
    let c_ab = ab - mean_a * mean_b;
    let c_abd = abd - mean_a * mean_b.conj();
    let c_na = na - mean_a.norm_sqr();
    let c_nb = nb - mean_b.norm_sqr();

    let pm = PairMoments {
        n1: c_na,
        n2: c_nb,
        m1: c_aa,
        m2: c_bb,
        cross: c_ab,
        cross_dag: c_abd,
    };
    let zero_mean = GaussianState::from_pair_moments(&pm)
        .map_err(|e| FockError::Moments(format!("{e}")))?;
    let sqrt2 = 2.0f64.sqrt();
    let mean = DVector::from_vec(alloc::vec![
        sqrt2 * mean_a.re,
        sqrt2 * mean_a.im,
        sqrt2 * mean_b.re,
        sqrt2 * mean_b.im,
    ]);
    GaussianState::from_parts(mean, zero_mean.cov().clone())
        .map_err(|e| FockError::Moments(format!("{e}")))
}

/// Result of a truncation-convergence run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Baseline dimensions.
    pub dims_low: (usize, usize),
    /// Enlarged dimensions (each +4).
    pub dims_high: (usize, usize),
    /// Largest disagreement over all mean and covariance entries, when both
    /// runs completed.
    pub max_moment_diff: Option<f64>,
    /// True if either run aborted with a truncation leak.
    pub truncation_leak: bool,
    /// `max_moment_diff < 1e-4` with no leak.
    pub passed: bool,
}

/// Repeats the evolution from vacuum at the configured truncation and at
/// dimensions `+4`, comparing first and second moments.
pub fn convergence_check(
    profile: &CouplingProfile,
    kappa: f64,
    gamma_m: f64,
    n_th: f64,
    cfg: &FockConfig,
) -> Result<ConvergenceReport, FockError> {
    cfg.validate()?;
    let mut big = *cfg;
    big.dim_cavity += 4;
    big.dim_mech += 4;
    let mut leak = false;
    let mut run = |c: &FockConfig| -> Result<Option<GaussianState>, FockError> {
        let rho0 = DensityOperator::vacuum(c)?;
        match evolve_dm(profile, kappa, gamma_m, n_th, c, &rho0) {
            Ok(rho) => Ok(Some(moments_from_dm(&rho)?)),
            Err(FockError::TruncationLeak { .. }) => {
                leak = true;
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };
    let lo = run(cfg)?;
    let hi = run(&big)?;
    let max_moment_diff = match (lo, hi) {
        (Some(a), Some(b)) => {
            let mut diff = 0.0f64;
            for i in 0..4 {
                diff = diff.max((a.mean()[i] - b.mean()[i]).abs());
                for j in 0..4 {
                    diff = diff.max((a.cov()[(i, j)] - b.cov()[(i, j)]).abs());
                }
            }
            Some(diff)
        }
        _ => None,
    };
    let passed = !leak && max_moment_diff.map(|d| d < 1e-4).unwrap_or(false);
    Ok(ConvergenceReport {
        dims_low: (cfg.dim_cavity, cfg.dim_mech),
        dims_high: (big.dim_cavity, big.dim_mech),
        max_moment_diff,
        truncation_leak: leak,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_rwa_model, steady_state};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn small_cfg() -> FockConfig {
        FockConfig {
            dim_cavity: 5,
            dim_mech: 5,
            rtol: 1e-9,
            atol: 1e-11,
            t_end: 10.0,
        }
    }

    /// Dense reference implementation of the same Liouvillian, built from
    /// explicit ladder matrices; used to validate the index arithmetic.
    fn dense_rhs(
        lv: &Liouvillian,
        rho: &DMatrix<Complex64>,
    ) -> DMatrix<Complex64> {
        let (da, db) = (lv.da, lv.db);
        let d = da * db;
        let mut a_op = DMatrix::<Complex64>::zeros(d, d);
        let mut b_op = DMatrix::<Complex64>::zeros(d, d);
        for ia in 0..da {
            for ib in 0..db {
                let row = ia * db + ib;
                if ia + 1 < da {
                    a_op[(row, (ia + 1) * db + ib)] = Complex64::new(((ia + 1) as f64).sqrt(), 0.0);
                }
                if ib + 1 < db {
                    b_op[(row, ia * db + ib + 1)] = Complex64::new(((ib + 1) as f64).sqrt(), 0.0);
                }
            }
        }
        let h = &b_op * &a_op * lv.u
            + b_op.adjoint() * &a_op * Complex64::new(lv.v, 0.0);
        let h = &h + h.adjoint();
        let dissip = |l: &DMatrix<Complex64>, rate: f64, rho: &DMatrix<Complex64>| {
            let ld = l.adjoint();
            (l * rho * &ld - (&ld * l * rho + rho * (&ld * l)) * Complex64::new(0.5, 0.0))
                * Complex64::new(rate, 0.0)
        };
        (&h * rho - rho * &h) * Complex64::new(0.0, -1.0)
            + dissip(&a_op, lv.kappa, rho)
            + dissip(&b_op, lv.gamma_down, rho)
            + dissip(&b_op.adjoint(), lv.gamma_up, rho)
    }

    #[test]
    fn structured_liouvillian_matches_dense_reference() {
        let lv = Liouvillian {
            da: 4,
            db: 5,
            u: Complex64::new(0.011, -0.007),
            v: 0.03,
            kappa: 0.05,
            gamma_down: 2e-3,
            gamma_up: 1e-3,
        };
        let d = lv.da * lv.db;
        // A fixed, valid-enough Hermitian test matrix.
        let mut rho = DMatrix::<Complex64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let v = Complex64::new(
                    ((i * 7 + j * 3) % 11) as f64 / 11.0,
                    ((i as i64 - j as i64) % 5) as f64 / 17.0,
                );
                rho[(i, j)] = v;
            }
        }
        let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);

        let mut packed = alloc::vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                packed[i * d + j] = rho[(i, j)];
            }
        }
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); d * d];
        lv.apply(&packed, &mut out);
        let reference = dense_rhs(&lv, &rho);
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((out[i * d + j] - reference[(i, j)]).norm());
            }
        }
        assert!(worst < 1e-13, "structured vs dense mismatch {worst}");
    }

    #[test]
    fn vacuum_is_preserved_without_coupling() {
        let cfg = small_cfg();
        let profile = CouplingProfile::new(0.0, 0.0, 2.0, 0.0).unwrap();
        let rho0 = DensityOperator::vacuum(&cfg).unwrap();
        let rho = evolve_dm(&profile, 0.05, 0.0, 0.0, &cfg, &rho0).unwrap();
        assert_relative_eq!(rho.matrix()[(0, 0)].re, 1.0, max_relative = 1e-9);
        assert_relative_eq!(rho.purity(), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn beam_splitter_plus_loss_empties_the_system() {
        // One mechanical excitation, pure state-transfer coupling, cavity
        // loss: total excitation decays to zero.
        // Occupation decays at kappa/2 here (complex regime, Re lambda =
        // -kappa/4): t = 700 puts the residual at ~2e-8.
        let cfg = FockConfig {
            t_end: 700.0,
            ..small_cfg()
        };
        let profile = CouplingProfile::new(0.0, 0.03, 2.0, 0.0).unwrap();
        let d = cfg.dim_cavity * cfg.dim_mech;
        let mut m = DMatrix::zeros(d, d);
        m[(1, 1)] = Complex64::new(1.0, 0.0); // |0_a 1_b>
        let rho0 = DensityOperator::from_matrix(cfg.dim_cavity, cfg.dim_mech, m).unwrap();
        let rho = evolve_dm(&profile, 0.05, 0.0, 0.0, &cfg, &rho0).unwrap();
        let state = moments_from_dm(&rho).unwrap();
        assert!(state.mode_occupation(0).unwrap() < 1e-6);
        assert!(state.mode_occupation(1).unwrap() < 1e-6);
    }

    #[test]
    fn thermal_initial_state_moments() {
        let cfg = FockConfig {
            dim_cavity: 6,
            dim_mech: 24,
            ..small_cfg()
        };
        let rho = DensityOperator::cavity_vacuum_mech_thermal(&cfg, 1.0).unwrap();
        let state = moments_from_dm(&rho).unwrap();
        // Truncated at 24 levels, the n = 1 thermal tail error is ~ 2^-24.
        assert_relative_eq!(state.mode_occupation(1).unwrap(), 1.0, max_relative = 1e-5);
        assert_relative_eq!(state.cov()[(2, 2)], 1.5, max_relative = 1e-5);
        assert_relative_eq!(state.cov()[(0, 0)], 0.5, max_relative = 1e-9);
    }

    #[test]
    fn squeezing_model_steady_state_matches_gaussian_engine() {
        // The squeezed-vacuum Fock tail (P(10) ~ 4e-6) makes 12 the smallest
        // truncation that clears the leak gate.
        let cfg = FockConfig {
            dim_cavity: 12,
            dim_mech: 12,
            rtol: 1e-8,
            atol: 1e-10,
            t_end: 500.0,
        };
        let profile = CouplingProfile::new(0.01, 0.03, 2.0, 0.0).unwrap();
        let rho0 = DensityOperator::vacuum(&cfg).unwrap();
        let rho = evolve_dm(&profile, 0.05, 0.0, 0.0, &cfg, &rho0).unwrap();
        let fock_state = moments_from_dm(&rho).unwrap();
        let lyap = steady_state(&build_rwa_model(&profile, 0.05, 0.0, 0.0).unwrap()).unwrap();
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((fock_state.cov()[(i, j)] - lyap.cov()[(i, j)]).abs());
            }
        }
        assert!(worst < 1e-3, "Fock vs Gaussian covariance gap {worst}");
        // Mechanical quadrature variances: e^{-2r}/2 = 0.25 and e^{2r}/2 = 1.
        let mech = fock_state.marginal(&[1]).unwrap();
        let (lo, hi) = mech.principal_variances().unwrap();
        assert_abs_diff_eq!(lo, 0.25, epsilon = 1e-3);
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-3);
        // Purity of the gamma_m = 0 steady state is 1 (squeezed vacuum x vacuum).
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn convergence_check_passes_at_reference_point_and_flags_high_gain() {
        let profile = CouplingProfile::new(0.01, 0.03, 2.0, 0.0).unwrap();
        let cfg = FockConfig {
            dim_cavity: 12,
            dim_mech: 12,
            rtol: 1e-8,
            atol: 1e-10,
            t_end: 300.0,
        };
        let report = convergence_check(&profile, 0.05, 0.0, 0.0, &cfg).unwrap();
        assert!(report.passed, "report: {report:?}");
        assert!(report.max_moment_diff.unwrap() < 1e-4);

        // chi1/chi2 = 0.9: anti-squeezed variance e^{2r}/2 ~ 9.5 spills far
        // past an 8-level truncation.
        let hot = CouplingProfile::new(0.027, 0.03, 2.0, 0.0).unwrap();
        let report = convergence_check(&hot, 0.05, 0.0, 0.0, &cfg).unwrap();
        assert!(!report.passed);
        assert!(report.truncation_leak);
    }

    #[test]
    fn zero_coupling_convergence_is_exact() {
        let profile = CouplingProfile::new(0.0, 0.0, 2.0, 0.0).unwrap();
        let report = convergence_check(&profile, 0.05, 0.0, 0.0, &small_cfg()).unwrap();
        assert!(report.passed);
        assert!(report.max_moment_diff.unwrap() < 1e-12);
    }

    #[test]
    fn dims_below_four_are_rejected() {
        let cfg = FockConfig {
            dim_cavity: 3,
            ..small_cfg()
        };
        assert!(DensityOperator::vacuum(&cfg).is_err());
    }
}
