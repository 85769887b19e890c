//! Closed-form steady-state predictions for both setups.
//!
//! Everything here is an exact evaluation of elementary functions; no
//! numerics. These expressions are the oracles against which the simulated
//! dynamics are checked, so they must not share any code path with the
//! integrators.

use alloc::format;
use alloc::string::String;
use core::fmt;
use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dynamics::CouplingProfile;

/// Errors from closed-form evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticsError {
    /// `chi1 >= chi2`: cooling must dominate over anti-damping.
    StabilityViolated {
        /// Parametric-gain tone amplitude.
        chi1: f64,
        /// Beam-splitter tone amplitude.
        chi2: f64,
    },
    /// `d0 = 0`: no thermal contamination, so the thermal tolerance is
    /// unbounded.
    UnboundedThermalTolerance,
    /// `G = 0`: no state transfer, no finite preparation time.
    NoStateTransfer,
    /// The requested quantity is undefined for these inputs.
    Undefined(String),
    /// Parameter out of its documented range.
    InvalidParameter(String),
}

impl fmt::Display for AnalyticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticsError::StabilityViolated { chi1, chi2 } => write!(
                f,
                "stability violated: chi1 = {chi1} >= chi2 = {chi2} \
                 (cooling must dominate over anti-damping)"
            ),
            AnalyticsError::UnboundedThermalTolerance => {
                write!(f, "d0 = 0: thermal tolerance is unbounded")
            }
            AnalyticsError::NoStateTransfer => write!(f, "G = 0: no state transfer"),
            AnalyticsError::Undefined(msg) => write!(f, "undefined: {msg}"),
            AnalyticsError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl core::error::Error for AnalyticsError {}

fn check_chi(chi1: f64, chi2: f64) -> Result<(), AnalyticsError> {
    if !chi1.is_finite() || !chi2.is_finite() || chi1 < 0.0 {
        return Err(AnalyticsError::InvalidParameter(format!(
            "tone amplitudes must be finite and nonnegative, got ({chi1}, {chi2})"
        )));
    }
    if chi1 >= chi2 {
        return Err(AnalyticsError::StabilityViolated { chi1, chi2 });
    }
    Ok(())
}

/// Squeeze parameter `r = atanh(chi1 / chi2)` of the engineered Bogoliubov
/// mode. Requires `0 <= chi1 < chi2`.
pub fn squeeze_param(chi1: f64, chi2: f64) -> Result<f64, AnalyticsError> {
    check_chi(chi1, chi2)?;
    Ok((chi1 / chi2).atanh())
}

/// Transfer (cooling) rate `G = chi2 sqrt(1 - (chi1/chi2)^2)` of the
/// Bogoliubov mode into the cavity. Requires `0 <= chi1 < chi2`.
pub fn transfer_rate(chi1: f64, chi2: f64) -> Result<f64, AnalyticsError> {
    check_chi(chi1, chi2)?;
    let x = chi1 / chi2;
    Ok(chi2 * (1.0 - x * x).sqrt())
}

/// Mixedness parameter
/// `d0 = 1 - 4 kappa G^2 / [(kappa + gamma_m)(kappa gamma_m + 4 G^2)]`.
///
/// `d0 = 0` is the pure dissipative fixed point, `d0 = 1` the thermal limit
/// (no cavity cooling).
pub fn d0(kappa: f64, gamma_m: f64, transfer: f64) -> Result<f64, AnalyticsError> {
    for (name, v) in [("kappa", kappa), ("gamma_m", gamma_m), ("G", transfer)] {
        if !v.is_finite() || v < 0.0 {
            return Err(AnalyticsError::InvalidParameter(format!(
                "{name} must be finite and nonnegative, got {v}"
            )));
        }
    }
    let denom = (kappa + gamma_m) * (kappa * gamma_m + 4.0 * transfer * transfer);
    if denom == 0.0 {
        return Err(AnalyticsError::Undefined(String::from(
            "d0 needs kappa > 0 or gamma_m > 0",
        )));
    }
    Ok(1.0 - 4.0 * kappa * transfer * transfer / denom)
}

/// Weak-damping approximation `d0 ~= gamma_m/kappa + kappa gamma_m/(4 G^2)`.
pub fn d0_approx(kappa: f64, gamma_m: f64, transfer: f64) -> Result<f64, AnalyticsError> {
    if kappa <= 0.0 || transfer <= 0.0 {
        return Err(AnalyticsError::Undefined(String::from(
            "d0 approximation needs kappa > 0 and G > 0",
        )));
    }
    Ok(gamma_m / kappa + kappa * gamma_m / (4.0 * transfer * transfer))
}

/// Steady-state mechanical moments of the two-mode squeezed thermal state:
/// `(<c^dag c>, <c1 c2>)` as functions of `(r, phi, d0, n_th)`.
pub fn steady_moments(r: f64, phi: f64, d0: f64, n_th: f64) -> (f64, Complex64) {
    let (c2r, s2r) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    let sh2 = r.sinh() * r.sinh();
    let d1 = n_th * c2r + sh2;
    let d2 = (n_th + 0.5) * s2r;
    let occupation = d0 * d1 * c2r - d0 * d2 * s2r + sh2;
    let amp = -(d0 * d1 + 0.5) * s2r + d0 * d2 * c2r;
    let cross = Complex64::new(phi.cos(), phi.sin()) * amp;
    (occupation, cross)
}

/// Long-time EPR variance minimum of setup I:
/// `Delta_EPR,min = 2 e^{-2r} (1 - d0) + 2 (2 n_th + 1) d0`.
pub fn epr_min_setup1(r: f64, d0: f64, n_th: f64) -> f64 {
    2.0 * (-2.0 * r).exp() * (1.0 - d0) + 2.0 * (2.0 * n_th + 1.0) * d0
}

/// Largest thermal occupation with steady-state squeezing in setup I:
/// `n_th,max = (1 - d0)/(2 d0) (1 - e^{-2r})`.
///
/// `d0 = 0` is signalled as [`AnalyticsError::UnboundedThermalTolerance`].
pub fn nth_max_setup1(r: f64, d0: f64) -> Result<f64, AnalyticsError> {
    if !(0.0..=1.0).contains(&d0) {
        return Err(AnalyticsError::InvalidParameter(format!(
            "d0 must lie in [0, 1], got {d0}"
        )));
    }
    if d0 == 0.0 {
        return Err(AnalyticsError::UnboundedThermalTolerance);
    }
    Ok((1.0 - d0) / (2.0 * d0) * (1.0 - (-2.0 * r).exp()))
}

/// Weak-damping approximation
/// `n_th,max ~= 4 kappa chi1 (chi2 - chi1) / (gamma_m [kappa^2 + 4 (chi2^2 - chi1^2)])`.
pub fn nth_max_setup1_approx(
    kappa: f64,
    gamma_m: f64,
    chi1: f64,
    chi2: f64,
) -> Result<f64, AnalyticsError> {
    check_chi(chi1, chi2)?;
    if gamma_m <= 0.0 {
        return Err(AnalyticsError::UnboundedThermalTolerance);
    }
    Ok(4.0 * kappa * chi1 * (chi2 - chi1)
        / (gamma_m * (kappa * kappa + 4.0 * (chi2 * chi2 - chi1 * chi1))))
}

/// Coarse relaxation eigenvalues
/// `eta_pm = -kappa/2 +- sqrt(kappa^2/4 - G^2)` of the transformed
/// state-transfer master equation. These govern the covariance relaxation;
/// the drift matrix of the amplitude equations has eigenvalues `eta/2`-like
/// real parts (see `dynamics::stability_eigenvalues` for the exact drift
/// spectrum).
pub fn eta_eigenvalues(kappa: f64, transfer: f64) -> (Complex64, Complex64) {
    let disc = kappa * kappa / 4.0 - transfer * transfer;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (
            Complex64::new(-kappa / 2.0 + s, 0.0),
            Complex64::new(-kappa / 2.0 - s, 0.0),
        )
    } else {
        let s = (-disc).sqrt();
        (
            Complex64::new(-kappa / 2.0, s),
            Complex64::new(-kappa / 2.0, -s),
        )
    }
}

/// Estimated preparation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TminEstimate {
    /// Time in units of `1/omega_m`.
    pub t: f64,
    /// True when the value extends beyond the regime quoted in closed form
    /// (`G < kappa/2`, slowest-mode convention).
    pub extrapolated: bool,
}

/// Minimum preparation time: `4/kappa` for `G >= kappa/2`; for weaker
/// transfer, two e-folds of the slowest eta eigenvalue (an extrapolation,
/// flagged as such).
pub fn t_min(kappa: f64, transfer: f64) -> Result<TminEstimate, AnalyticsError> {
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(AnalyticsError::InvalidParameter(format!(
            "t_min needs kappa > 0, got {kappa}"
        )));
    }
    if transfer <= 0.0 {
        return Err(AnalyticsError::NoStateTransfer);
    }
    if transfer >= kappa / 2.0 {
        Ok(TminEstimate {
            t: 4.0 / kappa,
            extrapolated: false,
        })
    } else {
        let eta_slow = -kappa / 2.0 + (kappa * kappa / 4.0 - transfer * transfer).sqrt();
        Ok(TminEstimate {
            t: 2.0 / eta_slow.abs(),
            extrapolated: true,
        })
    }
}

/// Setup II single-step thermal characterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup2Thermal {
    /// Squeeze reduction `r_tilde` of the driven normal mode.
    pub r_tilde: f64,
    /// Effective thermal occupation of the driven normal mode.
    pub n_bar2: f64,
    /// Residual squeeze parameter `xi_2 = (r - r_tilde) e^{-i phi}`.
    pub xi2: Complex64,
    /// `Delta_EPR,min(infinity) = e^{-2r}(1 - d0) + (2 n_th + 1)(1 + d0)`.
    pub epr_min_inf: f64,
    /// `n_th,max = (1 - d0)/(2 (1 + d0)) (1 - e^{-2r})`.
    pub nth_max: f64,
}

/// Evaluates the setup II thermal formulas (one normal mode squeezed-thermal,
/// the other thermal).
pub fn setup2_thermal(r: f64, phi: f64, d0: f64, n_th: f64) -> Setup2Thermal {
    let (c2r, s2r) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    let d1 = n_th * c2r + r.sinh() * r.sinh();
    let d2 = (n_th + 0.5) * s2r;
    let r_tilde = 0.25 * ((2.0 * d0 * (d1 + d2) + 1.0) / (2.0 * d0 * (d1 - d2) + 1.0)).ln();
    let p = d0 * d1 + 0.5;
    let q = d0 * d2;
    let n_bar2 = (p * p - q * q).sqrt() - 0.5;
    let xi2 = Complex64::new(phi.cos(), -phi.sin()) * (r - r_tilde);
    let e2r = (-2.0 * r).exp();
    Setup2Thermal {
        r_tilde,
        n_bar2,
        xi2,
        epr_min_inf: e2r * (1.0 - d0) + (2.0 * n_th + 1.0) * (1.0 + d0),
        nth_max: (1.0 - d0) / (2.0 * (1.0 + d0)) * (1.0 - e2r),
    }
}

/// All closed-form quantities for one coupling profile and rate set.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticPrediction {
    /// Squeeze parameter `r`.
    pub r: f64,
    /// Transfer rate `G`.
    pub transfer: f64,
    /// Mixedness parameter `d0`.
    pub d0: f64,
    /// Steady `<c_j^dag c_j>`.
    pub occupation: f64,
    /// Steady `<c1 c2>`.
    pub cross: Complex64,
    /// Setup I `Delta_EPR,min`.
    pub epr_min: f64,
    /// Setup I thermal tolerance (`None` when unbounded, i.e. `d0 = 0`).
    pub nth_max: Option<f64>,
    /// Weak-damping approximation of the above (`None` when `gamma_m = 0`).
    pub nth_max_approx: Option<f64>,
    /// Preparation-time estimate (`None` when `kappa = 0`: no dissipative
    /// preparation happens at all).
    pub t_min: Option<TminEstimate>,
    /// Coarse relaxation eigenvalues `eta_pm`.
    pub eta: (Complex64, Complex64),
    /// Setup II single-step thermal characterization.
    pub setup2: Setup2Thermal,
}

/// Assembles the full prediction set for a coupling profile and rates.
pub fn predict(
    profile: &CouplingProfile,
    kappa: f64,
    gamma_m: f64,
    n_th: f64,
) -> Result<AnalyticPrediction, AnalyticsError> {
    let r = squeeze_param(profile.chi1, profile.chi2)?;
    let transfer = transfer_rate(profile.chi1, profile.chi2)?;
    let d0v = d0(kappa, gamma_m, transfer)?;
    let (occupation, cross) = steady_moments(r, profile.phi, d0v, n_th);
    let nth_max = match nth_max_setup1(r, d0v) {
        Ok(v) => Some(v),
        Err(AnalyticsError::UnboundedThermalTolerance) => None,
        Err(e) => return Err(e),
    };
    let nth_max_approx = if gamma_m > 0.0 {
        Some(nth_max_setup1_approx(kappa, gamma_m, profile.chi1, profile.chi2)?)
    } else {
        None
    };
    let t_min_est = if kappa > 0.0 {
        Some(t_min(kappa, transfer)?)
    } else {
        None
    };
    Ok(AnalyticPrediction {
        r,
        transfer,
        d0: d0v,
        occupation,
        cross,
        epr_min: epr_min_setup1(r, d0v, n_th),
        nth_max,
        nth_max_approx,
        t_min: t_min_est,
        eta: eta_eigenvalues(kappa, transfer),
        setup2: setup2_thermal(r, profile.phi, d0v, n_th),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    // Reference point: kappa = 0.05, gamma_m = 1e-4, chi = (0.01, 0.03).
    const KAPPA: f64 = 0.05;
    const GAMMA: f64 = 1e-4;
    const CHI1: f64 = 0.01;
    const CHI2: f64 = 0.03;

    #[test]
    fn squeeze_param_values() {
        assert_eq!(squeeze_param(0.0, 0.03).unwrap(), 0.0);
        // atanh(1/3) = ln(2)/2, so e^{-2r} = 1/2 exactly.
        let r = squeeze_param(CHI1, CHI2).unwrap();
        assert_relative_eq!(r, 0.5 * 2.0f64.ln(), max_relative = 1e-14);
        assert_relative_eq!((-2.0 * r).exp(), 0.5, max_relative = 1e-14);
        assert!(matches!(
            squeeze_param(0.03, 0.01),
            Err(AnalyticsError::StabilityViolated { .. })
        ));
        assert!(matches!(
            squeeze_param(0.03, 0.03),
            Err(AnalyticsError::StabilityViolated { .. })
        ));
    }

    #[test]
    fn transfer_rate_values() {
        assert_relative_eq!(transfer_rate(0.0, 0.03).unwrap(), 0.03, max_relative = 1e-14);
        // 0.03 sqrt(8/9) = 0.02 sqrt(2).
        assert_relative_eq!(
            transfer_rate(CHI1, CHI2).unwrap(),
            0.028_284_271_247_461_905,
            max_relative = 1e-14
        );
        // G -> 0 at the stability boundary.
        assert!(transfer_rate(0.029_999_99, 0.03).unwrap() < 3e-4);
    }

    #[test]
    fn d0_limits_and_example() {
        // kappa = 0: d0 = 1 (no cavity dissipation).
        assert_relative_eq!(d0(0.0, GAMMA, 0.02).unwrap(), 1.0, max_relative = 1e-14);
        // gamma_m = 0: pure fixed point.
        assert_abs_diff_eq!(d0(KAPPA, 0.0, 0.02).unwrap(), 0.0, epsilon = 1e-15);
        assert!(d0(0.0, 0.0, 0.0).is_err());

        let g = transfer_rate(CHI1, CHI2).unwrap();
        // Frozen from exact rational arithmetic: 1 - (1/6250)/(501/10000 * 641/200000).
        assert_relative_eq!(d0(KAPPA, GAMMA, g).unwrap(), 3.552_956_489_517e-3, max_relative = 1e-9);
        assert_relative_eq!(
            d0_approx(KAPPA, GAMMA, g).unwrap(),
            3.562_5e-3,
            max_relative = 1e-9
        );
    }

    #[test]
    fn steady_moments_limits() {
        // d0 = 0, n_th = 0: pure TMSV moments.
        let r = 0.4;
        let (n, m) = steady_moments(r, 0.7, 0.0, 0.0);
        assert_relative_eq!(n, r.sinh().powi(2), max_relative = 1e-14);
        let expected = -0.5 * (2.0 * r).sinh();
        assert_relative_eq!(m.norm(), expected.abs(), max_relative = 1e-14);
        // r = 0: occupation d0 n_th, no correlations.
        let (n0, m0) = steady_moments(0.0, 0.0, 0.3, 2.0);
        assert_relative_eq!(n0, 0.6, max_relative = 1e-14);
        assert_abs_diff_eq!(m0.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn epr_min_setup1_values() {
        // d0 = 1: thermal limit 4 n_th + 2.
        assert_relative_eq!(epr_min_setup1(0.5, 1.0, 3.0), 14.0, max_relative = 1e-14);
        // d0 = 0: 2 e^{-2r}.
        assert_relative_eq!(
            epr_min_setup1(0.5, 0.0, 3.0),
            2.0 * (-1.0f64).exp(),
            max_relative = 1e-14
        );
        // Reference point at n_th = 0: 2 * 0.5 * (1 - d0) + 2 d0.
        let d = 3.552_956_489_517e-3;
        let r = 0.5 * 2.0f64.ln();
        assert_relative_eq!(
            epr_min_setup1(r, d, 0.0),
            1.0 + d, // 1 - d0 + 2 d0
            max_relative = 1e-12
        );
    }

    #[test]
    fn nth_max_setup1_values() {
        let r = 0.5 * 2.0f64.ln();
        let g = transfer_rate(CHI1, CHI2).unwrap();
        let d = d0(KAPPA, GAMMA, g).unwrap();
        // Exact formula with exact d0: ~70.1; approximation: ~70.2. Both are
        // the reference "n_th,max ~ 70".
        let exact = nth_max_setup1(r, d).unwrap();
        assert_relative_eq!(exact, 70.113_935, max_relative = 1e-6);
        let approx = nth_max_setup1_approx(KAPPA, GAMMA, CHI1, CHI2).unwrap();
        assert_relative_eq!(approx, 70.175_438_596, max_relative = 1e-6);
        // r = 0: nothing to protect.
        assert_abs_diff_eq!(nth_max_setup1(0.0, 0.5).unwrap(), 0.0, epsilon = 1e-15);
        // d0 -> 1: numerator vanishes.
        assert_abs_diff_eq!(nth_max_setup1(0.5, 1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert!(matches!(
            nth_max_setup1(0.5, 0.0),
            Err(AnalyticsError::UnboundedThermalTolerance)
        ));
    }

    #[test]
    fn threshold_consistency_setup1() {
        // epr_min(r, d0, nth_max(r, d0)) = 2 exactly.
        for &r in &[0.1, 0.3466, 0.8] {
            for &d in &[1e-4, 3.55e-3, 0.2, 0.9] {
                let nmax = nth_max_setup1(r, d).unwrap();
                assert_abs_diff_eq!(epr_min_setup1(r, d, nmax), 2.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn t_min_values() {
        let est = t_min(KAPPA, 0.0283).unwrap();
        assert_relative_eq!(est.t, 80.0, max_relative = 1e-14);
        assert!(!est.extrapolated);
        // Boundary G = kappa/2.
        let est = t_min(KAPPA, 0.025).unwrap();
        assert_relative_eq!(est.t, 80.0, max_relative = 1e-14);
        // Slow-transfer extrapolation: eta_+ = -kappa/2 + sqrt(kappa^2/4 - G^2).
        let est = t_min(KAPPA, 0.01).unwrap();
        let eta = -0.025 + (0.000_625f64 - 0.000_1).sqrt();
        assert_relative_eq!(est.t, 2.0 / eta.abs(), max_relative = 1e-12);
        assert!(est.extrapolated);
        assert!(matches!(t_min(KAPPA, 0.0), Err(AnalyticsError::NoStateTransfer)));
    }

    #[test]
    fn eta_structure() {
        // G = kappa/2: degenerate real -kappa/2.
        let (p, m) = eta_eigenvalues(KAPPA, KAPPA / 2.0);
        assert_abs_diff_eq!(p.re, -0.025, epsilon = 1e-15);
        assert_abs_diff_eq!(p.im, 0.0, epsilon = 1e-15);
        assert_eq!(p, m);
        // G > kappa/2: complex pair with real part -kappa/2.
        let (p, m) = eta_eigenvalues(KAPPA, 0.0283);
        assert_abs_diff_eq!(p.re, -0.025, epsilon = 1e-15);
        assert_abs_diff_eq!(m.re, -0.025, epsilon = 1e-15);
        assert!(p.im > 0.0 && m.im < 0.0);
    }

    #[test]
    fn setup2_limits_and_example() {
        // d0 = 0: r_tilde = 0, n_bar2 = 0, epr = e^{-2r} + 1.
        let s = setup2_thermal(0.5, 0.0, 0.0, 3.0);
        assert_abs_diff_eq!(s.r_tilde, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.n_bar2, 0.0, epsilon = 1e-15);
        assert_relative_eq!(s.epr_min_inf, (-1.0f64).exp() + 7.0 * 1.0, max_relative = 1e-14);

        // Reference point: nth_max ~ (0.996448 / 2.007106) * 0.5 ~ 0.2482.
        let r = 0.5 * 2.0f64.ln();
        let d = 3.552_956_489_517e-3;
        let s = setup2_thermal(r, 0.0, d, 0.0);
        assert_relative_eq!(s.nth_max, 0.248_229_811, max_relative = 1e-6);
        // Threshold consistency: plugging nth_max back gives exactly 2.
        let s_at_max = setup2_thermal(r, 0.0, d, s.nth_max);
        assert_abs_diff_eq!(s_at_max.epr_min_inf, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn setup2_tolerance_below_setup1() {
        for &r in &[0.1, 0.35, 0.9] {
            for &d in &[1e-3, 0.05, 0.4, 0.95] {
                let s1 = nth_max_setup1(r, d).unwrap();
                let s2 = setup2_thermal(r, 0.0, d, 0.0).nth_max;
                assert!(s2 < s1, "setup2 tolerance must be smaller: {s2} vs {s1}");
            }
        }
    }

    #[test]
    fn monotonicity_of_epr_min() {
        let r = 0.5;
        let mut prev = epr_min_setup1(r, 0.01, 0.0);
        for &n in &[0.5, 1.0, 5.0, 20.0] {
            let v = epr_min_setup1(r, 0.01, n);
            assert!(v > prev);
            prev = v;
        }
        let mut prev = epr_min_setup1(r, 1e-4, 1.0);
        for &d in &[1e-3, 1e-2, 0.1, 0.5, 1.0] {
            let v = epr_min_setup1(r, d, 1.0);
            assert!(v > prev);
            prev = v;
        }
    }
}
