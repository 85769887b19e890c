//! Run manifests: JSON records that pin a run's configuration, analytic
//! predictions and summary metrics. Given the same toolkit version, the
//! echoed configuration reproduces the run's outputs byte for byte.

use mechsqueeze::analytics::AnalyticPrediction;
use serde::Serialize;

/// Serialized complex number.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComplexOut {
    /// Real part.
    pub re: f64,
    /// Imaginary part.
    pub im: f64,
}

impl From<num_complex::Complex64> for ComplexOut {
    fn from(z: num_complex::Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Serialized closed-form predictions.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionOut {
    /// Squeeze parameter `r`.
    pub r: f64,
    /// Transfer rate `G`.
    pub transfer_rate: f64,
    /// Mixedness parameter `d0`.
    pub d0: f64,
    /// Steady mechanical occupation.
    pub occupation: f64,
    /// Steady `<c1 c2>`.
    pub cross: ComplexOut,
    /// Setup I `Delta_EPR,min`.
    pub epr_min: f64,
    /// Setup I thermal tolerance (absent when unbounded).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nth_max: Option<f64>,
    /// Weak-damping approximation of the tolerance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nth_max_approx: Option<f64>,
    /// Minimum preparation time (absent when `kappa = 0`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    /// Whether `t_min` extends beyond the closed-form regime.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_min_extrapolated: Option<bool>,
    /// Relaxation eigenvalues `eta_pm`.
    pub eta: [ComplexOut; 2],
    /// Setup II single-step quantities.
    pub setup2: Setup2Out,
}

/// Serialized setup II thermal characterization.
#[derive(Debug, Clone, Serialize)]
pub struct Setup2Out {
    /// Squeeze reduction of the driven normal mode.
    pub r_tilde: f64,
    /// Effective thermal occupation of the driven normal mode.
    pub n_bar2: f64,
    /// `Delta_EPR,min(infinity)`.
    pub epr_min_inf: f64,
    /// Thermal tolerance.
    pub nth_max: f64,
}

impl From<&AnalyticPrediction> for PredictionOut {
    fn from(p: &AnalyticPrediction) -> Self {
        Self {
            r: p.r,
            transfer_rate: p.transfer,
            d0: p.d0,
            occupation: p.occupation,
            cross: p.cross.into(),
            epr_min: p.epr_min,
            nth_max: p.nth_max,
            nth_max_approx: p.nth_max_approx,
            t_min: p.t_min.map(|t| t.t),
            t_min_extrapolated: p.t_min.map(|t| t.extrapolated),
            eta: [p.eta.0.into(), p.eta.1.into()],
            setup2: Setup2Out {
                r_tilde: p.setup2.r_tilde,
                n_bar2: p.setup2.n_bar2,
                epr_min_inf: p.setup2.epr_min_inf,
                nth_max: p.setup2.nth_max,
            },
        }
    }
}

/// Summary metrics of a run or sweep.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    /// Final EPR minimum (simulation runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_epr_min: Option<f64>,
    /// Predicted steady EPR minimum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_epr_min: Option<f64>,
    /// `|final - predicted|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation_from_prediction: Option<f64>,
    /// Final pair purity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_purity: Option<f64>,
    /// Late-time period-averaged EPR minimum (lab-frame runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epr_min_period_avg: Option<f64>,
    /// Rotating-frame steady reference (lab-frame runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rwa_reference_epr: Option<f64>,
    /// Sweep rows evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    /// Sweep rows that failed or were rejected as unstable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_rows: Option<usize>,
    /// Validation checks run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<usize>,
    /// Validation checks failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks_failed: Option<usize>,
}

/// The manifest written next to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    /// Crate version that produced the run.
    pub toolkit_version: String,
    /// RFC 3339 creation timestamp (UTC).
    pub created_utc: String,
    /// Subcommand and arguments.
    pub command: String,
    /// Canonical configuration echo; re-parses to the run's configuration.
    pub config_echo: String,
    /// Closed-form predictions, when the command computes them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction: Option<PredictionOut>,
    /// Non-fatal warnings attached to the run.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
    /// Summary metrics.
    pub summary: Summary,
    /// Files written by the command.
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// A manifest skeleton for `command` with the given config echo.
    pub fn new(command: impl Into<String>, config_echo: impl Into<String>) -> Self {
        Self {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            created_utc: chrono::Utc::now().to_rfc3339(),
            command: command.into(),
            config_echo: config_echo.into(),
            prediction: None,
            warnings: Vec::new(),
            summary: Summary::default(),
            outputs: Vec::new(),
        }
    }

    /// Pretty JSON text.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialization cannot fail")
    }
}
