//! Run configuration: a flat `key = value` text format with one section per
//! concern, chosen for diff-friendliness in sweep provenance.
//!
//! ```text
//! setup = setup1_rwa
//!
//! [system]
//! kappa = 0.05
//! gamma_m = 0.0
//! n_th = 0.0
//!
//! [drive]
//! chi1 = 0.01
//! chi2 = 0.03
//!
//! [grid]
//! t_end = 800.0
//! points = 400
//! ```
//!
//! All frequencies are in units of `omega_m = 1`. The canonical echo of a
//! parsed configuration re-parses to an equal value.

use std::fmt;
use std::str::FromStr;

/// Which protocol a run drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetupKind {
    /// Setup I, rotating-frame model.
    Setup1Rwa,
    /// Setup I, full lab-frame model.
    Setup1Full,
    /// Setup II (coupled cavities).
    Setup2,
}

impl SetupKind {
    /// Canonical config token.
    pub fn token(&self) -> &'static str {
        match self {
            SetupKind::Setup1Rwa => "setup1_rwa",
            SetupKind::Setup1Full => "setup1_full",
            SetupKind::Setup2 => "setup2",
        }
    }
}

impl FromStr for SetupKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "setup1_rwa" => Ok(SetupKind::Setup1Rwa),
            "setup1_full" => Ok(SetupKind::Setup1Full),
            "setup2" => Ok(SetupKind::Setup2),
            other => Err(format!(
                "unknown setup `{other}` (expected setup1_rwa, setup1_full or setup2)"
            )),
        }
    }
}

/// Configuration error with the offending line when applicable.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line number, when tied to a specific line.
    pub line: Option<usize>,
    /// Description.
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {n}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

/// A fully parsed run configuration. All computation downstream of a config
/// is deterministic (no randomness anywhere in the toolkit).
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Protocol selector.
    pub setup: SetupKind,
    /// Mechanical frequency (the unit; normally 1).
    pub omega_m: f64,
    /// Cavity energy-decay rate.
    pub kappa: f64,
    /// Mechanical damping rate.
    pub gamma_m: f64,
    /// Thermal phonon number of the mechanical bath.
    pub n_th: f64,
    /// Single-photon coupling.
    pub g: f64,
    /// Effective coupling tones, when given directly.
    pub chi: Option<(f64, f64)>,
    /// Pump tone amplitudes, when given instead of `chi`.
    pub e: Option<(f64, f64)>,
    /// Target effective phase `phi_1`.
    pub phi: f64,
    /// Modulation frequency (default `2 omega_m`).
    pub omega_mod: Option<f64>,
    /// Cavity-laser detuning (default `omega_m`; setup II derives it from
    /// the schedule).
    pub delta: Option<f64>,
    /// Inter-cavity tunneling (setup II).
    pub j12: Option<f64>,
    /// Switch time of the two-step schedule (default: safety factor times
    /// the analytic minimum preparation time).
    pub t_switch: Option<f64>,
    /// Run setup II single-step (never switch).
    pub single_step: bool,
    /// Run length.
    pub t_end: f64,
    /// Number of output-grid intervals.
    pub grid_points: usize,
}

const SECTIONS: [&str; 4] = ["system", "drive", "setup2", "grid"];

impl RunConfig {
    /// Parses the flat key = value format.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut setup = None;
        let mut omega_m = 1.0f64;
        let mut kappa = None;
        let mut gamma_m = 0.0f64;
        let mut n_th = 0.0f64;
        let mut g = 1e-6f64;
        let mut chi1 = None;
        let mut chi2 = None;
        let mut e1 = None;
        let mut e2 = None;
        let mut phi = 0.0f64;
        let mut omega_mod = None;
        let mut delta = None;
        let mut j12 = None;
        let mut t_switch = None;
        let mut single_step = false;
        let mut t_end = None;
        let mut grid_points = None;

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                if !SECTIONS.contains(&name.trim()) {
                    return Err(err(Some(line_no), format!("unknown section `[{name}]`")));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(Some(line_no), format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            let fnum = || -> Result<f64, ConfigError> {
                value
                    .parse::<f64>()
                    .map_err(|_| err(Some(line_no), format!("`{key}` needs a number, got `{value}`")))
            };
            match key {
                "setup" => {
                    setup = Some(
                        value
                            .parse::<SetupKind>()
                            .map_err(|m| err(Some(line_no), m))?,
                    )
                }
                "omega_m" => omega_m = fnum()?,
                "kappa" => kappa = Some(fnum()?),
                "gamma_m" => gamma_m = fnum()?,
                "n_th" => n_th = fnum()?,
                "g" => g = fnum()?,
                "chi1" => chi1 = Some(fnum()?),
                "chi2" => chi2 = Some(fnum()?),
                "e1" => e1 = Some(fnum()?),
                "e2" => e2 = Some(fnum()?),
                "phi" => phi = fnum()?,
                "omega_mod" => omega_mod = Some(fnum()?),
                "delta" => delta = Some(fnum()?),
                "j12" => j12 = Some(fnum()?),
                "t_switch" => t_switch = Some(fnum()?),
                "single_step" => {
                    single_step = value.parse::<bool>().map_err(|_| {
                        err(Some(line_no), format!("`single_step` needs true/false, got `{value}`"))
                    })?
                }
                "t_end" => t_end = Some(fnum()?),
                "points" => {
                    grid_points = Some(value.parse::<usize>().map_err(|_| {
                        err(Some(line_no), format!("`points` needs a positive integer, got `{value}`"))
                    })?)
                }
                other => return Err(err(Some(line_no), format!("unknown key `{other}`"))),
            }
        }

        let setup = setup.ok_or_else(|| err(None, "missing `setup`"))?;
        let kappa = kappa.ok_or_else(|| err(None, "missing `kappa`"))?;
        let t_end = t_end.ok_or_else(|| err(None, "missing `t_end`"))?;
        let grid_points = grid_points.ok_or_else(|| err(None, "missing `points`"))?;
        let chi = match (chi1, chi2) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(err(None, "chi1 and chi2 must be given together")),
        };
        let e = match (e1, e2) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(err(None, "e1 and e2 must be given together")),
        };
        let cfg = Self {
            setup,
            omega_m,
            kappa,
            gamma_m,
            n_th,
            g,
            chi,
            e,
            phi,
            omega_mod,
            delta,
            j12,
            t_switch,
            single_step,
            t_end,
            grid_points,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.chi.is_none() && self.e.is_none() {
            return Err(err(None, "give either chi1/chi2 or e1/e2"));
        }
        if !self.omega_m.is_finite() || self.omega_m <= 0.0 {
            return Err(err(None, "omega_m must be positive"));
        }
        for (name, v) in [
            ("kappa", self.kappa),
            ("gamma_m", self.gamma_m),
            ("n_th", self.n_th),
            ("g", self.g),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(err(None, format!("{name} must be finite and nonnegative")));
            }
        }
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return Err(err(None, "t_end must be positive"));
        }
        if self.grid_points == 0 {
            return Err(err(None, "points must be at least 1"));
        }
        if self.setup == SetupKind::Setup2 && self.j12.is_none() {
            return Err(err(None, "setup2 requires j12"));
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an equal configuration.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("setup = {}\n\n[system]\n", self.setup.token()));
        s.push_str(&format!("omega_m = {}\n", self.omega_m));
        s.push_str(&format!("kappa = {}\n", self.kappa));
        s.push_str(&format!("gamma_m = {}\n", self.gamma_m));
        s.push_str(&format!("n_th = {}\n", self.n_th));
        s.push_str(&format!("g = {}\n", self.g));
        s.push_str("\n[drive]\n");
        if let Some((a, b)) = self.chi {
            s.push_str(&format!("chi1 = {a}\nchi2 = {b}\n"));
        }
        if let Some((a, b)) = self.e {
            s.push_str(&format!("e1 = {a}\ne2 = {b}\n"));
        }
        s.push_str(&format!("phi = {}\n", self.phi));
        if let Some(v) = self.omega_mod {
            s.push_str(&format!("omega_mod = {v}\n"));
        }
        if let Some(v) = self.delta {
            s.push_str(&format!("delta = {v}\n"));
        }
        if self.j12.is_some() || self.t_switch.is_some() || self.single_step {
            s.push_str("\n[setup2]\n");
            if let Some(v) = self.j12 {
                s.push_str(&format!("j12 = {v}\n"));
            }
            if let Some(v) = self.t_switch {
                s.push_str(&format!("t_switch = {v}\n"));
            }
            if self.single_step {
                s.push_str("single_step = true\n");
            }
        }
        s.push_str("\n[grid]\n");
        s.push_str(&format!("t_end = {}\n", self.t_end));
        s.push_str(&format!("points = {}\n", self.grid_points));
        s
    }
}
