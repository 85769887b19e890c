//! The four subcommands: closed-form tables, trajectory simulation,
//! parameter sweeps and validation campaigns.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use mechsqueeze::analytics::{self, AnalyticsError};
use mechsqueeze::dynamics::{CouplingProfile, DriveSpec, SystemParams};
use mechsqueeze::meanfield;
use mechsqueeze::protocols::{
    self, ProtocolError, ProtocolResult, ProtocolSelector, RowStatus, TwoStepSchedule,
    T_SWITCH_SAFETY,
};

use crate::config::{ConfigError, RunConfig, SetupKind};
use crate::manifest::{PredictionOut, RunManifest, Summary};
use crate::validate::{self, Check, ValidationLevel};

/// Command-level failure; `exit_code` distinguishes stability rejections.
#[derive(Debug)]
pub enum CliError {
    /// Configuration problem.
    Config(ConfigError),
    /// Parameters rejected by the stability gate.
    Stability(String),
    /// Protocol or numerics failure.
    Run(String),
    /// Filesystem failure.
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Stability(msg) => write!(f, "stability violated: {msg}"),
            CliError::Run(msg) => write!(f, "{msg}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    /// Process exit code: 2 for stability rejections, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Stability(_) => 2,
            _ => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Unstable { chi1, chi2 } => {
                CliError::Stability(format!("chi1 = {chi1} >= chi2 = {chi2}"))
            }
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<AnalyticsError> for CliError {
    fn from(e: AnalyticsError) -> Self {
        match e {
            AnalyticsError::StabilityViolated { chi1, chi2 } => {
                CliError::Stability(format!("chi1 = {chi1} >= chi2 = {chi2}"))
            }
            other => CliError::Run(other.to_string()),
        }
    }
}

/// A configuration resolved into concrete model inputs.
pub struct ResolvedRun {
    /// Physical parameters with the pump drives filled in.
    pub params: SystemParams,
    /// Effective coupling profile of the (first) drive.
    pub profile: CouplingProfile,
    /// Two-step schedule (setup II only).
    pub schedule: Option<TwoStepSchedule>,
}

/// Expands a configuration into system parameters, coupling profile and
/// (for setup II) the pump schedule.
pub fn resolve(cfg: &RunConfig) -> Result<ResolvedRun, CliError> {
    let omega_m = cfg.omega_m;
    let s = (cfg.kappa * cfg.kappa + omega_m * omega_m).sqrt();
    let (e1, e2) = match (cfg.chi, cfg.e) {
        (Some((c1, c2)), _) => {
            if cfg.g <= 0.0 {
                return Err(CliError::Run(String::from(
                    "chi1/chi2 configuration needs g > 0 to derive pump amplitudes",
                )));
            }
            (c1 * s / cfg.g, c2 * s / cfg.g)
        }
        (None, Some((e1, e2))) => (e1, e2),
        (None, None) => unreachable!("config validation requires a drive"),
    };
    let omega_mod = cfg.omega_mod.unwrap_or(2.0 * omega_m);

    match cfg.setup {
        SetupKind::Setup1Rwa | SetupKind::Setup1Full => {
            let (phi11, phi12) = if cfg.kappa > 0.0 {
                let ph = meanfield::phase_conditions(cfg.kappa, omega_m, cfg.phi)
                    .map_err(|e| CliError::Run(e.to_string()))?;
                (ph.phi11, ph.phi12)
            } else {
                // kappa -> 0 limit of arctan(omega_m/kappa).
                (cfg.phi - std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)
            };
            let pump = vec![
                DriveSpec::new(e1, e2, omega_mod, phi11, phi12)
                    .map_err(|e| CliError::Run(e.to_string()))?,
                DriveSpec::new(e1, e2, omega_mod, phi11 + std::f64::consts::PI, phi12)
                    .map_err(|e| CliError::Run(e.to_string()))?,
            ];
            let params = SystemParams {
                omega_m,
                kappa: cfg.kappa,
                gamma_m: cfg.gamma_m,
                n_th: cfg.n_th,
                g: cfg.g,
                pump,
                j12: 0.0,
                delta: cfg.delta.unwrap_or(omega_m),
            };
            let profile =
                meanfield::chi_from_drive(params.g, &params.pump[0], params.kappa, omega_m);
            Ok(ResolvedRun {
                params,
                profile,
                schedule: None,
            })
        }
        SetupKind::Setup2 => {
            let j12 = cfg.j12.expect("config validation requires j12 for setup2");
            let chi = meanfield::chi_from_drive(
                cfg.g,
                &DriveSpec::new(e1, e2, omega_mod, 0.0, 0.0)
                    .map_err(|e| CliError::Run(e.to_string()))?,
                cfg.kappa,
                omega_m,
            );
            let t_switch = if cfg.single_step {
                f64::INFINITY
            } else {
                match cfg.t_switch {
                    Some(t) => t,
                    None => {
                        let g_rate = analytics::transfer_rate(chi.chi1, chi.chi2)?;
                        let t_min = analytics::t_min(cfg.kappa, g_rate)?;
                        T_SWITCH_SAFETY * t_min.t
                    }
                }
            };
            let schedule = TwoStepSchedule::standard(
                cfg.kappa, omega_m, j12, e1, e2, cfg.phi, t_switch,
            )?;
            let params = SystemParams {
                omega_m,
                kappa: cfg.kappa,
                gamma_m: cfg.gamma_m,
                n_th: cfg.n_th,
                g: cfg.g,
                pump: vec![schedule.step1.drive],
                j12,
                delta: schedule.step1.delta,
            };
            let profile = meanfield::chi_from_drive(
                params.g,
                &schedule.step1.drive,
                params.kappa,
                omega_m,
            );
            Ok(ResolvedRun {
                params,
                profile,
                schedule: Some(schedule),
            })
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = fs::File::create(&path)?;
    f.write_all(contents.as_bytes())?;
    Ok(path)
}

/// What a command produced, for the caller to report.
pub struct CmdOutcome {
    /// Files written.
    pub outputs: Vec<PathBuf>,
    /// Human-readable lines already printed to stdout.
    pub all_passed: bool,
}

fn fmt_g(v: f64) -> String {
    format!("{v:.6}")
}

/// `analytic`: evaluate every closed-form prediction, print a table and
/// write `analytic.txt` plus `manifest.json`.
pub fn cmd_analytic(cfg: &RunConfig, out_dir: &Path) -> Result<CmdOutcome, CliError> {
    let resolved = resolve(cfg)?;
    let p = analytics::predict(
        &resolved.profile,
        resolved.params.kappa,
        resolved.params.gamma_m,
        resolved.params.n_th,
    )?;
    let mut table = String::new();
    table.push_str(&format!(
        "quantity                 value\n\
         r                        {}\n\
         G                        {}\n\
         d0                       {:.6e}\n\
         occupation <c^dag c>     {:.6e}\n\
         cross <c1 c2>            {:.6e} {:+.6e} i\n\
         Delta_EPR,min (setup I)  {}\n",
        fmt_g(p.r),
        fmt_g(p.transfer),
        p.d0,
        p.occupation,
        p.cross.re,
        p.cross.im,
        fmt_g(p.epr_min),
    ));
    match p.nth_max {
        Some(v) => table.push_str(&format!("n_th,max (setup I)       {}\n", fmt_g(v))),
        None => table.push_str("n_th,max (setup I)       unbounded (d0 = 0)\n"),
    }
    if let Some(v) = p.nth_max_approx {
        table.push_str(&format!("n_th,max approx          {}\n", fmt_g(v)));
    }
    match p.t_min {
        Some(t) => table.push_str(&format!(
            "t_min                    {}{}\n",
            fmt_g(t.t),
            if t.extrapolated { "  (extrapolated)" } else { "" }
        )),
        None => table.push_str("t_min                    none (kappa = 0)\n"),
    }
    table.push_str(&format!(
        "eta_+                    {:+.6e} {:+.6e} i\n\
         eta_-                    {:+.6e} {:+.6e} i\n\
         setup II r_tilde         {}\n\
         setup II n_bar2          {}\n\
         setup II Delta_EPR(inf)  {}\n\
         setup II n_th,max        {}\n",
        p.eta.0.re,
        p.eta.0.im,
        p.eta.1.re,
        p.eta.1.im,
        fmt_g(p.setup2.r_tilde),
        fmt_g(p.setup2.n_bar2),
        fmt_g(p.setup2.epr_min_inf),
        fmt_g(p.setup2.nth_max),
    ));
    print!("{table}");

    let mut manifest = RunManifest::new("analytic", cfg.canonical_text());
    manifest.prediction = Some(PredictionOut::from(&p));
    manifest.summary = Summary {
        predicted_epr_min: Some(p.epr_min),
        ..Summary::default()
    };
    let t = write_file(out_dir, "analytic.txt", &table)?;
    manifest.outputs.push(t.display().to_string());
    let m = write_file(out_dir, "manifest.json", &manifest.to_json())?;
    Ok(CmdOutcome {
        outputs: vec![t, m],
        all_passed: true,
    })
}

fn run_configured(cfg: &RunConfig, resolved: &ResolvedRun) -> Result<ProtocolResult, CliError> {
    Ok(match cfg.setup {
        SetupKind::Setup1Rwa => {
            protocols::run_setup1(&resolved.params, cfg.t_end, cfg.grid_points)?
        }
        SetupKind::Setup1Full => {
            protocols::run_setup1_full(&resolved.params, cfg.t_end, cfg.grid_points)?
        }
        SetupKind::Setup2 => {
            let schedule = resolved.schedule.as_ref().expect("setup2 has a schedule");
            protocols::run_setup2(&resolved.params, schedule, cfg.t_end, cfg.grid_points)?
        }
    })
}

/// Formats the fixed-width trajectory CSV (17 significant digits).
pub fn trajectory_csv(res: &ProtocolResult) -> String {
    let mut csv = String::from("t,epr_min,n_c1,n_c2,re_c1c2,im_c1c2,purity\n");
    for i in 0..res.times.len() {
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            res.times[i],
            res.epr_min_series[i],
            res.occupations[i].0,
            res.occupations[i].1,
            res.cross_moments[i].re,
            res.cross_moments[i].im,
            res.purities[i],
        ));
    }
    csv
}

/// `simulate`: run the configured protocol, write `trajectory.csv` and
/// `manifest.json`, print a one-line summary.
pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<CmdOutcome, CliError> {
    let resolved = resolve(cfg)?;
    let res = run_configured(cfg, &resolved)?;
    let csv = trajectory_csv(&res);

    // For a two-step run the target is the two-mode squeezed (thermal)
    // state; the setup II closed form epr_min_inf describes the single-step
    // steady state.
    let single_step = resolved
        .schedule
        .as_ref()
        .map(|sch| sch.t_switch >= cfg.t_end)
        .unwrap_or(false);
    let predicted = if cfg.setup == SetupKind::Setup2 && single_step {
        res.prediction.setup2.epr_min_inf
    } else {
        res.prediction.epr_min
    };
    let mut manifest = RunManifest::new("simulate", cfg.canonical_text());
    manifest.prediction = Some(PredictionOut::from(&res.prediction));
    manifest.warnings = res.warnings.clone();
    manifest.summary = Summary {
        final_epr_min: Some(res.final_epr.value),
        predicted_epr_min: Some(predicted),
        deviation_from_prediction: Some((res.final_epr.value - predicted).abs()),
        final_purity: res.purities.last().copied(),
        epr_min_period_avg: res.epr_min_period_avg,
        rwa_reference_epr: res.rwa_reference_epr,
        ..Summary::default()
    };
    let c = write_file(out_dir, "trajectory.csv", &csv)?;
    manifest.outputs.push(c.display().to_string());
    let m = write_file(out_dir, "manifest.json", &manifest.to_json())?;
    println!(
        "final epr_min = {:.9} (prediction {:.9}); wrote {}",
        res.final_epr.value,
        predicted,
        c.display()
    );
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    Ok(CmdOutcome {
        outputs: vec![c, m],
        all_passed: true,
    })
}

/// Formats the sweep summary CSV.
pub fn sweep_csv(axis: &str, rows: &[protocols::SweepRow]) -> String {
    let mut csv = format!("{axis},status,epr_min,predicted_epr_min,n_c1,n_c2,purity\n");
    for row in rows {
        let status = match &row.status {
            RowStatus::Ok => "ok".to_string(),
            RowStatus::Unstable => "unstable".to_string(),
            RowStatus::Failed(msg) => format!("error: {}", msg.replace(',', ";")),
        };
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        csv.push_str(&format!(
            "{:.16e},{},{},{},{},{},{}\n",
            row.value,
            status,
            opt(row.final_epr_min),
            opt(row.predicted_epr_min),
            opt(row.occupations.map(|o| o.0)),
            opt(row.occupations.map(|o| o.1)),
            opt(row.purity),
        ));
    }
    csv
}

/// `sweep`: run the configured protocol once per axis value (rows evaluated
/// on a bounded worker pool, merged by index), write `sweep.csv` and
/// `manifest.json`.
pub fn cmd_sweep(
    cfg: &RunConfig,
    axis: &str,
    values: &[f64],
    jobs: usize,
    out_dir: &Path,
) -> Result<CmdOutcome, CliError> {
    let resolved = resolve(cfg)?;
    let selector = match cfg.setup {
        SetupKind::Setup1Rwa => ProtocolSelector::Setup1Rwa {
            t_end: cfg.t_end,
            n_grid: cfg.grid_points,
        },
        SetupKind::Setup1Full => ProtocolSelector::Setup1Full {
            t_end: cfg.t_end,
            n_grid: cfg.grid_points,
        },
        SetupKind::Setup2 => ProtocolSelector::Setup2 {
            schedule: *resolved.schedule.as_ref().expect("setup2 has a schedule"),
            t_end: cfg.t_end,
            n_grid: cfg.grid_points,
        },
    };
    // Validate the axis up front.
    protocols::apply_axis(&mut resolved.params.clone(), axis, 0.0)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Run(format!("worker pool: {e}")))?;
    let rows: Vec<protocols::SweepRow> = pool.install(|| {
        use rayon::prelude::*;
        values
            .par_iter()
            .map(|&v| protocols::sweep_row(&resolved.params, axis, v, &selector))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let csv = sweep_csv(axis, &rows);
    let failed = rows
        .iter()
        .filter(|r| !matches!(r.status, RowStatus::Ok))
        .count();
    let mut manifest = RunManifest::new(
        format!(
            "sweep --axis {axis} --values {}",
            values
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
        cfg.canonical_text(),
    );
    manifest.summary = Summary {
        rows: Some(rows.len()),
        failed_rows: Some(failed),
        ..Summary::default()
    };
    let c = write_file(out_dir, "sweep.csv", &csv)?;
    manifest.outputs.push(c.display().to_string());
    let m = write_file(out_dir, "manifest.json", &manifest.to_json())?;
    println!(
        "{} rows ({failed} failed); wrote {}",
        rows.len(),
        c.display()
    );
    Ok(CmdOutcome {
        outputs: vec![c, m],
        all_passed: true,
    })
}

/// Renders the validation report table.
pub fn validation_report(checks: &[Check]) -> String {
    let mut out = String::from(
        "status  check                                      measured      tolerance\n",
    );
    for c in checks {
        out.push_str(&format!(
            "{}  {:<41} {:>12.4e}  {:>12.4e}{}\n",
            if c.passed { "PASS  " } else { "FAIL  " },
            c.name,
            c.measured,
            c.tolerance,
            if c.detail.is_empty() {
                String::new()
            } else {
                format!("  [{}]", c.detail)
            }
        ));
    }
    out
}

/// `validate`: run the check suite at the requested level, print one line per
/// check and write `validation.txt`. Fails (for the caller to map to a
/// nonzero exit) if any check fails.
pub fn cmd_validate(level: ValidationLevel, out_dir: &Path) -> Result<CmdOutcome, CliError> {
    let checks = validate::run_checks(level);
    let report = validation_report(&checks);
    print!("{report}");
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!(
        "{} checks, {} failed ({} level)",
        checks.len(),
        failed,
        match level {
            ValidationLevel::Fast => "fast",
            ValidationLevel::Full => "full",
        }
    );
    let mut manifest = RunManifest::new(
        format!(
            "validate --level {}",
            match level {
                ValidationLevel::Fast => "fast",
                ValidationLevel::Full => "full",
            }
        ),
        String::new(),
    );
    manifest.summary = Summary {
        checks: Some(checks.len()),
        checks_failed: Some(failed),
        ..Summary::default()
    };
    let r = write_file(out_dir, "validation.txt", &report)?;
    manifest.outputs.push(r.display().to_string());
    let m = write_file(out_dir, "manifest.json", &manifest.to_json())?;
    Ok(CmdOutcome {
        outputs: vec![r, m],
        all_passed: failed == 0,
    })
}
