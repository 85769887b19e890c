//! Embedded adaptive Runge-Kutta integration.
//!
//! A single Dormand-Prince 5(4) stepper drives every time integration in the
//! crate: Gaussian moment equations, classical pump-field equations and the
//! truncated-Fock master equation. Step-size control uses the weighted
//! max-norm of the embedded error estimate with mixed absolute/relative
//! tolerances.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use nalgebra::DVector;

#[allow(unused_imports)]
use num_traits::Float;

/// Tolerances and safeguards for [`integrate_path`].
#[derive(Debug, Clone)]
pub struct OdeOptions {
    /// Relative tolerance entering the per-component error weight.
    pub rtol: f64,
    /// Absolute tolerance entering the per-component error weight.
    pub atol: f64,
    /// Hard cap on accepted + rejected steps.
    pub max_steps: usize,
    /// Optional cap on the step size.
    pub h_max: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 50_000_000,
            h_max: None,
        }
    }
}

impl OdeOptions {
    /// Options with the given tolerances and default safeguards.
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }
}

/// Integration failure.
#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    /// Error control forced the step below the representable floor
    /// (stiffness or a defective right-hand side) at time `t`.
    StepSizeUnderflow {
        /// Time at which the step size collapsed.
        t: f64,
    },
    /// `max_steps` exceeded before reaching the end of the span.
    MaxStepsExceeded {
        /// Time reached when the budget ran out.
        t: f64,
    },
    /// The state picked up a NaN or infinity at time `t`.
    NonFiniteState {
        /// Time of the offending step.
        t: f64,
    },
    /// Malformed time span or output grid.
    BadGrid(String),
}

impl fmt::Display for OdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OdeError::StepSizeUnderflow { t } => {
                write!(f, "step size underflow at t = {t} (stiff or defective RHS)")
            }
            OdeError::MaxStepsExceeded { t } => write!(f, "step budget exhausted at t = {t}"),
            OdeError::NonFiniteState { t } => write!(f, "non-finite state at t = {t}"),
            OdeError::BadGrid(msg) => write!(f, "bad grid: {msg}"),
        }
    }
}

impl core::error::Error for OdeError {}

// Dormand-Prince 5(4) tableau. The last row of `A` doubles as the 5th-order
// weights (FSAL).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

/// Integrates `dy/dt = rhs(t, y)` from `t0`, stopping exactly at every node of
/// `grid` (strictly increasing, `grid[0] >= t0`) and invoking `on_node` there.
///
/// The state vector is advanced in place; nodes are hit by clipping the
/// adaptive step, so reported values carry no interpolation error.
pub fn integrate_path<F, G>(
    mut rhs: F,
    t0: f64,
    y: &mut DVector<f64>,
    grid: &[f64],
    opts: &OdeOptions,
    mut on_node: G,
) -> Result<(), OdeError>
where
    F: FnMut(f64, &DVector<f64>, &mut DVector<f64>),
    G: FnMut(usize, f64, &DVector<f64>),
{
    if grid.is_empty() {
        return Err(OdeError::BadGrid(String::from("empty output grid")));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(OdeError::BadGrid(String::from(
            "output grid must be strictly increasing",
        )));
    }
    if grid[0] < t0 {
        return Err(OdeError::BadGrid(String::from(
            "output grid starts before t0",
        )));
    }

    let dim = y.len();
    let mut k: Vec<DVector<f64>> = (0..7).map(|_| DVector::zeros(dim)).collect();
    let mut y_stage = DVector::zeros(dim);
    let mut y_new = DVector::zeros(dim);

    let mut t = t0;
    let mut node = 0;
    // Emit any leading nodes that coincide with t0.
    while node < grid.len() && grid[node] <= t0 {
        on_node(node, grid[node], y);
        node += 1;
    }
    if node == grid.len() {
        return Ok(());
    }

    let t_final = grid[grid.len() - 1];
    rhs(t, y, &mut k[0]);
    // Controller step size; the taken step may be clipped to land on a node.
    let mut h_ctrl = initial_step(t_final - t0, y, &k[0], opts);
    let mut steps = 0usize;

    while node < grid.len() {
        let target = grid[node];
        let clipped = t + h_ctrl >= target;
        let h = if clipped { target - t } else { h_ctrl };
        if steps >= opts.max_steps {
            return Err(OdeError::MaxStepsExceeded { t });
        }
        steps += 1;

        // Stages 2..7; k[0] holds rhs at (t, y) (FSAL from the previous step).
        for s in 1..7 {
            y_stage.copy_from(y);
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s - 1][j];
                if a != 0.0 {
                    y_stage.axpy(a * h, kj, 1.0);
                }
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            rhs(t + C[s] * h, &y_stage, &mut tail[0]);
        }

        // 5th-order solution and embedded error.
        y_new.copy_from(y);
        for (j, kj) in k.iter().enumerate() {
            if B5[j] != 0.0 {
                y_new.axpy(B5[j] * h, kj, 1.0);
            }
        }
        let mut err_norm = 0.0f64;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += (B5[j] - B4[j]) * kj[i];
            }
            e *= h;
            let w = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            let ratio = (e / w).abs();
            if ratio.is_nan() {
                // Overflowed stages; force a rejection instead of letting
                // f64::max silently discard the NaN.
                err_norm = f64::INFINITY;
                break;
            }
            err_norm = err_norm.max(ratio);
        }

        let accepted = err_norm <= 1.0;
        let scale = if err_norm == 0.0 {
            MAX_SCALE
        } else {
            // powf(-0.2) maps an infinite error to 0, clamped to MIN_SCALE.
            (SAFETY * err_norm.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
        };

        if accepted && y_new.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::NonFiniteState { t });
        }
        if accepted {
            t = if clipped { target } else { t + h };
            core::mem::swap(y, &mut y_new);
            // FSAL: stage 7 was evaluated at (t_new, y_new).
            k.swap(0, 6);
            if clipped {
                on_node(node, target, y);
                node += 1;
                // Do not let the artificially short clipped step shrink the
                // controller; allow growth if the error says so.
                h_ctrl = h_ctrl.max(h * scale);
            } else {
                h_ctrl = h * scale;
            }
        } else {
            // k[0] still holds rhs(t, y); retry with the shrunken step.
            h_ctrl = h * scale;
        }

        if let Some(h_max) = opts.h_max {
            h_ctrl = h_ctrl.min(h_max);
        }
        if !accepted {
            let floor = 16.0 * f64::EPSILON * t.abs().max(1.0);
            if h_ctrl < floor {
                return Err(OdeError::StepSizeUnderflow { t });
            }
        }
    }
    Ok(())
}

/// Integrates from `t0` to `t1`, returning only the final state.
pub fn integrate_to<F>(
    rhs: F,
    t0: f64,
    y0: &DVector<f64>,
    t1: f64,
    opts: &OdeOptions,
) -> Result<DVector<f64>, OdeError>
where
    F: FnMut(f64, &DVector<f64>, &mut DVector<f64>),
{
    let mut y = y0.clone();
    if t1 > t0 {
        integrate_path(rhs, t0, &mut y, &[t1], opts, |_, _, _| {})?;
    } else if t1 < t0 {
        return Err(OdeError::BadGrid(String::from("t1 < t0")));
    }
    Ok(y)
}

fn initial_step(span: f64, y0: &DVector<f64>, f0: &DVector<f64>, opts: &OdeOptions) -> f64 {
    let mut d0 = 0.0f64;
    let mut d1 = 0.0f64;
    for i in 0..y0.len() {
        let w = opts.atol + opts.rtol * y0[i].abs();
        d0 = d0.max((y0[i] / w).abs());
        d1 = d1.max((f0[i] / w).abs());
    }
    let guess = if d1 > 0.0 {
        0.01 * (d0.max(1.0)) / d1
    } else {
        1e-3 * span
    };
    let h = guess.min(0.1 * span).max(1e-8 * span);
    match opts.h_max {
        Some(h_max) => h.min(h_max),
        None => h,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let y0 = DVector::from_vec(vec![1.0, 2.0]);
        let y = integrate_to(
            |_t, y, dy| {
                dy[0] = -0.7 * y[0];
                dy[1] = -0.1 * y[1];
            },
            0.0,
            &y0,
            12.0,
            &OdeOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(y[0], (-0.7f64 * 12.0).exp(), max_relative = 1e-8);
        assert_relative_eq!(y[1], 2.0 * (-0.1f64 * 12.0).exp(), max_relative = 1e-8);
    }

    #[test]
    fn harmonic_oscillator_energy_is_conserved() {
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let mut worst: f64 = 0.0;
        let grid: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let mut y = y0.clone();
        integrate_path(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &mut y,
            &grid,
            &OdeOptions::default(),
            |_, _, y| {
                let e = y[0] * y[0] + y[1] * y[1];
                worst = worst.max((e - 1.0).abs());
            },
        )
        .unwrap();
        assert!(worst < 1e-7, "energy drift {worst}");
    }

    #[test]
    fn nodes_are_hit_exactly() {
        let grid = [0.5, 1.0, 2.25];
        let mut seen = Vec::new();
        let mut y = DVector::from_vec(vec![1.0]);
        integrate_path(
            |_t, y, dy| dy[0] = -y[0],
            0.0,
            &mut y,
            &grid,
            &OdeOptions::default(),
            |i, t, _| seen.push((i, t)),
        )
        .unwrap();
        assert_eq!(seen, vec![(0, 0.5), (1, 1.0), (2, 2.25)]);
    }

    #[test]
    fn rejects_decreasing_grid() {
        let mut y = DVector::from_vec(vec![1.0]);
        let err = integrate_path(
            |_t, _y, dy| dy[0] = 0.0,
            0.0,
            &mut y,
            &[1.0, 0.5],
            &OdeOptions::default(),
            |_, _, _| {},
        )
        .unwrap_err();
        assert!(matches!(err, OdeError::BadGrid(_)));
    }

    #[test]
    fn blowup_reports_nonfinite_or_underflow() {
        // y' = y^2 with y(0)=1 blows up at t=1.
        let res = integrate_to(
            |_t, y, dy| dy[0] = y[0] * y[0],
            0.0,
            &DVector::from_vec(vec![1.0]),
            2.0,
            &OdeOptions::default(),
        );
        assert!(matches!(
            res,
            Err(OdeError::NonFiniteState { .. })
                | Err(OdeError::StepSizeUnderflow { .. })
                | Err(OdeError::MaxStepsExceeded { .. })
        ));
    }
}
