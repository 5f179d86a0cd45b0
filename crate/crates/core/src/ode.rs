//! Adaptive Dormand–Prince 5(4) integrator for scalar ODEs.
//!
//! Only what the Prüfer shooting needs: one unknown, dense control over
//! termination through a per-step callback, and a hard step budget.

use crate::error::{Result, SpectraError};

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { rtol: 1e-10, atol: 1e-12, h_init: 1e-3, h_max: f64::INFINITY, max_steps: 10_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome {
    pub t: f64,
    pub y: f64,
    pub accepted: usize,
    pub rejected: usize,
    /// True when the callback ended the integration before `t_end`.
    pub stopped: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `t0` to `t_end > t0`.
///
/// `on_step` sees every accepted `(t, y)` and may stop the integration early.
pub fn integrate<F, G>(f: F, t0: f64, y0: f64, t_end: f64, opts: &Options, mut on_step: G) -> Result<Outcome>
where
    F: Fn(f64, f64) -> f64,
    G: FnMut(f64, f64) -> Control,
{
    let mut t = t0;
    let mut y = y0;
    let mut out = Outcome { t, y, accepted: 0, rejected: 0, stopped: false };
    if !(t_end > t0) {
        return Ok(out);
    }

    let mut h = opts.h_init.min(opts.h_max).min(t_end - t0);
    let mut k1 = f(t, y);
    let mut last_ratio = 1e-4_f64;

    while t < t_end {
        if out.accepted + out.rejected >= opts.max_steps {
            return Err(SpectraError::Numeric(format!(
                "step budget of {} exhausted at t = {t} (t_end = {t_end})",
                opts.max_steps
            )));
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        let k2 = f(t + C2 * h, y + h * A21 * k1);
        let k3 = f(t + C3 * h, y + h * (A31 * k1 + A32 * k2));
        let k4 = f(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        let k6 = f(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        let y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
        let k7 = f(t + h, y_new);

        let err_abs = (h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)).abs();
        let scale = opts.atol + opts.rtol * y.abs().max(y_new.abs());
        let ratio = err_abs / scale;

        if !y_new.is_finite() || !ratio.is_finite() {
            return Err(SpectraError::Numeric(format!("non-finite state at t = {t} with step {h}")));
        }

        if ratio <= 1.0 {
            t = if last { t_end } else { t + h };
            y = y_new;
            k1 = k7;
            out.accepted += 1;
            // PI step-size control
            let fac = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.7 / 5.0) * last_ratio.powf(0.4 / 5.0)).clamp(0.2, 5.0)
            };
            last_ratio = ratio.max(1e-4);
            h = (h * fac).min(opts.h_max);
            if on_step(t, y) == Control::Stop {
                out.stopped = t < t_end;
                break;
            }
        } else {
            out.rejected += 1;
            h *= (0.9 * ratio.powf(-0.2)).max(0.2);
            if h <= f64::EPSILON * t.abs().max(1.0) {
                return Err(SpectraError::Numeric(format!("step size underflow at t = {t}")));
            }
        }
    }

    out.t = t;
    out.y = y;
    Ok(out)
}
