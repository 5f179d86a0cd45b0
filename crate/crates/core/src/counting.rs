//! Eigenvalue counting by Prüfer-angle shooting.
//!
//! For `-u'' + V u = λ u` on `(α², ∞)` write `k u = ρ sin θ`, `u' = ρ cos θ`
//! with a constant scale `k > 0`. Then
//!
//! ```text
//! θ' = k cos²θ + (λ - V(t))/k · sin²θ
//! ```
//!
//! and `θ` crosses each multiple of `π` upward exactly where `u` vanishes.
//! Starting from `θ(α²) = 0` (Dirichlet) or `π/2` (Neumann), the number of
//! eigenvalues strictly below `λ` equals the number of interior zeros, i.e.
//! `⌊θ(∞)/π⌋`. Past the outermost turning point `V > λ`, and once `u u' ≥ 0`
//! there `|u|` grows monotonically, so the count is final and integration
//! stops.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectraError};
use crate::geometry::Cusp;
use crate::modes::{spectral_window, BoundaryCondition, ModeOperator, ModeWindow};
use crate::ode::{self, Control};

/// Extra modes checked on each side of the spectral window.
pub const WINDOW_MARGIN: i64 = 2;

/// Counts whose Prüfer residual falls below this are flagged.
pub const NEAR_DEGENERATE_RESIDUAL: f64 = 1e-8;

/// Width of the bracket reported around each eigenvalue.
pub const EIGENVALUE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub lambda: f64,
    pub count: u64,
    /// Right endpoint of the shooting interval.
    pub truncation_t: f64,
    /// Distance of the final Prüfer angle from the nearest multiple of `π`.
    pub prufer_residual: f64,
    /// `λ` sits so close to an eigenvalue that the count is not trustworthy.
    pub near_degenerate: bool,
}

/// Shooting parameters. The defaults are the production settings; tests vary
/// `margin_scale` to check truncation robustness.
#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Multiplies the cushion `max(5, ln(λ+2))` past the turning point.
    pub margin_scale: f64,
    /// Required potential excess `V(T) - λ` at the truncation point.
    pub min_excess: f64,
    /// Disable the early stop and always integrate to the truncation point.
    pub integrate_to_end: bool,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions { rtol: 1e-10, atol: 1e-12, margin_scale: 1.0, min_excess: 10.0, integrate_to_end: false }
    }
}

fn check_flux(m: &ModeOperator) -> Result<()> {
    if !(m.xi > 0.0 && m.xi < 1.0) {
        return Err(SpectraError::Domain(format!("flux ξ = {} is integral: the spectrum is not discrete", m.xi)));
    }
    Ok(())
}

/// Truncation point: past the outermost turning point by
/// `max(5, ln(λ+2))`, pushed further until `V(T) ≥ λ + min_excess`.
pub fn truncation_point(m: &ModeOperator, lambda: f64, opts: &ShootingOptions) -> f64 {
    let start = m.turning_point(lambda).unwrap_or(m.alpha2).max(m.alpha2);
    let mut t = start + opts.margin_scale * 5f64.max((lambda + 2.0).ln());
    while m.potential(t) < lambda + opts.min_excess {
        t += 1.0;
    }
    t
}

/// Number of eigenvalues of `m` strictly below `lambda`.
pub fn count_below(m: &ModeOperator, lambda: f64) -> Result<CountResult> {
    count_below_with(m, lambda, &ShootingOptions::default())
}

pub fn count_below_with(m: &ModeOperator, lambda: f64, opts: &ShootingOptions) -> Result<CountResult> {
    check_flux(m)?;
    if !lambda.is_finite() {
        return Err(SpectraError::Domain(format!("λ must be finite, got {lambda}")));
    }
    let v_min = m.min_potential();
    // The spectrum lies strictly above inf V.
    if lambda <= v_min {
        return Ok(CountResult {
            lambda,
            count: 0,
            truncation_t: m.alpha2,
            prufer_residual: FRAC_PI_2,
            near_degenerate: false,
        });
    }

    let t_turn = m.turning_point(lambda).unwrap_or(m.alpha2);
    let t_end = truncation_point(m, lambda, opts);
    let k = (lambda - v_min).sqrt().max(1.0);
    let theta0 = match m.bc {
        BoundaryCondition::Dirichlet => 0.0,
        BoundaryCondition::Neumann => FRAC_PI_2,
    };

    let rhs = |t: f64, theta: f64| {
        let (s, c) = theta.sin_cos();
        k * c * c + (lambda - m.potential(t)) / k * s * s
    };
    let ode_opts = ode::Options {
        rtol: opts.rtol,
        atol: opts.atol,
        h_init: 0.1 / k,
        // θ advances by at most k·h inside the allowed region
        h_max: 1.0 / k,
        max_steps: 20_000_000,
    };
    let integrate_to_end = opts.integrate_to_end;
    let out = ode::integrate(rhs, m.alpha2, theta0, t_end, &ode_opts, |t, theta| {
        if !integrate_to_end && t >= t_turn && theta.rem_euclid(PI) <= FRAC_PI_2 {
            Control::Stop
        } else {
            Control::Continue
        }
    })
    .map_err(|e| SpectraError::Numeric(format!("shooting ℓ = {} at λ = {lambda}: {e}", m.ell)))?;

    let theta = out.y;
    let count = (theta / PI).floor().max(0.0) as u64;
    let frozen = out.stopped || (theta.rem_euclid(PI) <= FRAC_PI_2 && out.t >= t_turn);
    let prufer_residual = if out.stopped {
        // The angle relaxes onto the growing branch, tan θ = k / √(V - λ).
        (k / (m.potential(t_end) - lambda).sqrt()).atan()
    } else {
        let r = theta.rem_euclid(PI);
        r.min(PI - r)
    };
    Ok(CountResult {
        lambda,
        count,
        truncation_t: t_end,
        prufer_residual,
        near_degenerate: !frozen || prufer_residual < NEAR_DEGENERATE_RESIDUAL,
    })
}

/// All eigenvalues of `m` below `lambda`, each the midpoint of a bracket of
/// width at most [`EIGENVALUE_TOL`] around a jump of the counting function.
pub fn eigenvalues_below(m: &ModeOperator, lambda: f64) -> Result<Vec<f64>> {
    let top = count_below(m, lambda)?;
    let lo = m.min_potential();
    let mut out = Vec::with_capacity(top.count as usize);
    if top.count == 0 {
        return Ok(out);
    }
    locate_jumps(m, lo, 0, lambda, top.count, &mut out)?;
    Ok(out)
}

fn locate_jumps(m: &ModeOperator, lo: f64, c_lo: u64, hi: f64, c_hi: u64, out: &mut Vec<f64>) -> Result<()> {
    if c_hi <= c_lo {
        return Ok(());
    }
    let mid = 0.5 * (lo + hi);
    if hi - lo <= EIGENVALUE_TOL || mid <= lo || mid >= hi {
        // simple spectrum in one dimension; repeat only if shooting disagrees
        out.extend(std::iter::repeat_n(mid, (c_hi - c_lo) as usize));
        return Ok(());
    }
    let c_mid = count_below(m, mid)?.count.clamp(c_lo, c_hi);
    locate_jumps(m, lo, c_lo, mid, c_mid, out)?;
    locate_jumps(m, mid, c_mid, hi, c_hi, out)
}

/// The `n`-th eigenvalue (1-based) of `m`.
pub fn nth_eigenvalue(m: &ModeOperator, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(SpectraError::Domain("eigenvalue index is 1-based".into()));
    }
    let lo0 = m.min_potential();
    let mut hi = lo0 + 1.0;
    while count_below(m, hi)?.count < n {
        hi = lo0 + 2.0 * (hi - lo0);
        if !hi.is_finite() {
            return Err(SpectraError::Numeric("eigenvalue search diverged".into()));
        }
    }
    let mut lo = lo0;
    while hi - lo > EIGENVALUE_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(m, mid)?.count >= n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Per-mode counts of the `P_ℓ` family of a cusp, over the spectral window
/// widened by [`WINDOW_MARGIN`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCounts {
    pub window: ModeWindow,
    pub modes: Vec<(i64, CountResult)>,
}

pub fn cusp_mode_counts(c: &Cusp, lambda: f64, bc: BoundaryCondition) -> Result<ModeCounts> {
    if c.is_integral() {
        return Err(SpectraError::Domain(format!(
            "cusp holonomy {} is in 2πZ: the spectrum is not discrete",
            c.holonomy()
        )));
    }
    let window = spectral_window(c, lambda);
    let scan = window.widened(WINDOW_MARGIN);
    let modes: Vec<(i64, CountResult)> = scan
        .iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|ell| count_below(&ModeOperator::p(c, ell, bc), lambda).map(|r| (ell, r)))
        .collect::<Result<_>>()?;
    for (ell, r) in &modes {
        if !window.contains(*ell) && r.count != 0 {
            return Err(SpectraError::Internal(format!(
                "mode ℓ = {ell} outside the spectral window {window:?} has {} eigenvalues below λ = {lambda}",
                r.count
            )));
        }
    }
    Ok(ModeCounts { window, modes })
}

/// Cusp counting function: the sum of the mode counts.
pub fn cusp_count(c: &Cusp, lambda: f64, bc: BoundaryCondition) -> Result<CountResult> {
    let mc = cusp_mode_counts(c, lambda, bc)?;
    let mut total =
        CountResult { lambda, count: 0, truncation_t: c.alpha2(), prufer_residual: FRAC_PI_2, near_degenerate: false };
    for (_, r) in &mc.modes {
        total.count += r.count;
        total.truncation_t = total.truncation_t.max(r.truncation_t);
        total.prufer_residual = total.prufer_residual.min(r.prufer_residual);
        total.near_degenerate |= r.near_degenerate;
    }
    Ok(total)
}
