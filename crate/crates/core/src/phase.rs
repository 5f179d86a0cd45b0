//! Semiclassical phase integrals of the comparison operators `Q_ℓ`.
//!
//! `w_ℓ(μ) = ∫_{α²}^∞ [μ - (ℓ+ξ)² e^{2t}/L²]_+^{1/2} dt` has the closed form
//! `√μ (artanh r - r)` with `r = √(1 - (ℓ+ξ)² e^{2α²}/(L² μ))`, obtained from
//! the antiderivative `s - √μ artanh(s/√μ)`, `s = √(μ - c e^{2t})`.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::count_below;
use crate::error::{Result, SpectraError};
use crate::geometry::Cusp;
use crate::modes::{mode_window, BoundaryCondition, ModeOperator};

/// Constant used for the upper Titchmarsh bound when none is supplied.
pub const TITCHMARSH_CONSTANT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseValue {
    pub mu: f64,
    pub ell: i64,
    pub w: f64,
    /// `r ∈ [0, 1)`, the scaled action density at `t = α²`.
    pub r: f64,
}

fn mode_coefficient(c: &Cusp, ell: i64) -> f64 {
    let f = (ell as f64 + c.xi()) / c.length();
    f * f
}

pub fn w_closed(c: &Cusp, ell: i64, mu: f64) -> PhaseValue {
    let zero = PhaseValue { mu, ell, w: 0.0, r: 0.0 };
    if !(mu > 0.0) {
        return zero;
    }
    // q = 1 - r² computed directly, so artanh(r) = ln(1 + r) - ½ ln q stays
    // accurate as r → 1
    let q = mode_coefficient(c, ell) / mu * (2.0 * c.alpha2()).exp();
    if !(q < 1.0) {
        return zero;
    }
    let r = (1.0 - q).sqrt();
    let artanh = r.ln_1p() - 0.5 * q.ln();
    PhaseValue { mu, ell, w: mu.sqrt() * (artanh - r), r }
}

/// `T_{μ,L} = ln(L √μ / inf_k |ξ - k|)`, beyond which every `w_ℓ`
/// integrand vanishes.
pub fn phase_cutoff(c: &Cusp, mu: f64) -> Result<f64> {
    if c.is_integral() {
        return Err(SpectraError::Domain("phase cutoff is undefined for integral flux".into()));
    }
    if !(mu > 0.0) {
        return Err(SpectraError::Domain(format!("phase cutoff needs μ > 0, got {mu}")));
    }
    Ok((c.length() * mu.sqrt() / c.flux_gap()).ln())
}

/// Indices with nonzero `w_ℓ(μ)`: `|ℓ+ξ| < L √μ e^{-α²}`.
fn support(c: &Cusp, mu: f64, t: f64) -> std::ops::RangeInclusive<i64> {
    let bound = c.length() * mu.max(0.0).sqrt() * (-t).exp();
    let xi = c.xi();
    ((-bound - xi).floor() as i64)..=((bound - xi).ceil() as i64)
}

/// `(1/π) Σ_ℓ w_ℓ(μ)`.
pub fn phase_sum(c: &Cusp, mu: f64) -> f64 {
    if !(mu > 0.0) {
        return 0.0;
    }
    support(c, mu, c.alpha2()).map(|ell| w_closed(c, ell, mu).w).sum::<f64>() / PI
}

/// The leading term `μ |M| / 4π` that [`phase_sum`] approaches.
pub fn phase_principal(c: &Cusp, mu: f64) -> f64 {
    mu * c.area() / (4.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TitchmarshCheck {
    pub ell: i64,
    pub mu: f64,
    pub w: f64,
    pub count: u64,
    /// `π N - (w - π)`; nonnegative when the lower bound holds.
    pub slack_low: f64,
    /// `w + ln(μ)/12 + C - π N`; nonnegative when the upper bound holds.
    pub slack_high: f64,
    /// Smallest `C` for which the upper bound would hold.
    pub required_constant: f64,
    pub holds: bool,
}

/// Compares `π N` with `w_ℓ(μ)`, where `N` counts the eigenvalues of the
/// Dirichlet `Q_ℓ` (including its `1/4`) below `μ`.
pub fn titchmarsh_check(c: &Cusp, ell: i64, mu: f64) -> Result<TitchmarshCheck> {
    titchmarsh_check_with(c, ell, mu, TITCHMARSH_CONSTANT)
}

pub fn titchmarsh_check_with(c: &Cusp, ell: i64, mu: f64, constant: f64) -> Result<TitchmarshCheck> {
    let w = w_closed(c, ell, mu).w;
    let count = count_below(&ModeOperator::q(c, ell, BoundaryCondition::Dirichlet), mu)?.count;
    let pin = PI * count as f64;
    let log_term = mu.ln() / 12.0;
    let slack_low = pin - (w - PI);
    let slack_high = w + log_term + constant - pin;
    Ok(TitchmarshCheck {
        ell,
        mu,
        w,
        count,
        slack_low,
        slack_high,
        required_constant: pin - w - log_term,
        holds: slack_low >= 0.0 && slack_high >= 0.0,
    })
}

/// [`titchmarsh_check`] for every `ℓ ∈ X_μ`, in increasing `ℓ`.
pub fn titchmarsh_sweep(c: &Cusp, mu: f64, constant: f64) -> Result<Vec<TitchmarshCheck>> {
    let window = mode_window(c, mu)?;
    window.iter().collect::<Vec<_>>().into_par_iter().map(|ell| titchmarsh_check_with(c, ell, mu, constant)).collect()
}

/// Lattice sum and integral of `x ↦ [μ - (x+ξ)² e^{2t}/L²]_+^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannTerms {
    pub integral: f64,
    pub sum: f64,
}

impl RiemannTerms {
    pub fn gap(&self) -> f64 {
        (self.integral - self.sum).abs()
    }
}

pub fn riemann_terms(c: &Cusp, mu: f64, t: f64) -> RiemannTerms {
    let l = c.length();
    // substituting y = (x+ξ) e^t/(L√μ) leaves √μ · L√μ e^{-t} · ∫ [1-y²]_+^{1/2}
    let integral = FRAC_PI_2 * mu * l * (-t).exp();
    let coef = (2.0 * t).exp() / (l * l);
    let xi = c.xi();
    let sum = support(c, mu, t)
        .map(|ell| {
            let x = ell as f64 + xi;
            (mu - x * x * coef).max(0.0).sqrt()
        })
        .sum();
    RiemannTerms { integral, sum }
}

/// `|∫_R f - Σ_ℓ f(ℓ)|` for the integrand of [`riemann_terms`].
pub fn riemann_gap(c: &Cusp, mu: f64, t: f64) -> f64 {
    riemann_terms(c, mu, t).gap()
}

/// `∫_{α²}^{T_{μ,L}} ∫_R [μ - (x+ξ)² e^{2t}/L²]_+^{1/2} dx dt`.
pub fn cutoff_double_integral(c: &Cusp, mu: f64) -> Result<f64> {
    let end = phase_cutoff(c, mu)?;
    Ok(FRAC_PI_2 * mu * c.length() * ((-c.alpha2()).exp() - (-end).exp()))
}
