//! Verification battery.
//!
//! Each check returns a [`CheckOutcome`]; [`run_all`] runs every check with
//! the thresholds of a [`VerifyConfig`] and is what the `verify` command
//! executes. Thresholds live in the config so a run documents what it
//! enforced.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{count_below, cusp_count, nth_eigenvalue};
use crate::error::Result;
use crate::geometry::{discreteness_verdict, Cusp, Surface, Verdict};
use crate::modes::{mode_window, BoundaryCondition, ModeOperator};
use crate::oracle::{oracle_eigenvalues, phase_integral_reference, OracleConfig};
use crate::phase::{
    cutoff_double_integral, phase_cutoff, phase_principal, phase_sum, riemann_terms, titchmarsh_sweep, w_closed,
};
use crate::quadrature;
use crate::weyl::{geometric_grid, weyl_report_with, ToyCore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub oracle_grid_points: usize,
    pub eigenvalue_tol: f64,
    pub titchmarsh_fluxes: Vec<f64>,
    pub titchmarsh_mus: Vec<f64>,
    pub titchmarsh_constant: f64,
    pub quadrature_samples: usize,
    pub quadrature_rel_tol: f64,
    pub phase_sum_mus: Vec<f64>,
    pub weyl_lambda_min: f64,
    pub weyl_lambda_max: f64,
    pub weyl_grid: usize,
    pub weyl_headroom: f64,
    pub sandwich_fields: Vec<f64>,
    pub sandwich_lambdas: Vec<f64>,
    pub riemann_mus: Vec<f64>,
    pub riemann_headroom: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            oracle_grid_points: 20_000,
            eigenvalue_tol: 1e-6,
            titchmarsh_fluxes: vec![0.05, 0.5],
            titchmarsh_mus: vec![1e2, 1e3, 1e4],
            titchmarsh_constant: 10.0,
            quadrature_samples: 200,
            quadrature_rel_tol: 1e-8,
            phase_sum_mus: vec![1e2, 1e3, 1e4, 1e5, 1e6],
            weyl_lambda_min: 1e2,
            weyl_lambda_max: 1e4,
            weyl_grid: 32,
            weyl_headroom: 1.5,
            sandwich_fields: vec![1.0, 5.0],
            sandwich_lambdas: vec![1e3, 1e4],
            riemann_mus: vec![1e2, 1e3, 1e4],
            riemann_headroom: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// The headline number of the check (largest error, fitted constant, ...).
    pub metric: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, metric: f64, detail: String) -> Self {
        CheckOutcome { name: name.to_string(), passed, metric, detail }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub config: VerifyConfig,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

/// One mode of the standard battery, evaluated at `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryInstance {
    pub cusp: Cusp,
    pub ell: i64,
    pub lambda: f64,
}

impl BatteryInstance {
    pub fn mode(&self, bc: BoundaryCondition) -> ModeOperator {
        ModeOperator::p(&self.cusp, self.ell, bc)
    }
}

/// 21 `P_ℓ` instances covering `ℓ ∈ {-3..3}`, `ξ ∈ {0.05, 0.3, 0.5}`,
/// `b ∈ {0, 1, 5}` and both orientations, each at a level 60–107 above the
/// bottom of its potential.
pub fn standard_battery() -> Vec<BatteryInstance> {
    const FLUXES: [f64; 3] = [0.05, 0.3, 0.5];
    const FIELDS: [f64; 3] = [0.0, 1.0, 5.0];
    (0..21)
        .map(|i| {
            let ell = (i % 7) as i64 - 3;
            let xi = FLUXES[i % 3];
            let b = FIELDS[i / 7];
            let sign = if i % 2 == 0 { 1 } else { -1 };
            let cusp = Cusp::with_flux(1.0, 0.0, b, xi).unwrap().with_sign(sign).unwrap();
            let floor = ModeOperator::p(&cusp, ell, BoundaryCondition::Dirichlet).min_potential();
            BatteryInstance { cusp, ell, lambda: floor + 60.3 + 2.3 * i as f64 }
        })
        .collect()
}

/// Shooting counts equal oracle counts and located eigenvalues agree within
/// `eigenvalue_tol`, for both boundary conditions.
pub fn oracle_equivalence(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let ocfg = OracleConfig { grid_points: cfg.oracle_grid_points, ..Default::default() };
    let rows: Vec<(bool, f64, String)> = standard_battery()
        .par_iter()
        .flat_map_iter(|inst| [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann].map(|bc| (inst, bc)))
        .map(|(inst, bc)| -> Result<(bool, f64, String)> {
            let m = inst.mode(bc);
            let reference = oracle_eigenvalues(&m, inst.lambda, &ocfg)?;
            let shot = crate::counting::eigenvalues_below(&m, inst.lambda)?;
            let count = count_below(&m, inst.lambda)?.count;
            let err = reference.iter().zip(&shot).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let ok = count == reference.len() as u64 && shot.len() == reference.len() && err <= cfg.eigenvalue_tol;
            Ok((
                ok,
                err,
                format!("ℓ={} ξ={} b={} {bc:?}: shooting {count} oracle {}", inst.ell, m.xi, m.b, reference.len()),
            ))
        })
        .collect::<Result<_>>()?;
    let failures: Vec<&String> = rows.iter().filter(|r| !r.0).map(|r| &r.2).collect();
    let max_err = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(CheckOutcome::new(
        "oracle_equivalence",
        failures.is_empty(),
        max_err,
        format!("{} mode evaluations, max eigenvalue deviation {max_err:.3e}, failures {failures:?}", rows.len()),
    ))
}

/// `0 ≤ N_Neumann - N_Dirichlet ≤ 1` on every battery mode.
pub fn dn_interlacing(_cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let mut worst = 0i64;
    let mut bad = Vec::new();
    for inst in standard_battery() {
        for scale in [1.0, 3.0, 10.0] {
            let lambda = inst.lambda * scale;
            let d = count_below(&inst.mode(BoundaryCondition::Dirichlet), lambda)?.count as i64;
            let n = count_below(&inst.mode(BoundaryCondition::Neumann), lambda)?.count as i64;
            let diff = n - d;
            if !(0..=1).contains(&diff) {
                bad.push((inst.ell, lambda, diff));
            }
            worst = worst.max(diff.abs());
        }
    }
    Ok(CheckOutcome::new(
        "dn_interlacing",
        bad.is_empty(),
        worst as f64,
        format!("largest |N_N - N_D| = {worst}, violations {bad:?}"),
    ))
}

/// `w_ℓ(μ) - π ≤ π N ≤ w_ℓ(μ) + ln(μ)/12 + C` for all `ℓ ∈ X_μ`.
pub fn titchmarsh(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let mut total = 0;
    let mut fails = Vec::new();
    let mut required = f64::NEG_INFINITY;
    let mut min_low = f64::INFINITY;
    for &xi in &cfg.titchmarsh_fluxes {
        let c = Cusp::with_flux(1.0, 0.0, 0.0, xi)?;
        for &mu in &cfg.titchmarsh_mus {
            let checks = titchmarsh_sweep(&c, mu, cfg.titchmarsh_constant)?;
            total += checks.len();
            for k in checks {
                required = required.max(k.required_constant);
                min_low = min_low.min(k.slack_low);
                if !k.holds {
                    fails.push((xi, mu, k.ell));
                }
            }
        }
    }
    Ok(CheckOutcome::new(
        "titchmarsh_sandwich",
        fails.is_empty(),
        required,
        format!(
            "{total} (ξ, μ, ℓ) cases, smallest lower slack {min_low:.4}, smallest working C {required:.4} \
             (threshold {}), failures {fails:?}",
            cfg.titchmarsh_constant
        ),
    ))
}

/// Random `(cusp, ℓ, μ)` triples: closed form against adaptive quadrature.
pub fn phase_quadrature(cfg: &VerifyConfig, seed: u64) -> Result<CheckOutcome> {
    let cusps = [
        Cusp::with_flux(1.0, 0.0, 0.0, 0.5)?,
        Cusp::with_flux(2.0, 1.0, 0.0, 0.3)?,
        Cusp::with_flux(0.7, -0.5, 0.0, 0.05)?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(Cusp, i64, f64)> = (0..cfg.quadrature_samples)
        .map(|i| {
            let c = cusps[i % cusps.len()];
            let mu = 10f64.powf(rng.gen_range(0.0..4.0));
            let reach = (c.length() * mu.sqrt() * (-c.alpha2()).exp()).ceil() as i64 + 1;
            let ell = rng.gen_range(-reach..=reach);
            (c, ell, mu)
        })
        .collect();
    let errs: Vec<(f64, bool)> = samples
        .par_iter()
        .map(|(c, ell, mu)| {
            let w = w_closed(c, *ell, *mu).w;
            let q = phase_integral_reference(c, *ell, *mu);
            ((w - q.value).abs() / w.max(1.0), q.converged)
        })
        .collect();
    let worst = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let unconverged = errs.iter().filter(|e| !e.1).count();
    Ok(CheckOutcome::new(
        "phase_closed_form",
        worst <= cfg.quadrature_rel_tol && unconverged == 0,
        worst,
        format!(
            "{} samples (seed {seed}), worst relative deviation {worst:.3e} (tolerance {:.1e}), {unconverged} unconverged",
            samples.len(),
            cfg.quadrature_rel_tol
        ),
    ))
}

/// Normalised deviations `|Σw/π - μ|M|/4π| / (√μ ln μ)` at each `μ`.
pub fn phase_sum_deviations(c: &Cusp, mus: &[f64]) -> Vec<f64> {
    mus.iter().map(|&mu| (phase_sum(c, mu) - phase_principal(c, mu)).abs() / (mu.sqrt() * mu.ln())).collect()
}

/// Normalised phase-sum deviation is bounded with no upward trend.
pub fn phase_sum_asymptotics(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let c = Cusp::with_flux(1.0, 0.0, 0.0, 0.5)?;
    let dev = phase_sum_deviations(&c, &cfg.phase_sum_mus);
    let xs: Vec<f64> = cfg.phase_sum_mus.iter().map(|m| m.ln()).collect();
    let slope = crate::weyl::least_squares_slope(&xs, &dev);
    let bounded = dev.iter().all(|d| d.is_finite()) && dev.iter().skip(1).all(|d| *d <= dev[0]);
    Ok(CheckOutcome::new(
        "phase_sum_asymptotics",
        bounded && slope <= 0.0,
        dev.iter().copied().fold(0.0, f64::max),
        format!("normalised deviations {dev:.4?}, trend slope {slope:.3e}"),
    ))
}

/// Single-cusp surface: both brackets' residuals stay within the fitted
/// `C √λ ln λ` on the validation half.
pub fn weyl_main(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let c = Cusp::with_flux(1.0, 0.0, 0.0, 0.5)?;
    let s = Surface::new(vec![c], ToyCore::ExplicitWeyl { area: 0.0, remainder_coeff: 0.0 })?;
    let grid = geometric_grid(cfg.weyl_lambda_min, cfg.weyl_lambda_max, cfg.weyl_grid)?;
    let r = weyl_report_with(&s, &grid, cfg.weyl_headroom)?;
    let monotone = r.counts_d.windows(2).all(|w| w[0] <= w[1]) && r.counts_n.windows(2).all(|w| w[0] <= w[1]);
    Ok(CheckOutcome::new(
        "weyl_remainder",
        r.passed() && monotone,
        r.fit_d.validation_max.max(r.fit_n.validation_max),
        format!(
            "D: C_fit {:.4} validation max {:.4}; N: C_fit {:.4} validation max {:.4}; headroom {}; monotone {monotone}",
            r.fit_d.fitted_constant,
            r.fit_d.validation_max,
            r.fit_n.fitted_constant,
            r.fit_n.validation_max,
            cfg.weyl_headroom
        ),
    ))
}

/// Smallest `C` making `N(λ - C√λ, Q) ≤ N(λ, P) ≤ N(λ + C√λ, Q)` hold for
/// one mode.
pub fn sandwich_constant(c: &Cusp, ell: i64, lambda: f64) -> Result<f64> {
    let p = ModeOperator::p(c, ell, BoundaryCondition::Dirichlet);
    let q = ModeOperator::q(c, ell, BoundaryCondition::Dirichlet);
    let n = count_below(&p, lambda)?.count;
    let root = lambda.sqrt();
    // lower side: need λ - C√λ ≤ E^Q_{n+1}
    let mut need = ((lambda - nth_eigenvalue(&q, n + 1)?) / root).max(0.0);
    // upper side: need λ + C√λ > E^Q_n
    if n > 0 {
        need = need.max((nth_eigenvalue(&q, n)? - lambda) / root);
    }
    Ok(need)
}

/// Comparison of `P_ℓ` and `Q_ℓ` counts with `C(b) = 2|b| + b² + 1`.
pub fn comparison_sandwich(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let mut fails = Vec::new();
    let mut empirical = Vec::new();
    let mut cases = 0;
    for &b in &cfg.sandwich_fields {
        let cst = 2.0 * b.abs() + b * b + 1.0;
        for sign in [1i8, -1] {
            let c = Cusp::with_flux(1.0, 0.0, b, 0.3)?.with_sign(sign)?;
            for &lambda in &cfg.sandwich_lambdas {
                let window = mode_window(&c, lambda)?;
                let shift = cst * lambda.sqrt();
                let rows: Vec<(i64, bool, f64)> = window
                    .iter()
                    .collect::<Vec<_>>()
                    .into_par_iter()
                    .map(|ell| -> Result<(i64, bool, f64)> {
                        let p = count_below(&ModeOperator::p(&c, ell, BoundaryCondition::Dirichlet), lambda)?.count;
                        let q = ModeOperator::q(&c, ell, BoundaryCondition::Dirichlet);
                        let lo = count_below(&q, lambda - shift)?.count;
                        let hi = count_below(&q, lambda + shift)?.count;
                        Ok((ell, lo <= p && p <= hi, sandwich_constant(&c, ell, lambda)?))
                    })
                    .collect::<Result<_>>()?;
                cases += rows.len();
                let worst = rows.iter().map(|r| r.2).fold(0.0, f64::max);
                empirical.push(format!("b={b} s={sign} λ={lambda}: {worst:.3}"));
                fails.extend(rows.iter().filter(|r| !r.1).map(|r| (b, sign, lambda, r.0)));
            }
        }
    }
    Ok(CheckOutcome::new(
        "comparison_sandwich",
        fails.is_empty(),
        cases as f64,
        format!("{cases} modes; minimal empirical C per case [{}]; failures {fails:?}", empirical.join(", ")),
    ))
}

/// Cusp counts are unchanged by `holonomy → holonomy + 2π` and by the
/// relabelling `(ξ, s) → (1 - ξ, -s)`.
pub fn gauge_invariance(_cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let mut mismatches = Vec::new();
    let mut cases = 0;
    for inst in standard_battery() {
        let c = inst.cusp;
        let shifted = Cusp::new(c.length(), c.alpha2(), c.b(), c.holonomy() + TAU)?.with_sign(c.sign())?;
        let reflected = c.reflected();
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            for lambda in [inst.lambda, 4.0 * inst.lambda] {
                let a = cusp_count(&c, lambda, bc)?.count;
                let b = cusp_count(&shifted, lambda, bc)?.count;
                let r = cusp_count(&reflected, lambda, bc)?.count;
                cases += 1;
                if a != b || a != r {
                    mismatches.push((c.xi(), c.b(), lambda, a, b, r));
                }
            }
        }
    }
    Ok(CheckOutcome::new(
        "gauge_invariance",
        mismatches.is_empty(),
        mismatches.len() as f64,
        format!("{cases} cusp counts compared three ways, mismatches {mismatches:?}"),
    ))
}

/// The three reference verdicts.
pub fn verdict_examples() -> Result<CheckOutcome> {
    let core = ToyCore::ExplicitWeyl { area: 0.0, remainder_coeff: 0.0 };
    let a = Surface::new(vec![Cusp::new(1.0, 0.0, 5.0, PI)?], core)?;
    let b = Surface::new(vec![Cusp::new(1.0, 0.0, 3.0, TAU)?, Cusp::new(1.0, 0.0, 0.0, PI)?], core)?;
    let c = Surface::new(vec![Cusp::new(1.0, 0.0, 0.0, 0.0)?], core)?;
    let got = [discreteness_verdict(&a), discreteness_verdict(&b), discreteness_verdict(&c)];
    let want = [
        Verdict::Discrete,
        Verdict::Essential { bottom: 0.25 + 9.0, integral_cusps: vec![0] },
        Verdict::Essential { bottom: 0.25, integral_cusps: vec![0] },
    ];
    Ok(CheckOutcome::new("discreteness_verdict", got == want, 0.0, format!("{got:?}")))
}

/// Lattice-sum gap over a `(μ, t)` grid scaled by `√μ + e^t/L`: the
/// constant fitted on all but the largest `μ` must cover the largest.
pub fn riemann_gap_bound(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let cusps = [Cusp::with_flux(1.0, 0.0, 0.0, 0.5)?, Cusp::with_flux(1.5, 0.4, 0.0, 0.05)?];
    let mut per_mu = Vec::new();
    for &mu in &cfg.riemann_mus {
        let mut worst: f64 = 0.0;
        for c in &cusps {
            let end = phase_cutoff(c, mu)?;
            for i in 0..=40 {
                let t = c.alpha2() + (end - c.alpha2()) * i as f64 / 40.0;
                let ratio = riemann_terms(c, mu, t).gap() / (mu.sqrt() + t.exp() / c.length());
                worst = worst.max(ratio);
            }
        }
        per_mu.push(worst);
    }
    let (train, test) = per_mu.split_at(per_mu.len().saturating_sub(1));
    let fitted = train.iter().copied().fold(0.0, f64::max);
    let passed = test.iter().all(|r| *r <= cfg.riemann_headroom * fitted);
    Ok(CheckOutcome::new(
        "riemann_gap",
        passed,
        fitted,
        format!("max gap/(√μ + e^t/L) per μ {per_mu:.4?}, fitted {fitted:.4}, headroom {}", cfg.riemann_headroom),
    ))
}

/// Double integral up to `T_{μ,L}`: nested quadrature against the closed
/// form, and its distance from `μ L e^{-α²} π/2` in units of `√μ`.
pub fn cutoff_integral(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let c = Cusp::with_flux(1.0, 0.0, 0.0, 0.3)?;
    let mut worst_rel: f64 = 0.0;
    let mut scaled = Vec::new();
    for &mu in &cfg.riemann_mus {
        let end = phase_cutoff(&c, mu)?;
        let xi = c.xi();
        let l = c.length();
        let inner = |t: f64| {
            let coef = (2.0 * t).exp() / (l * l);
            let half = (mu / coef).sqrt();
            quadrature::integrate(
                |x: f64| (mu - (x + xi).powi(2) * coef).max(0.0).sqrt(),
                -half - xi,
                half - xi,
                1e-11,
                1e-13,
                5000,
            )
            .value
        };
        let nested = quadrature::integrate(inner, c.alpha2(), end, 1e-9, 1e-12, 2000).value;
        let closed = cutoff_double_integral(&c, mu)?;
        worst_rel = worst_rel.max((nested - closed).abs() / closed);
        scaled.push((FRAC_PI_2 * mu * l * (-c.alpha2()).exp() - closed).abs() / mu.sqrt());
    }
    Ok(CheckOutcome::new(
        "cutoff_integral",
        worst_rel <= cfg.quadrature_rel_tol,
        worst_rel,
        format!("nested quadrature vs closed form {worst_rel:.3e}; gap/√μ {scaled:.6?}"),
    ))
}

pub fn run_all(cfg: &VerifyConfig, seed: u64) -> Result<VerifyReport> {
    let checks = vec![
        oracle_equivalence(cfg)?,
        dn_interlacing(cfg)?,
        titchmarsh(cfg)?,
        phase_quadrature(cfg, seed)?,
        phase_sum_asymptotics(cfg)?,
        weyl_main(cfg)?,
        comparison_sandwich(cfg)?,
        gauge_invariance(cfg)?,
        verdict_examples()?,
        riemann_gap_bound(cfg)?,
        cutoff_integral(cfg)?,
    ];
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { seed, config: cfg.clone(), checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_keeps_defaults() {
        let cfg: VerifyConfig = serde_json::from_str(r#"{"titchmarsh_constant": 4.0}"#).unwrap();
        assert_eq!(cfg.titchmarsh_constant, 4.0);
        assert_eq!(cfg.eigenvalue_tol, VerifyConfig::default().eigenvalue_tol);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<VerifyConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn outcome_line() {
        let ok = CheckOutcome::new("x", true, 1.0, "fine".into());
        assert_eq!(ok.line(), "PASS x: fine");
        assert!(CheckOutcome::new("y", false, 0.0, String::new()).line().starts_with("FAIL y"));
    }

    #[test]
    fn battery_is_deterministic() {
        assert_eq!(standard_battery(), standard_battery());
    }

    #[test]
    fn sandwich_constant_is_zero_without_field() {
        // b = 0 makes P and Q identical
        let c = Cusp::with_flux(1.0, 0.0, 0.0, 0.3).unwrap();
        for ell in -2..=2 {
            assert_eq!(sandwich_constant(&c, ell, 200.5).unwrap(), 0.0);
        }
    }

    #[test]
    fn sandwich_constant_certifies_the_counts() {
        let c = Cusp::with_flux(1.0, 0.0, 1.0, 0.3).unwrap();
        let lambda = 300.0;
        for ell in [-3, 0, 4] {
            let need = sandwich_constant(&c, ell, lambda).unwrap();
            let p = count_below(&ModeOperator::p(&c, ell, BoundaryCondition::Dirichlet), lambda).unwrap().count;
            let q = ModeOperator::q(&c, ell, BoundaryCondition::Dirichlet);
            let slack = (need + 1e-6) * lambda.sqrt();
            assert!(count_below(&q, lambda - slack).unwrap().count <= p);
            assert!(p <= count_below(&q, lambda + slack).unwrap().count);
        }
    }

    #[test]
    fn verdict_check_passes() {
        assert!(verdict_examples().unwrap().passed);
    }
}
