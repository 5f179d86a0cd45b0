//! Whole-surface counting by Dirichlet/Neumann bracketing and the Weyl-law
//! residual report.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::cusp_count;
use crate::error::{Result, SpectraError};
use crate::geometry::{discreteness_verdict, Surface, Verdict};
use crate::modes::BoundaryCondition;

/// Stand-in for the compact part of the surface, with an explicitly known
/// counting function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToyCore {
    /// Flat `width × height` rectangle: eigenvalues `π²(m²/w² + n²/h²)`
    /// with `m, n ≥ 1` (Dirichlet) or `m, n ≥ 0` (Neumann).
    FlatRectangle { width: f64, height: f64 },
    /// `N(λ) = ⌊area·λ/4π ∓ remainder_coeff·√λ⌋`, minus for Dirichlet.
    ExplicitWeyl { area: f64, remainder_coeff: f64 },
}

impl ToyCore {
    pub fn area(&self) -> f64 {
        match *self {
            ToyCore::FlatRectangle { width, height } => width * height,
            ToyCore::ExplicitWeyl { area, .. } => area,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ToyCore::FlatRectangle { width, height } => {
                width.is_finite() && height.is_finite() && width > 0.0 && height > 0.0
            }
            // area 0 is allowed: a surface made of cusps only
            ToyCore::ExplicitWeyl { area, remainder_coeff } => {
                area.is_finite() && remainder_coeff.is_finite() && area >= 0.0 && remainder_coeff >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SpectraError::Domain(format!("invalid core {self:?}")))
        }
    }
}

pub fn core_count(core: &ToyCore, lambda: f64, bc: BoundaryCondition) -> u64 {
    if !(lambda > 0.0) {
        // the Neumann rectangle's zero mode is not below λ ≤ 0 either
        return 0;
    }
    match *core {
        ToyCore::FlatRectangle { width, height } => {
            let first = match bc {
                BoundaryCondition::Dirichlet => 1u64,
                BoundaryCondition::Neumann => 0,
            };
            let level = lambda / (PI * PI);
            let mut n_total = 0;
            let mut m = first;
            loop {
                let mx = (m * m) as f64 / (width * width);
                if mx >= level {
                    break;
                }
                let mut n = first;
                while mx + (n * n) as f64 / (height * height) < level {
                    n += 1;
                }
                n_total += n - first;
                m += 1;
            }
            n_total
        }
        ToyCore::ExplicitWeyl { area, remainder_coeff } => {
            let principal = area * lambda / (4.0 * PI);
            let rem = remainder_coeff * lambda.sqrt();
            let v = match bc {
                BoundaryCondition::Dirichlet => principal - rem,
                BoundaryCondition::Neumann => principal + rem,
            };
            v.max(0.0).floor() as u64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lambda: f64,
    pub lower: u64,
    pub upper: u64,
    pub near_degenerate: bool,
}

fn require_discrete(s: &Surface) -> Result<()> {
    match discreteness_verdict(s) {
        Verdict::Discrete => Ok(()),
        Verdict::Essential { bottom, integral_cusps } => Err(SpectraError::Domain(format!(
            "spectrum is not discrete: discreteness requires every cusp holonomy to lie outside 2πZ, \
             but cusps {integral_cusps:?} (0-based) have integral flux; essential spectrum starts at {bottom}"
        ))),
    }
}

/// Dirichlet (lower) and Neumann (upper) decoupled counts at `lambda`.
pub fn surface_bracket(s: &Surface, lambda: f64) -> Result<Bracket> {
    require_discrete(s)?;
    if !(lambda > 0.25) {
        return Err(SpectraError::Domain(format!("surface bracket needs λ > 1/4, got {lambda}")));
    }
    let mut b = Bracket {
        lambda,
        lower: core_count(s.core(), lambda, BoundaryCondition::Dirichlet),
        upper: core_count(s.core(), lambda, BoundaryCondition::Neumann),
        near_degenerate: false,
    };
    for c in s.cusps() {
        let d = cusp_count(c, lambda, BoundaryCondition::Dirichlet)?;
        let n = cusp_count(c, lambda, BoundaryCondition::Neumann)?;
        b.lower += d.count;
        b.upper += n.count;
        b.near_degenerate |= d.near_degenerate || n.near_degenerate;
    }
    Ok(b)
}

/// Grid points are nudged by this much when a count is near-degenerate.
pub const DEGENERACY_NUDGE: f64 = 1e-6;
const MAX_NUDGES: usize = 16;
/// Allowed growth of the normalised residual on the validation half.
pub const DEFAULT_HEADROOM: f64 = 1.5;

fn bracket_nudged(s: &Surface, lambda: f64) -> Result<Bracket> {
    let mut l = lambda;
    for _ in 0..MAX_NUDGES {
        let b = surface_bracket(s, l)?;
        if !b.near_degenerate {
            return Ok(b);
        }
        l += DEGENERACY_NUDGE;
    }
    Err(SpectraError::Numeric(format!("λ = {lambda} stays near-degenerate after {MAX_NUDGES} nudges")))
}

/// `√λ · max(ln λ, 1)`, the remainder scale.
pub fn remainder_scale(lambda: f64) -> f64 {
    lambda.sqrt() * lambda.ln().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualFit {
    /// Least-squares `C` in `|residual| ≈ C √λ ln λ` over the training half.
    pub fitted_constant: f64,
    /// Largest normalised residual on the training half.
    pub train_max: f64,
    /// Largest normalised residual on the validation half.
    pub validation_max: f64,
    /// Slope of the normalised residual against `ln λ` over the whole grid.
    pub trend_slope: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub total_area: f64,
    pub headroom: f64,
    pub lambda_grid: Vec<f64>,
    pub counts_d: Vec<u64>,
    pub counts_n: Vec<u64>,
    pub principal: Vec<f64>,
    pub resid_d: Vec<f64>,
    pub resid_n: Vec<f64>,
    pub normalized_d: Vec<f64>,
    pub normalized_n: Vec<f64>,
    pub fit_d: ResidualFit,
    pub fit_n: ResidualFit,
}

impl WeylReport {
    pub fn passed(&self) -> bool {
        self.fit_d.passed && self.fit_n.passed
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "lambda,count_D,count_N,principal,resid_D,resid_N,normalized_resid_D,normalized_resid_N")?;
        for i in 0..self.lambda_grid.len() {
            writeln!(
                out,
                "{:.16e},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.lambda_grid[i],
                self.counts_d[i],
                self.counts_n[i],
                self.principal[i],
                self.resid_d[i],
                self.resid_n[i],
                self.normalized_d[i],
                self.normalized_n[i],
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn fit_residuals(lambdas: &[f64], residuals: &[f64], headroom: f64) -> ResidualFit {
    let n = lambdas.len();
    let split = n / 2;
    let scale: Vec<f64> = lambdas.iter().map(|&l| remainder_scale(l)).collect();
    let normalized: Vec<f64> = residuals.iter().zip(&scale).map(|(r, g)| r.abs() / g).collect();

    let (num, den) =
        (0..split).fold((0.0, 0.0), |(a, b), i| (a + residuals[i].abs() * scale[i], b + scale[i] * scale[i]));
    let fitted_constant = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
    let train_max = normalized[..split].iter().copied().fold(0.0, f64::max);
    let validation_max = normalized[split..].iter().copied().fold(0.0, f64::max);

    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let trend_slope = least_squares_slope(&xs, &normalized);
    ResidualFit {
        fitted_constant,
        train_max,
        validation_max,
        trend_slope,
        passed: validation_max <= headroom * fitted_constant,
    }
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// `n` geometrically spaced points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.25 && hi > lo && n >= 2) {
        return Err(SpectraError::Config(format!("bad grid: lo = {lo}, hi = {hi}, n = {n}")));
    }
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|i| lo * (ratio * i as f64).exp()).collect();
    g[n - 1] = hi;
    Ok(g)
}

pub fn weyl_report(s: &Surface, grid: &[f64]) -> Result<WeylReport> {
    weyl_report_with(s, grid, DEFAULT_HEADROOM)
}

pub fn weyl_report_with(s: &Surface, grid: &[f64], headroom: f64) -> Result<WeylReport> {
    require_discrete(s)?;
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|&l| !(l > 0.25)) {
        return Err(SpectraError::Config("λ grid must be strictly increasing, above 1/4, with ≥ 2 points".into()));
    }
    let brackets: Vec<Bracket> = grid.par_iter().map(|&l| bracket_nudged(s, l)).collect::<Result<_>>()?;

    let area = s.total_area();
    let lambda_grid: Vec<f64> = brackets.iter().map(|b| b.lambda).collect();
    let counts_d: Vec<u64> = brackets.iter().map(|b| b.lower).collect();
    let counts_n: Vec<u64> = brackets.iter().map(|b| b.upper).collect();
    let principal: Vec<f64> = lambda_grid.iter().map(|l| l * area / (4.0 * PI)).collect();
    let resid = |counts: &[u64]| -> Vec<f64> { counts.iter().zip(&principal).map(|(&c, p)| c as f64 - p).collect() };
    let resid_d = resid(&counts_d);
    let resid_n = resid(&counts_n);
    let normalize =
        |r: &[f64]| -> Vec<f64> { r.iter().zip(&lambda_grid).map(|(r, &l)| r / remainder_scale(l)).collect() };
    let normalized_d = normalize(&resid_d);
    let normalized_n = normalize(&resid_n);

    for i in 0..counts_d.len() {
        if counts_d[i] > counts_n[i] {
            return Err(SpectraError::Internal(format!(
                "bracket inverted at λ = {}: lower {} > upper {}",
                lambda_grid[i], counts_d[i], counts_n[i]
            )));
        }
    }

    let fit_d = fit_residuals(&lambda_grid, &resid_d, headroom);
    let fit_n = fit_residuals(&lambda_grid, &resid_n, headroom);
    Ok(WeylReport {
        total_area: area,
        headroom,
        lambda_grid,
        counts_d,
        counts_n,
        principal,
        resid_d,
        resid_n,
        normalized_d,
        normalized_n,
        fit_d,
        fit_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cusp;
    use BoundaryCondition::*;

    #[test]
    fn rectangle_examples() {
        let sq = ToyCore::FlatRectangle { width: PI, height: PI };
        assert_eq!(core_count(&sq, 2.5, Dirichlet), 1);
        assert_eq!(core_count(&sq, 0.5, Neumann), 1);
        // Dirichlet m,n ≥ 1 with m² + n² < 10.5: (1,1) (1,2) (2,1) (2,2) (1,3) (3,1)
        assert_eq!(core_count(&sq, 10.5, Dirichlet), 6);
        // Neumann adds (0,0) (0,1..3) (1..3,0)
        assert_eq!(core_count(&sq, 10.5, Neumann), 13);
        assert_eq!(core_count(&sq, 0.0, Neumann), 0);
    }

    #[test]
    fn rectangle_brute_force() {
        let core = ToyCore::FlatRectangle { width: 1.7, height: 0.9 };
        for lambda in [3.0, 50.0, 333.3, 1234.5] {
            for (bc, first) in [(Dirichlet, 1), (Neumann, 0)] {
                let mut n = 0;
                for m in first..200u64 {
                    for k in first..200u64 {
                        let e = PI * PI * ((m * m) as f64 / (1.7 * 1.7) + (k * k) as f64 / (0.9 * 0.9));
                        if e < lambda {
                            n += 1;
                        }
                    }
                }
                assert_eq!(core_count(&core, lambda, bc), n);
            }
        }
    }

    #[test]
    fn explicit_weyl_core() {
        let core = ToyCore::ExplicitWeyl { area: 4.0 * PI, remainder_coeff: 0.0 };
        assert_eq!(core_count(&core, 100.0, Dirichlet), 100);
        let core = ToyCore::ExplicitWeyl { area: 4.0 * PI, remainder_coeff: 1.0 };
        assert_eq!(core_count(&core, 100.0, Dirichlet), 90);
        assert_eq!(core_count(&core, 100.0, Neumann), 110);
        assert!(ToyCore::ExplicitWeyl { area: -1.0, remainder_coeff: 0.0 }.validate().is_err());
        assert!(ToyCore::FlatRectangle { width: 0.0, height: 1.0 }.validate().is_err());
    }

    #[test]
    fn bracket_below_quarter_spectrum() {
        let c = Cusp::with_flux(1.0, 0.0, 1.0, 0.3).unwrap();
        let s = Surface::new(vec![c], ToyCore::FlatRectangle { width: PI, height: PI }).unwrap();
        let b = surface_bracket(&s, 0.3).unwrap();
        assert_eq!(b.lower, 0);
        assert!(b.upper >= 1);
    }

    #[test]
    fn non_discrete_surface_rejected() {
        let c = Cusp::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let s = Surface::new(vec![c], ToyCore::FlatRectangle { width: PI, height: PI }).unwrap();
        assert!(matches!(surface_bracket(&s, 10.0), Err(SpectraError::Domain(_))));
        assert!(weyl_report(&s, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(geometric_grid(0.1, 10.0, 5).is_err());
        assert!(geometric_grid(10.0, 1.0, 5).is_err());
        let g = geometric_grid(100.0, 1e4, 3).unwrap();
        assert!((g[1] - 1000.0).abs() < 1e-9);
        assert_eq!(g[2], 1e4);
    }

    #[test]
    fn fit_detects_order_violation() {
        let lambdas = geometric_grid(100.0, 1e4, 16).unwrap();
        let tame: Vec<f64> = lambdas.iter().map(|&l| 0.7 * remainder_scale(l)).collect();
        assert!(fit_residuals(&lambdas, &tame, 1.5).passed);
        // residual growing like λ^{0.9} outruns √λ ln λ
        let wild: Vec<f64> = lambdas.iter().map(|&l| l.powf(0.9)).collect();
        assert!(!fit_residuals(&lambdas, &wild, 1.5).passed);
    }

    #[test]
    fn small_report_shape() {
        let c = Cusp::with_flux(1.0, 0.0, 0.0, 0.5).unwrap();
        let s = Surface::new(vec![c], ToyCore::ExplicitWeyl { area: 0.0, remainder_coeff: 0.0 }).unwrap();
        let grid = geometric_grid(10.0, 200.0, 6).unwrap();
        let r = weyl_report(&s, &grid).unwrap();
        assert_eq!(r.counts_d.len(), 6);
        assert!(r.counts_d.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.counts_n.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.counts_d.iter().zip(&r.counts_n).all(|(d, n)| d <= n));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        let back: WeylReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
