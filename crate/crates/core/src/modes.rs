//! Fourier-mode operators on the half-line `(α², ∞)`.
//!
//! After the gauge reduction each cusp splits into
//! `P_ℓ = D_t² + 1/4 + (e^t (ℓ+ξ)/L + s b)²` (with orientation `s = ±1`) and
//! the field-free comparison operator `Q_ℓ = D_t² + 1/4 + (ℓ+ξ)² e^{2t}/L²`.

use serde::{Deserialize, Serialize};

use crate::geometry::Cusp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeKind {
    P,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl std::str::FromStr for BoundaryCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" | "d" => Ok(BoundaryCondition::Dirichlet),
            "neumann" | "n" => Ok(BoundaryCondition::Neumann),
            other => Err(format!("unknown boundary condition '{other}'")),
        }
    }
}

/// A half-line Schrödinger operator `-d²/dt² + V(t)` on `(α², ∞)` with a
/// boundary condition at `α²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeOperator {
    pub kind: ModeKind,
    pub ell: i64,
    pub xi: f64,
    pub length: f64,
    pub alpha2: f64,
    /// Ignored for [`ModeKind::Q`].
    pub b: f64,
    pub sign: i8,
    pub bc: BoundaryCondition,
}

impl ModeOperator {
    pub fn p(cusp: &Cusp, ell: i64, bc: BoundaryCondition) -> Self {
        ModeOperator {
            kind: ModeKind::P,
            ell,
            xi: cusp.xi(),
            length: cusp.length(),
            alpha2: cusp.alpha2(),
            b: cusp.b(),
            sign: cusp.sign(),
            bc,
        }
    }

    pub fn q(cusp: &Cusp, ell: i64, bc: BoundaryCondition) -> Self {
        ModeOperator { kind: ModeKind::Q, ..ModeOperator::p(cusp, ell, bc) }
    }

    pub fn with_bc(self, bc: BoundaryCondition) -> Self {
        ModeOperator { bc, ..self }
    }

    /// Signed mode frequency `(ℓ+ξ)/L`.
    pub fn frequency(&self) -> f64 {
        (self.ell as f64 + self.xi) / self.length
    }

    /// The constant inside the square, after folding the sign of `ℓ+ξ` into
    /// it: `V(t) = 1/4 + (|ℓ+ξ| e^t / L + shift)²`.
    pub fn effective_shift(&self) -> f64 {
        match self.kind {
            ModeKind::Q => 0.0,
            ModeKind::P => {
                let s = f64::from(self.sign) * self.b;
                if self.frequency() < 0.0 {
                    -s
                } else {
                    s
                }
            }
        }
    }

    pub fn potential(&self, t: f64) -> f64 {
        let q = self.frequency() * t.exp();
        match self.kind {
            ModeKind::Q => 0.25 + q * q,
            ModeKind::P => {
                let v = q + f64::from(self.sign) * self.b;
                0.25 + v * v
            }
        }
    }

    /// Point of `[α², ∞)` where the potential is smallest.
    pub fn argmin_potential(&self) -> f64 {
        let shift = self.effective_shift();
        let c = self.frequency().abs();
        if shift < 0.0 && c > 0.0 {
            (-shift / c).ln().max(self.alpha2)
        } else {
            self.alpha2
        }
    }

    pub fn min_potential(&self) -> f64 {
        self.potential(self.argmin_potential())
    }

    /// Outermost `t* ≥ α²` with `V(t*) = μ`, or `None` when the potential
    /// stays at or above `μ` on the whole half-line.
    ///
    /// `Q` modes use the closed form; `P` modes bisect on the monotone branch
    /// to the right of the potential minimum.
    pub fn turning_point(&self, mu: f64) -> Option<f64> {
        let c = self.frequency().abs();
        if !(mu > 0.25) || c == 0.0 {
            return None;
        }
        match self.kind {
            ModeKind::Q => {
                let t = 0.5 * ((mu - 0.25) / (c * c)).ln();
                (t >= self.alpha2).then_some(t)
            }
            ModeKind::P => {
                let mut lo = self.argmin_potential();
                if self.potential(lo) >= mu {
                    return None;
                }
                let mut width = 1.0;
                let mut hi = lo + width;
                while self.potential(hi) <= mu {
                    lo = hi;
                    width *= 2.0;
                    hi = lo + width;
                }
                while hi - lo > TURNING_TOL {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.potential(mid) < mu {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(0.5 * (lo + hi))
            }
        }
    }
}

const TURNING_TOL: f64 = 1e-12;

/// A contiguous, possibly empty, range of mode indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeWindow {
    pub lo: i64,
    pub hi: i64,
}

impl ModeWindow {
    pub fn empty() -> Self {
        ModeWindow { lo: 0, hi: -1 }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (self.hi - self.lo + 1) as usize
        }
    }

    pub fn contains(&self, ell: i64) -> bool {
        self.lo <= ell && ell <= self.hi
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }

    /// Window enlarged by `margin` indices on each side. An empty window
    /// grows around the modes closest to `-ξ`, i.e. `ℓ ∈ {-1, 0}`.
    pub fn widened(&self, margin: i64) -> Self {
        if self.is_empty() {
            ModeWindow { lo: -margin, hi: margin - 1 }
        } else {
            ModeWindow { lo: self.lo - margin, hi: self.hi + margin }
        }
    }

    fn hull(a: Self, b: Self) -> Self {
        match (a.is_empty(), b.is_empty()) {
            (true, _) => b,
            (_, true) => a,
            _ => ModeWindow { lo: a.lo.min(b.lo), hi: a.hi.max(b.hi) },
        }
    }
}

/// Integers `ℓ` with `|ℓ+ξ| < bound`, restricted to one side of `-ξ`.
fn side_window(xi: f64, bound: f64, positive: bool) -> ModeWindow {
    if !(bound > 0.0) {
        return ModeWindow::empty();
    }
    let w = if positive {
        ModeWindow { lo: 0, hi: (bound - xi).ceil() as i64 - 1 }
    } else {
        ModeWindow { lo: (-bound - xi).floor() as i64 + 1, hi: -1 }
    };
    if w.is_empty() {
        ModeWindow::empty()
    } else {
        w
    }
}

/// The window `X_λ = { ℓ : e^{α²} |ℓ+ξ| / L < √(λ - 1/4) - |b| }`.
///
/// This is the classical window; for one orientation of the field it can
/// miss modes whose potential dips below `λ` (see [`spectral_window`]).
pub fn mode_window(c: &Cusp, lambda: f64) -> crate::Result<ModeWindow> {
    if !(lambda > 0.25) {
        return Err(crate::SpectraError::Domain(format!("mode window needs λ > 1/4, got {lambda}")));
    }
    let xi = c.xi();
    let bound = ((lambda - 0.25).sqrt() - c.b().abs()) * c.length() * (-c.alpha2()).exp();
    Ok(ModeWindow::hull(side_window(xi, bound, false), side_window(xi, bound, true)))
}

/// Exactly the indices `ℓ` whose `P_ℓ` potential drops below `λ` somewhere
/// on `[α², ∞)`; every other mode has no spectrum below `λ`.
pub fn spectral_window(c: &Cusp, lambda: f64) -> ModeWindow {
    if !(lambda > 0.25) {
        return ModeWindow::empty();
    }
    let xi = c.xi();
    let r = (lambda - 0.25).sqrt();
    let s = f64::from(c.sign()) * c.b();
    let scale = c.length() * (-c.alpha2()).exp();
    let pos = side_window(xi, (r - s) * scale, true);
    let neg = side_window(xi, (r + s) * scale, false);
    ModeWindow::hull(neg, pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use BoundaryCondition::*;

    fn cusp(l: f64, a: f64, b: f64, xi: f64) -> Cusp {
        Cusp::with_flux(l, a, b, xi).unwrap()
    }

    #[test]
    fn potential_examples() {
        let c = cusp(1.0, 0.0, 0.0, 0.5);
        assert!((ModeOperator::p(&c, 0, Dirichlet).potential(0.0) - 0.5).abs() < 1e-15);
        let q = ModeOperator::q(&c, 1, Dirichlet);
        assert!((q.potential(2f64.ln()) - 9.25).abs() < 1e-13);
        for ell in -4..4 {
            for t in [0.0, 0.3, 1.7, 3.0] {
                let p = ModeOperator::p(&c, ell, Dirichlet).potential(t);
                let q = ModeOperator::q(&c, ell, Dirichlet).potential(t);
                assert_eq!(p, q);
            }
        }
    }

    #[test]
    fn window_examples() {
        let w = mode_window(&cusp(1.0, 0.0, 0.0, 0.5), 4.25).unwrap();
        assert_eq!((w.lo, w.hi), (-2, 1));
        assert!(mode_window(&cusp(1.0, 0.0, 10.0, 0.5), 4.25).unwrap().is_empty());
        let w = mode_window(&cusp(2.0, 1.0, 0.0, 0.3), 0.25 + std::f64::consts::E.powi(2)).unwrap();
        assert_eq!((w.lo, w.hi), (-2, 1));
        assert!(mode_window(&cusp(1.0, 0.0, 0.0, 0.5), 0.25).is_err());
    }

    #[test]
    fn window_symmetric_at_half_flux() {
        for lambda in [1.0, 4.3, 17.0, 250.0] {
            let w = mode_window(&cusp(1.3, 0.2, 0.7, 0.5), lambda).unwrap();
            for ell in -30..30 {
                assert_eq!(w.contains(ell), w.contains(-1 - ell));
            }
        }
    }

    #[test]
    fn spectral_window_is_exact() {
        for (b, sign) in [(0.0, 1), (1.0, 1), (5.0, 1), (5.0, -1), (-2.0, 1)] {
            let c = cusp(1.0, 0.0, b, 0.3).with_sign(sign).unwrap();
            for lambda in [0.3, 2.0, 30.0, 400.0] {
                let w = spectral_window(&c, lambda);
                for ell in -80..80 {
                    let m = ModeOperator::p(&c, ell, Dirichlet);
                    assert_eq!(w.contains(ell), m.min_potential() < lambda, "b={b} ell={ell} λ={lambda}");
                }
                if lambda > 0.25 {
                    let x = mode_window(&c, lambda).unwrap();
                    assert!(x.is_empty() || (w.contains(x.lo) && w.contains(x.hi)));
                }
            }
        }
    }

    #[test]
    fn turning_point_examples() {
        let c = cusp(1.0, 0.0, 0.0, 0.5);
        let t = ModeOperator::q(&c, 0, Dirichlet).turning_point(1.25).unwrap();
        assert!((t - 2f64.ln()).abs() < 1e-14);
        assert!(ModeOperator::q(&c, 5, Dirichlet).turning_point(0.5).is_none());

        // (e^t/2 + 1)² = 2 has its root at t = ln(2(√2 - 1)) < 0 = α².
        let c = cusp(1.0, 0.0, 1.0, 0.5);
        let p = ModeOperator::p(&c, 0, Dirichlet);
        let root = (2.0 * (2f64.sqrt() - 1.0)).ln();
        assert!((0.25 + (root.exp() / 2.0 + 1.0).powi(2) - 2.25).abs() < 1e-12);
        assert!(root < 0.0);
        assert!(p.turning_point(2.25).is_none());
    }

    #[test]
    fn p_turning_point_solves_level() {
        for (b, sign, ell) in [(1.0, 1, 0), (5.0, 1, -3), (5.0, -1, 2), (2.0, 1, -1)] {
            let c = cusp(1.0, 0.0, b, 0.3).with_sign(sign).unwrap();
            let m = ModeOperator::p(&c, ell, Dirichlet);
            for mu in [3.0, 40.0, 900.0] {
                if let Some(t) = m.turning_point(mu) {
                    assert!(t >= m.alpha2);
                    assert!((m.potential(t) - mu).abs() < 1e-8 * mu.max(1.0) * 50.0);
                    // outermost: potential stays above μ further out
                    for dt in [0.01, 0.1, 1.0] {
                        assert!(m.potential(t + dt) > mu);
                    }
                } else {
                    assert!(m.min_potential() >= mu);
                }
            }
        }
    }

    #[test]
    fn isospectral_relabelling() {
        let c = cusp(1.4, 0.3, 2.5, 0.27);
        let r = c.reflected();
        assert!((r.xi() - (1.0 - c.xi())).abs() < 1e-14);
        for ell in -6..6 {
            let a = ModeOperator::p(&c, ell, Dirichlet);
            let b = ModeOperator::p(&r, -1 - ell, Dirichlet);
            for t in [0.3, 0.9, 2.0, 4.0] {
                let (va, vb) = (a.potential(t), b.potential(t));
                assert!((va - vb).abs() <= 1e-12 * va.max(1.0));
            }
        }
    }

    #[test]
    fn q_monotone() {
        let c = cusp(1.0, 0.0, 0.0, 0.3);
        for ell in -5..5 {
            let m = ModeOperator::q(&c, ell, Neumann);
            let mut prev = 0.0;
            for i in 0..50 {
                let v = m.potential(i as f64 * 0.1);
                assert!(v > prev);
                prev = v;
            }
        }
        let t = 0.7;
        let v = |ell| ModeOperator::q(&c, ell, Neumann).potential(t);
        assert!(v(0) < v(-1) && v(-1) < v(1) && v(1) < v(-2) && v(-2) < v(2));
    }

    #[test]
    fn pointwise_comparison_sandwich() {
        // |P - Q| ≤ 2|b|√Q + b² ≤ (2|b| + b²)√Q wherever Q ≥ 1.
        for b in [0.5, 1.0, 5.0] {
            let cst = 2.0 * b + b * b;
            for sign in [1, -1] {
                let c = cusp(1.0, 0.0, b, 0.5).with_sign(sign).unwrap();
                for ell in -6..6 {
                    let p = ModeOperator::p(&c, ell, Dirichlet);
                    let q = ModeOperator::q(&c, ell, Dirichlet);
                    for i in 0..200 {
                        let t = i as f64 * 0.03;
                        let (vp, vq) = (p.potential(t), q.potential(t));
                        if vq >= 1.0 {
                            assert!(vq - cst * vq.sqrt() <= vp && vp <= vq + cst * vq.sqrt());
                        }
                    }
                }
            }
        }
    }
}
