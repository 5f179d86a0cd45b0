//! Cusp and surface data model, flux reduction and the discreteness verdict.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectraError};
use crate::weyl::ToyCore;

/// Reduced fluxes closer than this to an integer are treated as integral.
pub const FLUX_INTEGER_TOL: f64 = 1e-12;

/// Below this distance from an integer the counting constants degrade and a
/// warning is logged.
pub const FLUX_WARN_TOL: f64 = 1e-3;

/// One cuspidal end `S¹ × (α², ∞)` with metric `L² e^{-2t} dθ² + dt²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCusp", into = "RawCusp")]
pub struct Cusp {
    length: f64,
    alpha2: f64,
    b: f64,
    holonomy: f64,
    sign: i8,
}

#[derive(Serialize, Deserialize)]
struct RawCusp {
    #[serde(rename = "L")]
    length: f64,
    alpha2: f64,
    b: f64,
    holonomy: f64,
    #[serde(default = "default_sign")]
    sign: i8,
}

fn default_sign() -> i8 {
    1
}

impl TryFrom<RawCusp> for Cusp {
    type Error = SpectraError;

    fn try_from(raw: RawCusp) -> Result<Self> {
        Cusp::new(raw.length, raw.alpha2, raw.b, raw.holonomy)?.with_sign(raw.sign)
    }
}

impl From<Cusp> for RawCusp {
    fn from(c: Cusp) -> Self {
        RawCusp { length: c.length, alpha2: c.alpha2, b: c.b, holonomy: c.holonomy, sign: c.sign }
    }
}

impl Cusp {
    pub fn new(length: f64, alpha2: f64, b: f64, holonomy: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(SpectraError::Domain(format!("cusp length L must be positive, got {length}")));
        }
        for (name, v) in [("alpha2", alpha2), ("b", b), ("holonomy", holonomy)] {
            if !v.is_finite() {
                return Err(SpectraError::Domain(format!("cusp {name} must be finite, got {v}")));
            }
        }
        Ok(Cusp { length, alpha2, b, holonomy, sign: 1 })
    }

    /// Cusp described by its reduced flux instead of the raw holonomy.
    pub fn with_flux(length: f64, alpha2: f64, b: f64, xi: f64) -> Result<Self> {
        Cusp::new(length, alpha2, b, TAU * xi)
    }

    pub fn with_sign(mut self, sign: i8) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(SpectraError::Domain(format!("sign must be +1 or -1, got {sign}")));
        }
        self.sign = sign;
        Ok(self)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn holonomy(&self) -> f64 {
        self.holonomy
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Reduced flux `ξ ∈ [0, 1)`.
    pub fn xi(&self) -> f64 {
        reduced_flux(self.holonomy)
    }

    /// Distance of the flux from the integers, `inf_k |ξ - k|`.
    pub fn flux_gap(&self) -> f64 {
        let xi = self.xi();
        xi.min(1.0 - xi)
    }

    /// True when the holonomy class is integral, i.e. the cusp carries
    /// essential spectrum.
    pub fn is_integral(&self) -> bool {
        self.xi() == 0.0
    }

    pub fn area(&self) -> f64 {
        cusp_area(self)
    }

    /// The same cusp with holonomy `h -> -h` and the orientation flipped;
    /// its mode family is a relabelling of this one.
    pub fn reflected(&self) -> Cusp {
        Cusp { holonomy: -self.holonomy, sign: -self.sign, ..*self }
    }
}

/// `2π L e^{-α²}`.
pub fn cusp_area(c: &Cusp) -> f64 {
    TAU * c.length * (-c.alpha2).exp()
}

/// Holonomy reduced to `[0, 1)` so that `2πξ - holonomy ∈ 2πZ`.
///
/// Values within [`FLUX_INTEGER_TOL`] of an integer snap to exactly 0.
pub fn reduced_flux(holonomy: f64) -> f64 {
    let x = holonomy / TAU;
    let xi = x - x.floor();
    if xi < FLUX_INTEGER_TOL || (1.0 - xi) < FLUX_INTEGER_TOL {
        0.0
    } else {
        xi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Discrete,
    /// Essential spectrum `[bottom, ∞)`; `integral_cusps` holds the
    /// zero-based indices of the cusps with integral holonomy.
    Essential {
        bottom: f64,
        integral_cusps: Vec<usize>,
    },
}

impl Verdict {
    pub fn is_discrete(&self) -> bool {
        matches!(self, Verdict::Discrete)
    }
}

/// A finite-area surface: a compact core plus one or more cusps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSurface", into = "RawSurface")]
pub struct Surface {
    cusps: Vec<Cusp>,
    core: ToyCore,
}

#[derive(Serialize, Deserialize)]
struct RawSurface {
    cusps: Vec<Cusp>,
    core: ToyCore,
}

impl TryFrom<RawSurface> for Surface {
    type Error = SpectraError;

    fn try_from(raw: RawSurface) -> Result<Self> {
        Surface::new(raw.cusps, raw.core)
    }
}

impl From<Surface> for RawSurface {
    fn from(s: Surface) -> Self {
        RawSurface { cusps: s.cusps, core: s.core }
    }
}

impl Surface {
    pub fn new(cusps: Vec<Cusp>, core: ToyCore) -> Result<Self> {
        if cusps.is_empty() {
            return Err(SpectraError::Domain("a surface needs at least one cusp".into()));
        }
        core.validate()?;
        for (j, c) in cusps.iter().enumerate() {
            if !c.is_integral() && c.flux_gap() < FLUX_WARN_TOL {
                log::warn!(
                    "cusp {j}: flux {} is within {FLUX_WARN_TOL} of an integer; counting constants degrade",
                    c.xi()
                );
            }
        }
        let s = Surface { cusps, core };
        let area = s.total_area();
        if !(area.is_finite() && area > 0.0) {
            return Err(SpectraError::Domain(format!("total area must be positive, got {area}")));
        }
        Ok(s)
    }

    /// One cusp `(L, α², b) = (1, 0, 0)` with half-integral flux glued to a
    /// `π × π` flat rectangle. Used when no surface file is given.
    pub fn reference() -> Self {
        let cusp = Cusp::with_flux(1.0, 0.0, 0.0, 0.5).expect("valid reference cusp");
        Surface::new(vec![cusp], ToyCore::FlatRectangle { width: std::f64::consts::PI, height: std::f64::consts::PI })
            .expect("valid reference surface")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Surface::from_json(&text)
    }

    pub fn cusps(&self) -> &[Cusp] {
        &self.cusps
    }

    pub fn core(&self) -> &ToyCore {
        &self.core
    }

    pub fn total_area(&self) -> f64 {
        self.core.area() + self.cusps.iter().map(cusp_area).sum::<f64>()
    }
}

/// Classifies the spectrum: discrete iff no cusp has integral holonomy,
/// otherwise essential from `1/4 + min b_j²` over the integral cusps.
pub fn discreteness_verdict(s: &Surface) -> Verdict {
    let integral: Vec<usize> = s.cusps.iter().enumerate().filter(|(_, c)| c.is_integral()).map(|(j, _)| j).collect();
    if integral.is_empty() {
        return Verdict::Discrete;
    }
    let min_b2 = integral.iter().map(|&j| s.cusps[j].b * s.cusps[j].b).fold(f64::INFINITY, f64::min);
    Verdict::Essential { bottom: 0.25 + min_b2, integral_cusps: integral }
}
