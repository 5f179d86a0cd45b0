//! Eigenvalue counting for magnetic Laplacians on hyperbolic cusps.
//!
//! A cusp `S¹ × (α², ∞)` with metric `L² e^{-2t} dθ² + dt²` carrying a
//! constant magnetic field `b` and holonomy `[A]` decomposes, after a gauge
//! reduction and a Fourier expansion in `θ`, into the half-line operators
//!
//! ```text
//! P_ℓ = D_t² + 1/4 + (e^t (ℓ + ξ)/L ± b)²,     Q_ℓ = D_t² + 1/4 + (ℓ + ξ)² e^{2t} / L²
//! ```
//!
//! where `ξ ∈ [0, 1)` is the reduced flux. When every cusp has `ξ ≠ 0` the
//! spectrum is discrete, and the counting function obeys the Weyl law
//! `N(λ) = λ|M|/4π + O(√λ ln λ)`.
//!
//! The crate counts eigenvalues of each mode by Prüfer-angle shooting
//! ([`counting`]), sums modes into cusp counts, brackets a whole surface
//! between Dirichlet and Neumann decouplings ([`weyl`]), and evaluates the
//! semiclassical phase integrals that govern the asymptotics ([`phase`]).
//! [`oracle`] is an independent finite-difference reference used only for
//! validation.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counting;
pub mod error;
pub mod geometry;
pub mod modes;
pub mod ode;
pub mod oracle;
pub mod phase;
pub mod quadrature;
pub mod verify;
pub mod weyl;

pub use counting::{count_below, cusp_count, eigenvalues_below, CountResult};
pub use error::{Result, SpectraError};
pub use geometry::{cusp_area, discreteness_verdict, reduced_flux, Cusp, Surface, Verdict};
pub use modes::{BoundaryCondition, ModeKind, ModeOperator, ModeWindow};
pub use weyl::{core_count, surface_bracket, weyl_report, ToyCore, WeylReport};
