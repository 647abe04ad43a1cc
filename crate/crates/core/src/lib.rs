//! Coupled-mode models for the periodic Gross-Pitaevskii equation.
//!
//! The crate derives coupled-mode equations (CMEs) for wave packets built from
//! resonant Bloch carriers, analyzes the CME dispersion relation for spectral
//! gaps, computes standing gap solitons by an asymptotic seed plus Petviashvili
//! iteration, and validates the envelope approximation by direct time
//! evolution of both the CME system and the full Gross-Pitaevskii equation.
//!
//! Normalization convention used throughout: the inner product on the torus is
//! `<f, g> = (2π)^{-d} ∫ f conj(g) dx`, so plane waves `e^{i η·x}` are
//! orthonormal and a Bloch mode with plane-wave coefficients `c_η` has unit
//! norm exactly when `Σ |c_η|² = 1`. All torus quadratures (the coupling
//! matrix κ and cubic tensor γ) share this convention.

pub mod bloch;
pub mod cme;
pub mod dispersion;
pub mod dynamics;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod nls_seed;
pub mod petviashvili;
pub mod potential;
pub mod rational;
pub mod util;

pub use error::{Error, Result};
