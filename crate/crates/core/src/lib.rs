//! Spectra, PT-symmetry-breaking thresholds and phase diagrams for a particle on
//! an annulus with `1/ρ²` gain-loss potentials `−iβ cos(nφ)/ρ²` and Hermitian
//! potentials `−λ cos(pφ)/ρ²`.
//!
//! The `1/ρ²` form separates the problem: the polar equation becomes the
//! eigenproblem of a banded complex-symmetric matrix in the `e^{imφ}` basis
//! ([`operator`], [`eigen`]), which alone decides whether the spectrum is real
//! ([`threshold`], [`phasemap`]). The radial equation is Bessel's equation of
//! order `α = √α²` ([`radial`]), and [`field`] assembles the eigenfunctions.

pub mod eigen;
pub mod error;
pub mod field;
pub mod matrix;
pub mod operator;
pub mod phasemap;
pub mod radial;
pub mod threshold;

pub use error::{Error, Result};
pub use matrix::CMatrix;
