//! Numerical laboratory for the damped piezoelectric beam with magnetic
//! effects in the Lorenz gauge.
//!
//! Layers, bottom up: [`model`] (parameters and continuous residuals),
//! [`discretization`] (grids and semi-discrete operators), [`timeintegrator`]
//! (BDF2), [`diagnostics`] (energy and decay fits), [`spectral`]
//! (eigenvalues, resolvent norms, resonance), [`bounds`] (explicit resolvent
//! constants) and [`cli`] (configuration, presets and artifacts).

pub mod bounds;
pub mod cli;
pub mod diagnostics;
pub mod discretization;
pub mod linalg;
pub mod model;
pub mod spectral;
pub mod timeintegrator;
