//! Filtered exponential wave integrator for the nonlinear Schrödinger equation
//!
//! ```text
//! i ∂_t ψ = -Δψ + V ψ + β |ψ|^{2σ} ψ
//! ```
//!
//! on periodic boxes in one to three dimensions, with potentials that may be
//! singular (inverse powers such as Coulomb, or rough Fourier-generated
//! fields).

pub mod config;
pub mod error;
pub mod ewi;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod groundstate;
pub mod io;
pub mod multiplier;
pub mod norm;
pub mod potential;

pub use error::{Error, Result};
pub use field::SpectralField;
pub use grid::{Grid, GridSpec};
pub use multiplier::{FilterShape, Multiplier};
pub use norm::{norm, NormKind};
pub use potential::{PotentialField, PotentialSpec, RealizeOptions, SingularTreatment};
