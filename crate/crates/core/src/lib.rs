//! Spectral analysis of a free particle on a circle with one point interaction.
//!
//! The interaction is described by a `U(2)` characteristic matrix acting on the
//! boundary values at the two sides of the defect. The crate covers the forward
//! spectrum, recovery of the spectrum-determining parameters from a spectrum,
//! closed-form heat and propagation kernels, and the circle with a second
//! interaction at the antipodal point.

// Negated comparisons are the NaN-rejecting form of each guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod inverse;
pub mod kernels;
pub mod roots;
pub mod spectrum;
pub mod twopoint;
pub mod u2core;

pub use error::{Error, Result};
pub use spectrum::{Level, Sector, Spectrum};
pub use u2core::{CharacteristicMatrix, Geometry, SpectralTriple, C64};
