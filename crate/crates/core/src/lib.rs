//! Linear cocycles over hyperbolic base dynamics.
//!
//! The crate estimates Lyapunov exponents of matrix cocycles over hyperbolic
//! toral automorphisms and full shifts, and compares them with the exponents
//! and norm growth rates observed at periodic points. The constructive pieces
//! behind that comparison are exposed individually: exact orbit closing,
//! Lyapunov norms and Pesin-set membership, cone invariance along shadowing
//! orbits, subadditive traces and good times.
//!
//! Module map:
//! - [`base`]: base maps, metric, recurrence, closing, periodic points.
//! - [`cocycle`]: cocycle families, products, exterior powers, Hölder data.
//! - [`exponents`]: spectra, norm exponents, Oseledets splitting, good times.
//! - [`pesin`]: Lyapunov norms, Pesin sets, cones, drift bounds.
//! - [`harness`]: configuration, experiments, CSV output.

pub mod base;
pub mod cocycle;
pub mod error;
pub mod exponents;
pub mod harness;
pub mod linalg;
pub mod pesin;

pub use error::{Error, Result};
