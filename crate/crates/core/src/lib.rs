//! Regional boundary-gradient sensor analysis for the heat equation on a
//! rectangle with Dirichlet walls.
//!
//! The state is expanded in the Dirichlet–Laplacian eigenbasis
//! ([`spectral`]), sensors are linear functionals on that basis
//! ([`sensing`]), and the strategic-sensor questions are answered in
//! [`analysis`]: the per-eigenvalue rank test, the truncated observability
//! Gramian, the rational-locus rules for rectangles, the internal collar
//! crossing check and location scans. [`simulate`] and [`reconstruct`]
//! close the loop by generating outputs and recovering the initial gradient
//! trace on a boundary region.

pub mod analysis;
pub mod error;
mod linalg;
pub mod quadrature;
pub mod reconstruct;
pub mod sensing;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use quadrature::{GaussLegendre, QuadratureSpec};
pub use spectral::{
    boundary_trace_gradient, build_mode_set, eval_eigenfunction, eval_eigengradient,
    is_simple_spectrum, BoundaryRegion, EigenGroup, Mode, ModeIndex, ModeSet, RectDomain, Side,
};
