//! Interpolation in weighted Bergman spaces of the unit disk, numerically.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: pseudohyperbolic metric, Möbius involutions, disk
//!   regions, quadrature grids and finite-difference Wirtinger operators.
//! * [`weights`]: weights `φ` with bounded invariant Laplacian, the
//!   `α`-shift, radial means and the harmonic normalization `τ_a = φ − h_a`.
//! * [`sequences`]: finite multisets of disk points and the `k_Z` function.
//! * [`density`]: the density functionals `S`, `S_φ` and their uniform
//!   estimate, by circle means and by invariant-Laplacian integrals.
//! * [`schemes`]: interpolation schemes, admissibility, coset norms.
//! * [`products`]: the regularized product `Ψ_Z` and division by it.
//! * [`analysis`]: the `∂̄`-solver, the maximal function `m_q`, the global
//!   interpolation solver and O-interpolation.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod density;
pub mod error;
pub mod geometry;
pub mod lsq;
pub mod potential;
pub mod products;
pub mod schemes;
pub mod sequences;
pub mod weights;

pub use error::{Error, Result};
pub use geometry::{mobius, psh_diameter, psh_distance, DiskGrid, DiskPoint, DiskRegion, MeasureTag};
pub use sequences::PointSet;
pub use weights::Weight;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
